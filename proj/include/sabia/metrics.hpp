#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "sabia/embed.hpp"
#include "sabia/text.hpp"

namespace sabia {

struct RougeScore {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Harmonic mean, 0 when both inputs are 0.
double f1_of(double precision, double recall) noexcept;

/// Tokens mapped to integer ids; equal tokens share an id.
using IdSpan = std::span<const std::uint32_t>;

struct InternedPair {
  std::vector<std::uint32_t> cand;
  std::vector<std::uint32_t> ref;
};

/// Numbers distinct tokens 0, 1, 2, ... in order of first occurrence over
/// `cand` followed by `ref`. The string-level metrics below run on these ids.
InternedPair intern_tokens(const TokenSeq& cand, const TokenSeq& ref);

/// Sum over distinct n-grams of min(count in cand, count in ref).
/// Throws ConfigError when n < 1.
std::size_t clipped_ngram_matches(IdSpan cand, IdSpan ref, int n);
RougeScore rouge_n_ids(IdSpan cand, IdSpan ref, int n);
std::size_t lcs_length_ids(IdSpan a, IdSpan b);
RougeScore rouge_l_ids(IdSpan cand, IdSpan ref);

/// Clipped n-gram overlap. Throws ConfigError when n < 1.
RougeScore rouge_n(const TokenSeq& cand, const TokenSeq& ref, int n);

/// Token-level longest common subsequence.
RougeScore rouge_l(const TokenSeq& cand, const TokenSeq& ref);

/// Length of the longest common subsequence.
std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b);

/// Sentence BLEU with max order min(4, |cand|), uniform weights, add-one
/// smoothing for orders >= 2 that have no match, and the usual brevity penalty.
double bleu(const TokenSeq& cand, const TokenSeq& ref);

/// Maps a token to its stem for the METEOR stem stage.
using Stemmer = std::function<std::string(const std::string&)>;

struct MeteorResult {
  std::size_t matches = 0;
  std::size_t chunks = 0;
  double precision = 0.0;
  double recall = 0.0;
  double fmean = 0.0;
  double penalty = 0.0;
  double score = 0.0;
  /// False when the alignment search hit its node budget and the result is
  /// the best alignment found rather than a proven minimum.
  bool exact_alignment = true;
};

/// Node budget of the chunk-minimizing alignment search.
inline constexpr std::size_t kMeteorSearchBudget = 2'000'000;

/// METEOR with exact (and optional stem) unigram matching, Fmean =
/// PR / (0.9P + 0.1R) and fragmentation penalty 0.5 (chunks/m)^3. Among
/// alignments with the maximum number of matches the one with the fewest
/// chunks is used.
MeteorResult meteor_detail(const TokenSeq& cand, const TokenSeq& ref, const Stemmer& stemmer = {},
                           std::size_t search_budget = kMeteorSearchBudget);
double meteor(const TokenSeq& cand, const TokenSeq& ref, const Stemmer& stemmer = {});

/// Cosine of the two texts' embeddings. Throws ConfigError("empty text")
/// when either text has no tokens.
double semantic_sim(const Embedder& embedder, const std::string& cand_text, const std::string& ref_text);

}  // namespace sabia
