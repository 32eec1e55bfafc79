#include "sabia/metrics.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <optional>
#include <cmath>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "sabia/error.hpp"

namespace sabia {
namespace {

// Lexicographic order of the n-grams starting at a and b.
struct GramLess {
  IdSpan seq;
  std::size_t n;
  bool operator()(std::uint32_t a, std::uint32_t b) const {
    return std::lexicographical_compare(seq.begin() + a, seq.begin() + a + n, seq.begin() + b, seq.begin() + b + n);
  }
};

int compare_grams(IdSpan x, std::size_t i, IdSpan y, std::size_t j, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    if (x[i + k] != y[j + k]) {
      return x[i + k] < y[j + k] ? -1 : 1;
    }
  }
  return 0;
}

void sorted_gram_starts(IdSpan seq, std::size_t n, std::vector<std::uint32_t>& out) {
  out.clear();
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    out.push_back(static_cast<std::uint32_t>(i));
  }
  std::sort(out.begin(), out.end(), GramLess{seq, n});
}

void sort_keys(std::uint64_t* keys, std::size_t count) {
  if (count > 32) {
    std::sort(keys, keys + count);
    return;
  }
  for (std::size_t i = 1; i < count; ++i) {
    const std::uint64_t k = keys[i];
    std::size_t j = i;
    for (; j > 0 && keys[j - 1] > k; --j) {
      keys[j] = keys[j - 1];
    }
    keys[j] = k;
  }
}

constexpr std::size_t kShortGrams = 64;

template <typename Key>
void gram_keys(IdSpan seq, std::size_t n, unsigned width, Key* out) {
  for (std::size_t i = 0; i + n <= seq.size(); ++i) {
    std::uint64_t key = 0;
    for (std::size_t k = 0; k < n; ++k) {
      key = (key << width) | seq[i + k];
    }
    out[i] = static_cast<Key>(key);
  }
}

constexpr unsigned kTableBits = 12;
constexpr std::size_t kTableSize = std::size_t{1} << kTableBits;

// Calls fn(key, fits) for every n-gram of seq with each id masked to `width`
// bits; fits is false when some id of the gram is wider. Returns the OR of all ids.
template <std::size_t N = 0, typename Fn>
std::uint32_t for_each_gram_key(IdSpan seq, std::size_t n, unsigned width, Fn&& fn) {
  if constexpr (N != 0) n = N;
  const std::uint32_t low = (std::uint32_t{1} << width) - 1;
  const std::uint64_t mask = (std::uint64_t{1} << (width * n)) - 1;
  std::uint32_t all = 0;
  std::uint64_t key = 0;
  std::size_t fit_from = 0;  // one past the last wide id
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const std::uint32_t id = seq[i];
    all |= id;
    fit_from = id > low ? i + 1 : fit_from;
    key = ((key << width) | (id & low)) & mask;
    if (i + 1 >= n) fn(key, fit_from + n <= i + 1);
  }
  return all;
}

// Counting through a direct-address table that is all zero between calls,
// kTableBits / n bits per id. nullopt when an id of cand does not fit.
template <std::size_t N = 0>
std::optional<std::size_t> table_matches(IdSpan cand, IdSpan ref, std::size_t n) {
  thread_local std::array<std::uint32_t, kTableSize> counts{};
  auto& table = counts;
  const unsigned width = kTableBits / static_cast<unsigned>(n);
  const auto clear = [&] { for_each_gram_key<N>(cand, n, width, [&](std::uint64_t key, bool) { table[key] = 0; }); };
  const std::uint32_t all = for_each_gram_key<N>(cand, n, width, [&](std::uint64_t key, bool) { ++table[key]; });
  if (all >> width) {
    clear();
    return std::nullopt;
  }
  std::size_t m = 0;
  for_each_gram_key<N>(ref, n, width, [&](std::uint64_t key, bool fits) {
    const std::uint32_t c = fits ? table[key] : 0;
    m += c > 0 ? 1 : 0;
    if (c > 0) table[key] = c - 1;
  });
  clear();
  return m;
}

// Gram i of cand is matched iff fewer equal grams precede it in cand than
// occur in ref. Quadratic, used for short inputs only.
template <typename Key>
std::size_t short_matches(IdSpan cand, IdSpan ref, std::size_t n, unsigned width) {
  Key ck[kShortGrams];
  Key rk[kShortGrams];
  const std::size_t nc = cand.size() - n + 1;
  const std::size_t nr = ref.size() - n + 1;
  gram_keys(cand, n, width, ck);
  gram_keys(ref, n, width, rk);
  std::size_t m = 0;
  for (std::size_t i = 0; i < nc; ++i) {
    unsigned before = 0;
    for (std::size_t j = 0; j < i; ++j) before += ck[j] == ck[i] ? 1u : 0u;
    unsigned in_ref = 0;
    for (std::size_t j = 0; j < nr; ++j) in_ref += rk[j] == ck[i] ? 1u : 0u;
    m += before < in_ref ? 1 : 0;
  }
  return m;
}

// Each n-gram packed into one integer; nullopt when it needs more than 64 bits.
std::optional<std::size_t> packed_matches(IdSpan cand, IdSpan ref, std::size_t n, unsigned width) {
  if (n > 64 || width * n > 64) {
    return std::nullopt;
  }
  const unsigned bits = width * static_cast<unsigned>(n);
  const std::size_t nc = cand.size() - n + 1;
  const std::size_t nr = ref.size() - n + 1;
  if (nc <= kShortGrams && nr <= kShortGrams) {
    return bits <= 32 ? short_matches<std::uint32_t>(cand, ref, n, width)
                      : short_matches<std::uint64_t>(cand, ref, n, width);
  }
  std::vector<std::uint64_t> cbuf(nc);
  std::vector<std::uint64_t> rbuf(nr);
  std::uint64_t* ck = cbuf.data();
  std::uint64_t* rk = rbuf.data();
  gram_keys(cand, n, width, ck);
  gram_keys(ref, n, width, rk);
  sort_keys(ck, nc);
  sort_keys(rk, nr);
  std::size_t m = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < nc && j < nr) {
    if (ck[i] < rk[j]) {
      ++i;
    } else if (rk[j] < ck[i]) {
      ++j;
    } else {
      ++m;
      ++i;
      ++j;
    }
  }
  return m;
}

// Chunk-minimizing alignment search over a maximum matching.
class AlignmentSearch {
 public:
  AlignmentSearch(std::vector<int> cand, std::vector<int> ref, int n_keys, std::size_t budget)
      : cand_(std::move(cand)), ref_(std::move(ref)), budget_(budget) {
    std::vector<std::size_t> cc(static_cast<std::size_t>(n_keys), 0);
    std::vector<std::size_t> rc(static_cast<std::size_t>(n_keys), 0);
    for (const int k : cand_) ++cc[static_cast<std::size_t>(k)];
    for (const int k : ref_) ++rc[static_cast<std::size_t>(k)];
    need_.resize(static_cast<std::size_t>(n_keys));
    skip_.resize(static_cast<std::size_t>(n_keys));
    ref_positions_.resize(static_cast<std::size_t>(n_keys));
    for (std::size_t k = 0; k < cc.size(); ++k) {
      need_[k] = std::min(cc[k], rc[k]);
      skip_[k] = cc[k] - need_[k];
      matches_ += need_[k];
    }
    for (std::size_t j = 0; j < ref_.size(); ++j) {
      ref_positions_[static_cast<std::size_t>(ref_[j])].push_back(j);
    }
    // suffix_[i]: number of positions i' >= i (i' >= 1) whose bigram with i'-1 occurs in ref.
    std::unordered_set<long long> ref_bigrams;
    for (std::size_t j = 0; j + 1 < ref_.size(); ++j) {
      ref_bigrams.insert(bigram(ref_[j], ref_[j + 1]));
    }
    suffix_.assign(cand_.size() + 2, 0);
    for (std::size_t i = cand_.size(); i-- > 1;) {
      suffix_[i] = suffix_[i + 1] + (ref_bigrams.count(bigram(cand_[i - 1], cand_[i])) ? 1 : 0);
    }
    used_.assign(ref_.size(), false);
  }

  std::size_t matches() const noexcept { return matches_; }

  // Returns the maximum number of links (adjacent pairs preserved in both sequences).
  std::size_t run(std::size_t seed_links) {
    best_links_ = seed_links;
    dfs(0, -1, 0);
    return best_links_;
  }

  bool exhausted() const noexcept { return nodes_ > budget_; }

 private:
  static long long bigram(int a, int b) { return (static_cast<long long>(a) << 32) | static_cast<unsigned>(b); }

  void dfs(std::size_t i, long long prev_j, std::size_t links) {
    if (++nodes_ > budget_) {
      return;
    }
    if (i == cand_.size()) {
      if (links > best_links_) {
        best_links_ = links;
      }
      return;
    }
    const auto key = static_cast<std::size_t>(cand_[i]);
    const bool extend_possible = prev_j >= 0 && static_cast<std::size_t>(prev_j + 1) < ref_.size() &&
                                 ref_[static_cast<std::size_t>(prev_j + 1)] == cand_[i] &&
                                 !used_[static_cast<std::size_t>(prev_j + 1)] && need_[key] > 0;
    const std::size_t bound = links + suffix_[i + 1] + (extend_possible ? 1 : 0);
    if (bound <= best_links_) {
      return;
    }
    if (need_[key] > 0) {
      if (extend_possible) {
        take(i, static_cast<std::size_t>(prev_j + 1), links + 1);
      }
      for (const std::size_t j : ref_positions_[key]) {
        if (used_[j] || (extend_possible && j == static_cast<std::size_t>(prev_j + 1))) {
          continue;
        }
        take(i, j, links);
        if (nodes_ > budget_) {
          return;
        }
      }
    }
    if (skip_[key] > 0) {
      --skip_[key];
      dfs(i + 1, -1, links);
      ++skip_[key];
    }
  }

  void take(std::size_t i, std::size_t j, std::size_t links) {
    const auto key = static_cast<std::size_t>(cand_[i]);
    used_[j] = true;
    --need_[key];
    dfs(i + 1, static_cast<long long>(j), links);
    ++need_[key];
    used_[j] = false;
  }

  std::vector<int> cand_;
  std::vector<int> ref_;
  std::size_t budget_;
  std::vector<std::size_t> need_;
  std::vector<std::size_t> skip_;
  std::vector<std::vector<std::size_t>> ref_positions_;
  std::vector<std::size_t> suffix_;
  std::vector<bool> used_;
  std::size_t matches_ = 0;
  std::size_t best_links_ = 0;
  std::size_t nodes_ = 0;
};

// Greedy seed: repeatedly align the longest common run of unmatched positions.
std::size_t greedy_links(const std::vector<int>& cand, const std::vector<int>& ref) {
  std::vector<bool> cu(cand.size(), false);
  std::vector<bool> ru(ref.size(), false);
  std::size_t links = 0;
  while (true) {
    std::size_t best_len = 0;
    std::size_t best_i = 0;
    std::size_t best_j = 0;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (cu[i]) continue;
      for (std::size_t j = 0; j < ref.size(); ++j) {
        if (ru[j] || cand[i] != ref[j]) continue;
        std::size_t len = 0;
        while (i + len < cand.size() && j + len < ref.size() && !cu[i + len] && !ru[j + len] &&
               cand[i + len] == ref[j + len]) {
          ++len;
        }
        if (len > best_len) {
          best_len = len;
          best_i = i;
          best_j = j;
        }
      }
    }
    if (best_len == 0) {
      break;
    }
    for (std::size_t d = 0; d < best_len; ++d) {
      cu[best_i + d] = true;
      ru[best_j + d] = true;
    }
    links += best_len - 1;
  }
  return links;
}

}  // namespace

double f1_of(double precision, double recall) noexcept {
  if (precision + recall <= 0.0) {
    return 0.0;
  }
  return 2.0 * precision * recall / (precision + recall);
}

std::size_t clipped_ngram_matches(IdSpan cand, IdSpan ref, int n) {
  if (n < 1) {
    throw ConfigError("n-gram order must be >= 1");
  }
  const auto len = static_cast<std::size_t>(n);
  if (cand.size() < len || ref.size() < len) {
    return 0;
  }
  std::optional<std::size_t> table;
  switch (len) {
    case 1: table = table_matches<1>(cand, ref, len); break;
    case 2: table = table_matches<2>(cand, ref, len); break;
    default:
      if (len <= kTableBits) table = table_matches(cand, ref, len);
  }
  if (table) {
    return *table;
  }
  std::uint32_t all = 1;
  for (const auto id : cand) all |= id;
  for (const auto id : ref) all |= id;
  const auto width = static_cast<unsigned>(std::bit_width(all));
  if (const auto packed = packed_matches(cand, ref, len, width)) {
    return *packed;
  }

  std::vector<std::uint32_t> cs;
  std::vector<std::uint32_t> rs;
  sorted_gram_starts(cand, len, cs);
  sorted_gram_starts(ref, len, rs);
  std::size_t m = 0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < cs.size() && j < rs.size()) {
    const int cmp = compare_grams(cand, cs[i], ref, rs[j], len);
    if (cmp < 0) {
      ++i;
    } else if (cmp > 0) {
      ++j;
    } else {
      std::size_t ci = i + 1;
      while (ci < cs.size() && compare_grams(cand, cs[ci], cand, cs[i], len) == 0) ++ci;
      std::size_t rj = j + 1;
      while (rj < rs.size() && compare_grams(ref, rs[rj], ref, rs[j], len) == 0) ++rj;
      m += std::min(ci - i, rj - j);
      i = ci;
      j = rj;
    }
  }
  return m;
}

RougeScore rouge_n_ids(IdSpan cand, IdSpan ref, int n) {
  const std::size_t m = clipped_ngram_matches(cand, ref, n);
  const auto len = static_cast<std::size_t>(n);
  if (cand.size() < len || ref.size() < len) {
    return {};
  }
  RougeScore s;
  s.precision = static_cast<double>(m) / static_cast<double>(cand.size() - len + 1);
  s.recall = static_cast<double>(m) / static_cast<double>(ref.size() - len + 1);
  s.f1 = f1_of(s.precision, s.recall);
  return s;
}

constexpr std::uint32_t kMaskSlots = 4096;

// Bit-parallel LCS: bit j of v is cleared once b[j] is matched on some
// longest path, so the answer is the number of cleared bits.
std::size_t lcs_length_ids(IdSpan a, IdSpan b) {
  if (a.empty() || b.empty()) {
    return 0;
  }
  if (b.size() <= 64) {
    // Per-symbol match masks of b, zeroed again before returning.
    thread_local std::array<std::uint64_t, kMaskSlots> slots{};
    auto& masks = slots;
    std::uint32_t all = 0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      all |= b[j];
      masks[b[j] % kMaskSlots] |= std::uint64_t{1} << j;
    }
    std::uint64_t v = ~std::uint64_t{0};
    if (all < kMaskSlots) {
      for (const auto x : a) {
        const std::uint64_t u = x < kMaskSlots ? v & masks[x] : 0;
        v = (v + u) | (v - u);
      }
      for (const auto y : b) masks[y] = 0;
    } else {
      for (const auto y : b) masks[y % kMaskSlots] = 0;
      for (const auto x : a) {
        std::uint64_t match = 0;
        for (std::size_t j = 0; j < b.size(); ++j) {
          match |= std::uint64_t{b[j] == x} << j;
        }
        const std::uint64_t u = v & match;
        v = (v + u) | (v - u);
      }
    }
    const std::uint64_t mask = b.size() == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << b.size()) - 1;
    return static_cast<std::size_t>(std::popcount(~v & mask));
  }
  const std::size_t words = (b.size() + 63) / 64;
  std::vector<std::uint64_t> vbuf(words, ~std::uint64_t{0});
  std::vector<std::uint64_t> mbuf(words);
  std::uint64_t* v = vbuf.data();
  std::uint64_t* match = mbuf.data();
  for (const auto x : a) {
    std::fill(match, match + words, std::uint64_t{0});
    for (std::size_t j = 0; j < b.size(); ++j) {
      match[j / 64] |= std::uint64_t{b[j] == x} << (j % 64);
    }
    std::uint64_t carry = 0;
    for (std::size_t w = 0; w < words; ++w) {
      const std::uint64_t u = v[w] & match[w];
      const std::uint64_t sum = v[w] + u;
      const std::uint64_t with_carry = sum + carry;
      carry = (sum < v[w] || with_carry < sum) ? 1 : 0;
      v[w] = with_carry | (v[w] - u);
    }
  }
  std::size_t cleared = 0;
  for (std::size_t w = 0; w < words; ++w) {
    const std::size_t bits = w + 1 < words ? 64 : b.size() - 64 * w;
    const std::uint64_t mask = bits == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << bits) - 1;
    cleared += static_cast<std::size_t>(std::popcount(~v[w] & mask));
  }
  return cleared;
}

RougeScore rouge_l_ids(IdSpan cand, IdSpan ref) {
  if (cand.empty() || ref.empty()) {
    return {};
  }
  const auto l = static_cast<double>(lcs_length_ids(cand, ref));
  RougeScore s;
  s.precision = l / static_cast<double>(cand.size());
  s.recall = l / static_cast<double>(ref.size());
  s.f1 = f1_of(s.precision, s.recall);
  return s;
}

InternedPair intern_tokens(const TokenSeq& cand, const TokenSeq& ref) {
  std::unordered_map<std::string_view, std::uint32_t> ids;
  auto map_seq = [&ids](const TokenSeq& seq) {
    std::vector<std::uint32_t> out;
    out.reserve(seq.size());
    for (const auto& t : seq) {
      out.push_back(ids.try_emplace(t, static_cast<std::uint32_t>(ids.size())).first->second);
    }
    return out;
  };
  InternedPair p;
  p.cand = map_seq(cand);
  p.ref = map_seq(ref);
  return p;
}

RougeScore rouge_n(const TokenSeq& cand, const TokenSeq& ref, int n) {
  if (n < 1) {
    throw ConfigError("rouge_n requires n >= 1");
  }
  const auto p = intern_tokens(cand, ref);
  return rouge_n_ids(p.cand, p.ref, n);
}

std::size_t lcs_length(const TokenSeq& a, const TokenSeq& b) {
  const auto p = intern_tokens(a, b);
  return lcs_length_ids(p.cand, p.ref);
}

RougeScore rouge_l(const TokenSeq& cand, const TokenSeq& ref) {
  const auto p = intern_tokens(cand, ref);
  return rouge_l_ids(p.cand, p.ref);
}

double bleu(const TokenSeq& cand, const TokenSeq& ref) {
  if (cand.empty()) {
    return 0.0;
  }
  const auto ids = intern_tokens(cand, ref);
  const int max_order = static_cast<int>(std::min<std::size_t>(4, cand.size()));
  double log_sum = 0.0;
  for (int n = 1; n <= max_order; ++n) {
    const auto total = static_cast<double>(cand.size() - static_cast<std::size_t>(n) + 1);
    const auto m = static_cast<double>(clipped_ngram_matches(ids.cand, ids.ref, n));
    double p = m / total;
    if (m == 0.0) {
      if (n == 1) {
        return 0.0;
      }
      p = 1.0 / (total + 1.0);
    }
    log_sum += std::log(p);
  }
  const double geo = std::exp(log_sum / max_order);
  const double c = static_cast<double>(cand.size());
  const double r = static_cast<double>(ref.size());
  const double bp = c < r ? std::exp(1.0 - r / c) : 1.0;
  return std::clamp(bp * geo, 0.0, 1.0);
}

MeteorResult meteor_detail(const TokenSeq& cand, const TokenSeq& ref, const Stemmer& stemmer,
                           std::size_t search_budget) {
  MeteorResult out;
  if (cand.empty() || ref.empty()) {
    return out;
  }
  std::map<std::string, int> ids;
  auto key_of = [&](const std::string& tok) {
    const std::string k = stemmer ? stemmer(tok) : tok;
    return ids.emplace(k, static_cast<int>(ids.size())).first->second;
  };
  std::vector<int> c;
  std::vector<int> r;
  c.reserve(cand.size());
  r.reserve(ref.size());
  for (const auto& t : cand) c.push_back(key_of(t));
  for (const auto& t : ref) r.push_back(key_of(t));

  const std::size_t seed = greedy_links(c, r);
  AlignmentSearch search(c, r, static_cast<int>(ids.size()), search_budget);
  const std::size_t m = search.matches();
  if (m == 0) {
    return out;
  }
  const std::size_t links = search.run(seed);
  out.exact_alignment = !search.exhausted();
  out.matches = m;
  out.chunks = m - links;
  out.precision = static_cast<double>(m) / static_cast<double>(cand.size());
  out.recall = static_cast<double>(m) / static_cast<double>(ref.size());
  out.fmean = out.precision * out.recall / (0.9 * out.precision + 0.1 * out.recall);
  const auto ch = static_cast<double>(out.chunks * out.chunks * out.chunks);
  const auto mm = static_cast<double>(m * m * m);
  out.penalty = 0.5 * ch / mm;
  out.score = std::clamp(out.fmean * (1.0 - out.penalty), 0.0, 1.0);
  return out;
}

double meteor(const TokenSeq& cand, const TokenSeq& ref, const Stemmer& stemmer) {
  return meteor_detail(cand, ref, stemmer).score;
}

double semantic_sim(const Embedder& embedder, const std::string& cand_text, const std::string& ref_text) {
  if (tokenize(cand_text).empty() || tokenize(ref_text).empty()) {
    throw ConfigError("empty text");
  }
  const auto v = embedder.embed({cand_text, ref_text});
  if (v.size() != 2) {
    throw IntegrityError("embedder returned " + std::to_string(v.size()) + " vectors for two texts");
  }
  return cosine(v[0], v[1]);
}

}  // namespace sabia
