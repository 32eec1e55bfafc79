#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sabia/embed.hpp"
#include "sabia/genclient.hpp"
#include "sabia/vstore.hpp"

namespace sabia {

inline constexpr std::size_t kDefaultTopK = 4;
inline constexpr std::string_view kNoContextSentinel = "NENHUM CONTEXTO RECUPERADO";

/// Instruction template with exactly one `{context}` and one `{question}`.
class PromptTemplate {
 public:
  /// Throws TemplateError unless both placeholders occur exactly once.
  static PromptTemplate from_text(std::string text, std::string language_hint = "pt-BR");
  static PromptTemplate load(const std::filesystem::path& path, std::string language_hint = "pt-BR");
  /// The default Portuguese instruction template.
  static PromptTemplate builtin();

  const std::string& text() const noexcept { return text_; }
  const std::string& language_hint() const noexcept { return language_hint_; }

 private:
  PromptTemplate(std::string text, std::string hint, std::size_t ctx, std::size_t q)
      : text_(std::move(text)), language_hint_(std::move(hint)), context_pos_(ctx), question_pos_(q) {}

  friend std::string render_prompt(const PromptTemplate&, const std::vector<SearchHit>&, const std::string&);

  std::string text_;
  std::string language_hint_;
  std::size_t context_pos_;
  std::size_t question_pos_;
};

std::string builtin_template_text();

/// `[doc_id#chunk_index]` followed by the chunk text, one block per hit.
std::string format_context(const std::vector<SearchHit>& hits);

/// Single-pass substitution: text inserted for one placeholder is never
/// scanned for the other.
std::string render_prompt(const PromptTemplate& tmpl, const std::vector<SearchHit>& hits,
                          const std::string& question);

/// Embeds the question with the store's embedder and returns the top k hits.
std::vector<SearchHit> retrieve(const VectorStore& store, const Embedder& embedder,
                                const std::string& question, std::size_t k);

struct RagAnswer {
  std::string text;
  std::string model_id;
  std::vector<SearchHit> hits;
  double latency_s = 0.0;
  std::string prompt;
};

/// retrieve → render_prompt → chat completion. Failures surface as
/// StageError labeled "retrieval" or "generation".
RagAnswer answer(const VectorStore& store, const Embedder& embedder, const ChatBackend& client,
                 const ModelSpec& spec, const PromptTemplate& tmpl, const std::string& question,
                 std::size_t k = kDefaultTopK, const GenerationParams& params = {});

}  // namespace sabia
