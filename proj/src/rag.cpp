#include "sabia/rag.hpp"

#include <fstream>
#include <iterator>

#include "embedded_templates.hpp"
#include "sabia/error.hpp"
#include "sabia/text.hpp"

namespace sabia {
namespace {

constexpr std::string_view kContextSlot = "{context}";
constexpr std::string_view kQuestionSlot = "{question}";

std::size_t find_once(const std::string& text, std::string_view slot) {
  const auto first = text.find(slot);
  if (first == std::string::npos) {
    throw TemplateError("template is missing placeholder " + std::string(slot));
  }
  if (text.find(slot, first + 1) != std::string::npos) {
    throw TemplateError("template repeats placeholder " + std::string(slot));
  }
  return first;
}

}  // namespace

std::string builtin_template_text() { return std::string(embedded::kPromptTemplate); }

PromptTemplate PromptTemplate::from_text(std::string text, std::string language_hint) {
  const auto ctx = find_once(text, kContextSlot);
  const auto q = find_once(text, kQuestionSlot);
  return PromptTemplate(std::move(text), std::move(language_hint), ctx, q);
}

PromptTemplate PromptTemplate::load(const std::filesystem::path& path, std::string language_hint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw TemplateError("cannot read template " + path.string());
  }
  std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_text(std::string(strip_bom(raw)), std::move(language_hint));
}

PromptTemplate PromptTemplate::builtin() { return from_text(builtin_template_text()); }

std::string format_context(const std::vector<SearchHit>& hits) {
  if (hits.empty()) {
    return std::string(kNoContextSentinel);
  }
  std::string out;
  for (std::size_t i = 0; i < hits.size(); ++i) {
    if (i > 0) {
      out += "\n\n";
    }
    out += '[' + hits[i].chunk.doc_id + '#' + std::to_string(hits[i].chunk.chunk_index) + "]\n";
    out += hits[i].chunk.text;
  }
  return out;
}

std::string render_prompt(const PromptTemplate& tmpl, const std::vector<SearchHit>& hits,
                          const std::string& question) {
  const std::string& t = tmpl.text_;
  const std::string context = format_context(hits);
  struct Slot {
    std::size_t pos;
    std::size_t len;
    const std::string* value;
  };
  Slot a{tmpl.context_pos_, kContextSlot.size(), &context};
  Slot b{tmpl.question_pos_, kQuestionSlot.size(), &question};
  if (b.pos < a.pos) {
    std::swap(a, b);
  }
  std::string out;
  out.reserve(t.size() + context.size() + question.size());
  out.append(t, 0, a.pos);
  out += *a.value;
  out.append(t, a.pos + a.len, b.pos - (a.pos + a.len));
  out += *b.value;
  out.append(t, b.pos + b.len, std::string::npos);
  return out;
}

std::vector<SearchHit> retrieve(const VectorStore& store, const Embedder& embedder,
                                const std::string& question, std::size_t k) {
  if (is_blank(question)) {
    throw ConfigError("question must be nonempty");
  }
  if (k < 1) {
    throw ConfigError("k must be at least 1");
  }
  if (embedder.id() != store.embedder_id() || embedder.dim() != store.dim()) {
    throw IntegrityError("embedder '" + embedder.id() + "' (dim " + std::to_string(embedder.dim()) +
                         ") does not match store embedder '" + store.embedder_id() + "' (dim " +
                         std::to_string(store.dim()) + ")");
  }
  if (store.count() == 0) {
    return {};
  }
  return store.top_k(embedder.embed_one(question), k);
}

RagAnswer answer(const VectorStore& store, const Embedder& embedder, const ChatBackend& client,
                 const ModelSpec& spec, const PromptTemplate& tmpl, const std::string& question,
                 std::size_t k, const GenerationParams& params) {
  RagAnswer out;
  try {
    out.hits = retrieve(store, embedder, question, k);
  } catch (const TimeoutError& e) {
    throw StageError("retrieval", e.what(), true);
  } catch (const Error& e) {
    throw StageError("retrieval", e.what());
  }
  out.prompt = render_prompt(tmpl, out.hits, question);
  try {
    auto completion = client.complete(spec, {{Role::user, out.prompt}}, params);
    out.text = std::move(completion.text);
    out.model_id = std::move(completion.model_id);
    out.latency_s = completion.latency_s;
  } catch (const TimeoutError& e) {
    throw StageError("generation", e.what(), true);
  } catch (const Error& e) {
    throw StageError("generation", e.what());
  }
  return out;
}

}  // namespace sabia
