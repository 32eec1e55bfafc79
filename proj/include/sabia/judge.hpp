#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>

#include "sabia/genclient.hpp"

namespace sabia {

/// Rubric scores, each 1..5, and their linear map onto [0, 1].
struct JudgeVerdict {
  int relevancia = 1;
  int acuracia = 1;
  int completude = 1;
  int clareza = 1;
  int concisao = 1;
  std::string rationale;
  double normalized = 0.0;

  std::array<int, 5> criteria() const { return {relevancia, acuracia, completude, clareza, concisao}; }
};

/// (mean(criteria) - 1) / 4, computed from the integer sum so that equal
/// inputs give bit-identical results.
double normalize_criteria(const std::array<int, 5>& criteria);

/// Judge prompt with `{question}`, `{reference}` and `{candidate}` slots.
class JudgeTemplate {
 public:
  /// Throws TemplateError unless every slot occurs exactly once.
  static JudgeTemplate from_text(std::string text);
  static JudgeTemplate load(const std::filesystem::path& path);
  static JudgeTemplate builtin();

  /// Single-pass substitution.
  std::string render(const std::string& question, const std::string& reference,
                     const std::string& candidate) const;
  const std::string& text() const noexcept { return text_; }

 private:
  explicit JudgeTemplate(std::string text) : text_(std::move(text)) {}
  std::string text_;
};

std::string builtin_judge_template_text();

/// Appended after an unusable reply before asking once more.
extern const std::string_view kJudgeFormatReminder;

/// Extracts and validates the JSON verdict from a judge reply (code fences and
/// surrounding prose are tolerated). Throws JudgeFormatError.
JudgeVerdict parse_judge_reply(std::string_view reply);

/// Asks the judge model to grade `candidate` against `reference`. An
/// unusable reply triggers exactly one re-ask; a second failure throws
/// JudgeFormatError.
JudgeVerdict judge_evaluate(const ChatBackend& client, const ModelSpec& judge_spec,
                            const std::string& question, const std::string& reference,
                            const std::string& candidate,
                            const JudgeTemplate& tmpl = JudgeTemplate::builtin());

}  // namespace sabia
