#pragma once

#include <array>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sabia/embed.hpp"
#include "sabia/error.hpp"
#include "sabia/genclient.hpp"
#include "sabia/judge.hpp"
#include "sabia/rag.hpp"
#include "sabia/vstore.hpp"

namespace sabia {

struct FaqEntry {
  std::string question;
  std::string reference;
};

/// Reads a CSV with header columns `pergunta,resposta` (any order, extra
/// columns ignored). Throws SchemaError on a missing column, IoError when the
/// file is empty or has no data rows.
std::vector<FaqEntry> load_faq(const std::filesystem::path& path);
std::vector<FaqEntry> parse_faq(std::string_view content);

struct MetricScores {
  double rouge1 = 0.0;
  double rouge2 = 0.0;
  double rougeL = 0.0;
  double bleu = 0.0;
  double sbert = 0.0;
  double meteor = 0.0;
  double judge = 0.0;
};

struct RunRecord {
  std::string question;
  std::string reference;
  std::string model_id;
  std::string answer;
  double latency_s = 0.0;
  std::optional<MetricScores> scores;  // empty for a failed generation
  std::string error;                   // stage-labeled failure, empty on success

  bool ok() const noexcept { return scores.has_value(); }
};

/// Report columns in their fixed display order.
enum class Column { rouge1, rouge2, rougeL, bleu, sbert, meteor, judge, latency };
inline constexpr std::array<Column, 8> kColumns = {Column::rouge1, Column::rouge2, Column::rougeL,
                                                   Column::bleu,   Column::sbert,  Column::meteor,
                                                   Column::judge,  Column::latency};

std::string_view column_title(Column c);  // "ROUGE-1", ..., "Tempo(s)"
std::string_view column_key(Column c);    // "rouge1", ..., "latencia_s"

enum class Direction { desc, asc };

/// Latency ranks ascending, every quality metric descending.
Direction column_direction(Column c);

/// Lexical, semantic and judge scores of one answer against its reference.
MetricScores score_answer(const Embedder& embedder, const ChatBackend& judge_client,
                          const ModelSpec& judge_spec, const JudgeTemplate& judge_template,
                          const std::string& question, const std::string& reference,
                          const std::string& answer);

/// Everything run_eval needs besides the FAQ and the model list.
struct EvalContext {
  const VectorStore* store = nullptr;
  const Embedder* embedder = nullptr;
  const ChatBackend* generator = nullptr;
  const ChatBackend* judge_client = nullptr;
  ModelSpec judge_spec = default_judge();
  PromptTemplate prompt_template = PromptTemplate::builtin();
  JudgeTemplate judge_template = JudgeTemplate::builtin();
  std::size_t k = kDefaultTopK;
  int max_tokens = 1024;
  /// Evaluate different models concurrently; questions of one model always
  /// run sequentially.
  bool parallel_models = true;
  /// Called after each record; may be invoked from several threads.
  std::function<void(const RunRecord&)> on_record;
};

class EvalAbortedError : public Error {
 public:
  EvalAbortedError(const std::string& summary, std::vector<RunRecord> partial)
      : Error(summary), partial_(std::move(partial)) {}
  const std::vector<RunRecord>& partial() const noexcept { return partial_; }

 private:
  std::vector<RunRecord> partial_;
};

/// Answers every FAQ entry with every model (temperature 0) and scores the
/// answers. Records come back in (entry, model) order. A failed generation
/// yields a record without scores; a model failing more than half of the
/// entries aborts the run with EvalAbortedError.
std::vector<RunRecord> run_eval(const std::vector<FaqEntry>& faq, const std::vector<ModelSpec>& models,
                                const EvalContext& ctx);

/// Raw results CSV: pergunta,referencia,modelo,resposta,latencia_s,rouge1,
/// rouge2,rougeL,bleu,sbert,meteor,judge. Failed rows leave the answer, the
/// latency and all scores empty.
std::string results_csv(const std::vector<RunRecord>& records);
void write_results_csv(const std::filesystem::path& path, const std::vector<RunRecord>& records);
std::vector<RunRecord> parse_results_csv(std::string_view content);
std::vector<RunRecord> read_results_csv(const std::filesystem::path& path);

struct AggregateCell {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation, 0 when n == 1
  std::size_t n = 0;
};

/// Mean and sample standard deviation. Values are summed in sorted order,
/// so the result does not depend on input order. Throws ConfigError when empty.
AggregateCell aggregate_values(std::vector<double> values);

struct ModelAggregate {
  std::string model_id;
  std::string display_name;
  std::array<AggregateCell, kColumns.size()> cells{};
  std::size_t failures = 0;

  const AggregateCell& cell(Column c) const { return cells[static_cast<std::size_t>(c)]; }
};

struct AggregateTable {
  std::vector<ModelAggregate> models;  // registry order, then unknown ids sorted
  std::vector<std::string> warnings;   // models excluded for lack of successful records
};

/// Per-model mean ± std over successful records. Display names come from
/// `registry`, falling back to the model id.
AggregateTable aggregate(const std::vector<RunRecord>& records, const std::vector<ModelSpec>& registry = {});

struct RankEntry {
  std::string model_id;
  std::string display_name;
  double mean = 0.0;
};

enum class Medal { gold = 1, silver = 2, bronze = 3 };

struct MedalPlacement {
  std::string model_id;
  Medal medal = Medal::gold;
  bool bold = false;  // best of the column
};

std::string_view medal_label(Medal m);  // "gold", "silver", "bronze"

/// Top three of a column: sorted by mean (desc or asc), ties by display name.
std::vector<MedalPlacement> medal_rank(const std::vector<RankEntry>& column, Direction direction);

struct ReportTable {
  AggregateTable aggregates;
  std::array<std::vector<MedalPlacement>, kColumns.size()> medals{};

  const std::vector<MedalPlacement>& medals_for(Column c) const {
    return medals[static_cast<std::size_t>(c)];
  }
};

/// Ranks every column of the aggregates.
ReportTable build_report(AggregateTable aggregates);

enum class ReportFormat { csv, markdown };

/// Deterministic, locale-independent rendering. Throws ConfigError when
/// there are no models to report.
std::string render_report(const ReportTable& report, ReportFormat format);

}  // namespace sabia
