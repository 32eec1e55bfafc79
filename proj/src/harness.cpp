#include "sabia/harness.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <future>
#include <iterator>
#include <map>
#include <mutex>

#include "sabia/csv.hpp"
#include "sabia/metrics.hpp"
#include "sabia/text.hpp"

namespace sabia {
namespace {

constexpr std::array<std::string_view, 12> kResultsHeader = {
    "pergunta", "referencia", "modelo", "resposta", "latencia_s", "rouge1",
    "rouge2",   "rougeL",     "bleu",   "sbert",    "meteor",     "judge"};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot read " + path.string());
  }
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write " + path.string());
  }
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) {
    throw IoError("write failed for " + path.string());
  }
}

std::string number(double v) { return fmt::format("{}", v); }

double parse_number(const std::string& field, std::size_t row, std::string_view column) {
  double v = 0.0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last || !std::isfinite(v)) {
    throw SchemaError("row " + std::to_string(row) + ": column " + std::string(column) +
                      " is not a number: '" + field + "'");
  }
  return v;
}

double score_of(const MetricScores& s, Column c) {
  switch (c) {
    case Column::rouge1:
      return s.rouge1;
    case Column::rouge2:
      return s.rouge2;
    case Column::rougeL:
      return s.rougeL;
    case Column::bleu:
      return s.bleu;
    case Column::sbert:
      return s.sbert;
    case Column::meteor:
      return s.meteor;
    case Column::judge:
      return s.judge;
    case Column::latency:
      break;
  }
  return 0.0;
}

std::string display_name_for(const std::vector<ModelSpec>& registry, const std::string& model_id) {
  const auto m = find_model(registry, model_id);
  return m ? m->display_name : model_id;
}

std::string_view medal_emoji(Medal m) {
  switch (m) {
    case Medal::gold:
      return "🥇";
    case Medal::silver:
      return "🥈";
    case Medal::bronze:
      return "🥉";
  }
  return "";
}

}  // namespace

std::vector<FaqEntry> parse_faq(std::string_view content) {
  content = strip_bom(content);
  if (is_blank(content)) {
    throw IoError("FAQ file is empty");
  }
  const auto rows = parse_csv(content);
  const auto& header = rows.front();
  std::optional<std::size_t> q_col;
  std::optional<std::size_t> a_col;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const auto name = trim(header[i]);
    if (name == "pergunta") {
      q_col = i;
    } else if (name == "resposta") {
      a_col = i;
    }
  }
  if (!q_col || !a_col) {
    throw SchemaError("FAQ header must contain columns 'pergunta' and 'resposta'");
  }
  std::vector<FaqEntry> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && is_blank(row[0])) {
      continue;
    }
    if (row.size() <= std::max(*q_col, *a_col)) {
      throw SchemaError("FAQ row " + std::to_string(r) + " has " + std::to_string(row.size()) + " fields");
    }
    FaqEntry e{row[*q_col], row[*a_col]};
    if (is_blank(e.question) || is_blank(e.reference)) {
      throw SchemaError("FAQ row " + std::to_string(r) + " has an empty pergunta or resposta");
    }
    out.push_back(std::move(e));
  }
  if (out.empty()) {
    throw IoError("no entries");
  }
  return out;
}

std::vector<FaqEntry> load_faq(const std::filesystem::path& path) { return parse_faq(read_file(path)); }

std::string_view column_title(Column c) {
  switch (c) {
    case Column::rouge1:
      return "ROUGE-1";
    case Column::rouge2:
      return "ROUGE-2";
    case Column::rougeL:
      return "ROUGE-L";
    case Column::bleu:
      return "BLEU";
    case Column::sbert:
      return "SBERT";
    case Column::meteor:
      return "METEOR";
    case Column::judge:
      return "LLM-as-a-Judge";
    case Column::latency:
      return "Tempo(s)";
  }
  return "";
}

std::string_view column_key(Column c) {
  switch (c) {
    case Column::rouge1:
      return "rouge1";
    case Column::rouge2:
      return "rouge2";
    case Column::rougeL:
      return "rougeL";
    case Column::bleu:
      return "bleu";
    case Column::sbert:
      return "sbert";
    case Column::meteor:
      return "meteor";
    case Column::judge:
      return "judge";
    case Column::latency:
      return "latencia_s";
  }
  return "";
}

Direction column_direction(Column c) { return c == Column::latency ? Direction::asc : Direction::desc; }

MetricScores score_answer(const Embedder& embedder, const ChatBackend& judge_client,
                          const ModelSpec& judge_spec, const JudgeTemplate& judge_template,
                          const std::string& question, const std::string& reference,
                          const std::string& answer) {
  const TokenSeq cand = tokenize(answer);
  const TokenSeq ref = tokenize(reference);
  MetricScores s;
  s.rouge1 = rouge_n(cand, ref, 1).f1;
  s.rouge2 = rouge_n(cand, ref, 2).f1;
  s.rougeL = rouge_l(cand, ref).f1;
  s.bleu = bleu(cand, ref);
  s.sbert = semantic_sim(embedder, answer, reference);
  s.meteor = meteor(cand, ref);
  s.judge = judge_evaluate(judge_client, judge_spec, question, reference, answer, judge_template).normalized;
  return s;
}

std::vector<RunRecord> run_eval(const std::vector<FaqEntry>& faq, const std::vector<ModelSpec>& models,
                                const EvalContext& ctx) {
  if (faq.empty()) {
    throw ConfigError("run_eval needs at least one FAQ entry");
  }
  if (models.empty()) {
    throw ConfigError("run_eval needs at least one model");
  }
  if (ctx.store == nullptr || ctx.embedder == nullptr || ctx.generator == nullptr || ctx.judge_client == nullptr) {
    throw ConfigError("run_eval context is incomplete");
  }
  for (const auto& m : models) {
    if (m.model_id == ctx.judge_spec.model_id) {
      throw ConfigError("judge model " + m.model_id + " cannot also be evaluated");
    }
  }

  struct ModelRun {
    std::vector<RunRecord> records;
    std::size_t failures = 0;
    bool aborted = false;
    std::string last_error;
  };

  const GenerationParams params{kEvalTemperature, ctx.max_tokens};
  auto run_model = [&](const ModelSpec& spec) {
    ModelRun run;
    for (const auto& entry : faq) {
      RunRecord rec;
      rec.question = entry.question;
      rec.reference = entry.reference;
      rec.model_id = spec.model_id;
      try {
        auto ans = answer(*ctx.store, *ctx.embedder, *ctx.generator, spec, ctx.prompt_template,
                          entry.question, ctx.k, params);
        if (is_blank(ans.text)) {
          throw StageError("generation", "empty answer");
        }
        rec.answer = std::move(ans.text);
        rec.latency_s = ans.latency_s;
        rec.scores = score_answer(*ctx.embedder, *ctx.judge_client, ctx.judge_spec, ctx.judge_template,
                                  entry.question, entry.reference, rec.answer);
      } catch (const StageError& e) {
        rec.error = e.what();
      } catch (const Error& e) {
        rec.error = std::string("scoring: ") + e.what();
      }
      if (ctx.on_record) {
        ctx.on_record(rec);
      }
      if (!rec.ok()) {
        ++run.failures;
        run.last_error = rec.error;
      }
      run.records.push_back(std::move(rec));
      if (run.failures * 2 > faq.size()) {
        run.aborted = true;
        break;
      }
    }
    return run;
  };

  std::vector<ModelRun> runs;
  runs.reserve(models.size());
  if (ctx.parallel_models && models.size() > 1) {
    std::vector<std::future<ModelRun>> futures;
    futures.reserve(models.size());
    for (const auto& m : models) {
      futures.push_back(std::async(std::launch::async, run_model, std::cref(m)));
    }
    for (auto& f : futures) {
      runs.push_back(f.get());
    }
  } else {
    for (const auto& m : models) {
      runs.push_back(run_model(m));
    }
  }

  std::vector<RunRecord> out;
  out.reserve(faq.size() * models.size());
  for (std::size_t i = 0; i < faq.size(); ++i) {
    for (auto& run : runs) {
      if (i < run.records.size()) {
        out.push_back(std::move(run.records[i]));
      }
    }
  }

  std::string summary;
  for (std::size_t m = 0; m < models.size(); ++m) {
    if (runs[m].aborted) {
      summary += fmt::format("{}{} failed {} of {} questions (last error: {})", summary.empty() ? "" : "; ",
                             models[m].model_id, runs[m].failures, faq.size(), runs[m].last_error);
    }
  }
  if (!summary.empty()) {
    throw EvalAbortedError("evaluation aborted: " + summary, std::move(out));
  }
  return out;
}

std::string results_csv(const std::vector<RunRecord>& records) {
  std::string out = csv_line(CsvRow(kResultsHeader.begin(), kResultsHeader.end()));
  for (const auto& r : records) {
    CsvRow row = {r.question, r.reference, r.model_id, r.ok() ? r.answer : std::string()};
    if (r.ok()) {
      const auto& s = *r.scores;
      row.push_back(number(r.latency_s));
      for (const double v : {s.rouge1, s.rouge2, s.rougeL, s.bleu, s.sbert, s.meteor, s.judge}) {
        row.push_back(number(v));
      }
    } else {
      row.resize(kResultsHeader.size());
    }
    out += csv_line(row);
  }
  return out;
}

void write_results_csv(const std::filesystem::path& path, const std::vector<RunRecord>& records) {
  write_file(path, results_csv(records));
}

std::vector<RunRecord> parse_results_csv(std::string_view content) {
  content = strip_bom(content);
  if (is_blank(content)) {
    throw IoError("results file is empty");
  }
  const auto rows = parse_csv(content);
  const auto& header = rows.front();
  if (header.size() != kResultsHeader.size() || !std::equal(header.begin(), header.end(), kResultsHeader.begin())) {
    throw SchemaError("results header must be: pergunta,referencia,modelo,resposta,latencia_s,rouge1,rouge2,"
                      "rougeL,bleu,sbert,meteor,judge");
  }
  std::vector<RunRecord> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && row[0].empty()) {
      continue;
    }
    if (row.size() != kResultsHeader.size()) {
      throw SchemaError("results row " + std::to_string(r) + " has " + std::to_string(row.size()) + " fields");
    }
    RunRecord rec;
    rec.question = row[0];
    rec.reference = row[1];
    rec.model_id = row[2];
    rec.answer = row[3];
    const bool scored = std::all_of(row.begin() + 4, row.end(), [](const std::string& f) { return !f.empty(); });
    const bool unscored = std::all_of(row.begin() + 5, row.end(), [](const std::string& f) { return f.empty(); });
    if (scored) {
      rec.latency_s = parse_number(row[4], r, kResultsHeader[4]);
      MetricScores s;
      double* fields[] = {&s.rouge1, &s.rouge2, &s.rougeL, &s.bleu, &s.sbert, &s.meteor, &s.judge};
      for (std::size_t c = 0; c < 7; ++c) {
        *fields[c] = parse_number(row[5 + c], r, kResultsHeader[5 + c]);
      }
      rec.scores = s;
    } else if (unscored) {
      rec.error = "failed";
    } else {
      throw SchemaError("results row " + std::to_string(r) + " is partially scored");
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<RunRecord> read_results_csv(const std::filesystem::path& path) {
  return parse_results_csv(read_file(path));
}

AggregateCell aggregate_values(std::vector<double> values) {
  if (values.empty()) {
    throw ConfigError("cannot aggregate an empty column");
  }
  std::sort(values.begin(), values.end());
  AggregateCell cell;
  cell.n = values.size();
  double sum = 0.0;
  for (const double v : values) {
    sum += v;
  }
  cell.mean = sum / static_cast<double>(cell.n);
  if (cell.n > 1) {
    double sq = 0.0;
    for (const double v : values) {
      sq += (v - cell.mean) * (v - cell.mean);
    }
    cell.std = std::sqrt(sq / static_cast<double>(cell.n - 1));
  }
  return cell;
}

AggregateTable aggregate(const std::vector<RunRecord>& records, const std::vector<ModelSpec>& registry) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<const RunRecord*>> by_model;
  for (const auto& r : records) {
    auto [it, inserted] = by_model.try_emplace(r.model_id);
    if (inserted) {
      order.push_back(r.model_id);
    }
    it->second.push_back(&r);
  }
  // Registry order first, unknown models by id, so the table ignores record order.
  auto rank_of = [&](const std::string& id) {
    for (std::size_t i = 0; i < registry.size(); ++i) {
      if (registry[i].model_id == id) {
        return i;
      }
    }
    return registry.size();
  };
  std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    const auto ra = rank_of(a);
    const auto rb = rank_of(b);
    return ra != rb ? ra < rb : a < b;
  });
  AggregateTable table;
  for (const auto& id : order) {
    const auto& recs = by_model[id];
    ModelAggregate agg;
    agg.model_id = id;
    agg.display_name = display_name_for(registry, id);
    std::array<std::vector<double>, kColumns.size()> columns;
    for (const auto* r : recs) {
      if (!r->ok()) {
        ++agg.failures;
        continue;
      }
      for (const auto c : kColumns) {
        columns[static_cast<std::size_t>(c)].push_back(c == Column::latency ? r->latency_s : score_of(*r->scores, c));
      }
    }
    if (columns[0].empty()) {
      table.warnings.push_back("model " + id + " has no successful records and is excluded");
      continue;
    }
    for (std::size_t c = 0; c < kColumns.size(); ++c) {
      agg.cells[c] = aggregate_values(std::move(columns[c]));
    }
    table.models.push_back(std::move(agg));
  }
  return table;
}

std::string_view medal_label(Medal m) {
  switch (m) {
    case Medal::gold:
      return "gold";
    case Medal::silver:
      return "silver";
    case Medal::bronze:
      return "bronze";
  }
  return "";
}

std::vector<MedalPlacement> medal_rank(const std::vector<RankEntry>& column, Direction direction) {
  std::vector<RankEntry> sorted = column;
  std::sort(sorted.begin(), sorted.end(), [direction](const RankEntry& a, const RankEntry& b) {
    if (a.mean != b.mean) {
      return direction == Direction::desc ? a.mean > b.mean : a.mean < b.mean;
    }
    if (a.display_name != b.display_name) {
      return a.display_name < b.display_name;
    }
    return a.model_id < b.model_id;
  });
  std::vector<MedalPlacement> out;
  for (std::size_t i = 0; i < sorted.size() && i < 3; ++i) {
    out.push_back({sorted[i].model_id, static_cast<Medal>(i + 1), i == 0});
  }
  return out;
}

ReportTable build_report(AggregateTable aggregates) {
  ReportTable report;
  report.aggregates = std::move(aggregates);
  for (const auto c : kColumns) {
    std::vector<RankEntry> column;
    for (const auto& m : report.aggregates.models) {
      column.push_back({m.model_id, m.display_name, m.cell(c).mean});
    }
    report.medals[static_cast<std::size_t>(c)] = medal_rank(column, column_direction(c));
  }
  return report;
}

std::string render_report(const ReportTable& report, ReportFormat format) {
  const auto& models = report.aggregates.models;
  if (models.empty()) {
    throw ConfigError("nothing to report: no model has successful records");
  }
  auto placement = [&](Column c, const std::string& model_id) -> const MedalPlacement* {
    for (const auto& p : report.medals_for(c)) {
      if (p.model_id == model_id) {
        return &p;
      }
    }
    return nullptr;
  };

  std::string out;
  if (format == ReportFormat::csv) {
    out += "modelo,n,falhas";
    for (const auto c : kColumns) {
      out += fmt::format(",{0}_mean,{0}_std", column_key(c));
    }
    out += '\n';
    for (const auto& m : models) {
      out += fmt::format("{},{},{}", csv_field(m.model_id), m.cell(Column::rouge1).n, m.failures);
      for (const auto c : kColumns) {
        out += fmt::format(",{},{}", number(m.cell(c).mean), number(m.cell(c).std));
      }
      out += '\n';
    }
    out += "\ncoluna,posicao,medalha,modelo\n";
    for (const auto c : kColumns) {
      for (const auto& p : report.medals_for(c)) {
        out += fmt::format("{},{},{},{}\n", column_key(c), static_cast<int>(p.medal), medal_label(p.medal),
                           csv_field(p.model_id));
      }
    }
    return out;
  }

  out += "| Modelo |";
  for (const auto c : kColumns) {
    out += fmt::format(" {} |", column_title(c));
  }
  out += "\n|---|";
  for (std::size_t i = 0; i < kColumns.size(); ++i) {
    out += "---:|";
  }
  out += '\n';
  for (const auto& m : models) {
    out += fmt::format("| {} |", m.display_name);
    for (const auto c : kColumns) {
      std::string cell = fmt::format("{:.3f} ± {:.2f}", m.cell(c).mean, m.cell(c).std);
      if (const auto* p = placement(c, m.model_id)) {
        cell = p->bold ? fmt::format("{} **{}**", medal_emoji(p->medal), cell)
                       : fmt::format("{} {}", medal_emoji(p->medal), cell);
      }
      out += fmt::format(" {} |", cell);
    }
    out += '\n';
  }
  out += "\nValores: média ± desvio padrão amostral (n−1). 🥇 1º (ouro), 🥈 2º (prata), 🥉 3º (bronze); "
         "o melhor resultado de cada coluna em negrito. Tempo(s) classificado em ordem crescente.\n";
  std::string failures;
  for (const auto& m : models) {
    if (m.failures > 0) {
      failures += fmt::format("{}{}: {}", failures.empty() ? "" : ", ", m.display_name, m.failures);
    }
  }
  for (const auto& w : report.aggregates.warnings) {
    failures += fmt::format("{}{}", failures.empty() ? "" : ", ", w);
  }
  if (!failures.empty()) {
    out += "\nFalhas de geração excluídas da agregação: " + failures + ".\n";
  }
  return out;
}

}  // namespace sabia
