// Command-line entry point: ingest, serve, chat, eval, report.

#include <CLI11.hpp>
#include <fmt/format.h>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <mutex>
#include <sstream>
#include <string>
#include <vector>

#include "sabia/config.hpp"
#include "sabia/corpus.hpp"
#include "sabia/embed.hpp"
#include "sabia/error.hpp"
#include "sabia/genclient.hpp"
#include "sabia/harness.hpp"
#include "sabia/judge.hpp"
#include "sabia/rag.hpp"
#include "sabia/service.hpp"
#include "sabia/vstore.hpp"

namespace fs = std::filesystem;
using namespace sabia;

namespace {

std::optional<fs::path> opt_path(const std::string& s) {
  return s.empty() ? std::nullopt : std::optional<fs::path>(s);
}

PromptTemplate prompt_template_of(const AppConfig& cfg) {
  return cfg.template_path ? PromptTemplate::load(*cfg.template_path) : PromptTemplate::builtin();
}

std::shared_ptr<VectorStore> load_store_checked(const fs::path& path, const Embedder& embedder) {
  std::shared_ptr<VectorStore> store = VectorStore::load(path);
  if (store->embedder_id() != embedder.id() || store->dim() != embedder.dim()) {
    throw IntegrityError(fmt::format("store {} was built with '{}' (dim {}), configured embedder is '{}' (dim {})",
                                     path.string(), store->embedder_id(), store->dim(), embedder.id(),
                                     embedder.dim()));
  }
  return store;
}

int run_ingest(const AppConfig& cfg, const fs::path& root, const std::vector<std::string>& globs,
               const ChunkOptions& chunking, const fs::path& out) {
  const auto embedder = make_embedder(cfg.embedder);
  std::unique_ptr<VectorStore> store;
  if (fs::exists(out)) {
    auto loaded = load_store_checked(out, *embedder);
    store = std::make_unique<VectorStore>(loaded->dim(), loaded->embedder_id());
    store->upsert(loaded->records());
  } else {
    store = std::make_unique<VectorStore>(embedder->dim(), embedder->id());
  }

  const auto corpus = load_corpus(root, globs);
  for (const auto& err : corpus.errors) {
    fmt::print(stderr, "skipped {}: {}\n", err.path.string(), err.message);
  }
  std::size_t chunks = 0;
  for (const auto& doc : corpus.documents) {
    const auto pieces = chunk_text(doc, chunking);
    std::vector<std::string> texts;
    texts.reserve(pieces.size());
    for (const auto& c : pieces) {
      texts.push_back(c.text);
    }
    const auto vectors = embedder->embed(texts);
    std::vector<VectorRecord> records;
    records.reserve(pieces.size());
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      records.push_back({pieces[i], vectors[i], 0});
    }
    store->upsert(std::move(records));
    chunks += pieces.size();
  }
  store->save(out);
  fmt::print("{} documents, {} chunks ingested; store {} holds {} records ({} skipped files)\n",
             corpus.documents.size(), chunks, out.string(), store->count(), corpus.errors.size());
  return corpus.documents.empty() ? 1 : 0;
}

ApiServer* g_server = nullptr;

int run_serve(const AppConfig& cfg, const std::string& host, int port) {
  std::shared_ptr<const Embedder> embedder = make_embedder(cfg.embedder);
  std::shared_ptr<const VectorStore> store;
  try {
    store = load_store_checked(cfg.store_path, *embedder);
  } catch (const Error& e) {
    fmt::print(stderr, "warning: serving without a store: {}\n", e.what());
  }
  auto backend = std::make_shared<GatewayClient>(GatewayOptions{cfg.gateway_url, cfg.api_key_env});
  ServiceOptions opts;
  opts.registry = cfg.models;
  opts.prompt_template = prompt_template_of(cfg);
  opts.k = cfg.k;
  opts.temperature = cfg.temperature;
  opts.max_tokens = cfg.max_tokens;
  opts.session_ttl = cfg.session_ttl;
  ChatService service(store, embedder, backend, std::move(opts));
  ApiServer server(service);
  g_server = &server;
  std::signal(SIGINT, [](int) {
    if (g_server) g_server->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_server) g_server->stop();
  });
  fmt::print("listening on http://{}:{}\n", host, port);
  std::fflush(stdout);
  server.listen(host, port);
  g_server = nullptr;
  return 0;
}

int run_chat(const AppConfig& cfg, const std::string& model_id) {
  const auto spec = find_model(cfg.models, model_id);
  if (!spec) {
    throw ConfigError(fmt::format("unknown model '{}'", model_id));
  }
  const auto embedder = make_embedder(cfg.embedder);
  const auto store = load_store_checked(cfg.store_path, *embedder);
  const GatewayClient client(GatewayOptions{cfg.gateway_url, cfg.api_key_env});
  const auto tmpl = prompt_template_of(cfg);
  std::string line;
  fmt::print("{} ({}). Empty line quits.\n> ", spec->display_name, spec->model_id);
  std::fflush(stdout);
  while (std::getline(std::cin, line) && !line.empty()) {
    try {
      const auto reply = answer(*store, *embedder, client, *spec, tmpl, line, cfg.k,
                                GenerationParams{cfg.temperature, cfg.max_tokens});
      fmt::print("{}\n", reply.text);
      for (const auto& h : reply.hits) {
        fmt::print("  [{}#{}] {:.3f}\n", h.chunk.doc_id, h.chunk.chunk_index, h.score);
      }
      fmt::print("  ({:.2f} s)\n", reply.latency_s);
    } catch (const StageError& e) {
      fmt::print(stderr, "error: {}\n", e.what());
    }
    fmt::print("> ");
    std::fflush(stdout);
  }
  return 0;
}

std::vector<ModelSpec> select_models(const AppConfig& cfg, const std::string& selection) {
  if (selection == "all") {
    return cfg.models;
  }
  std::vector<ModelSpec> out;
  std::stringstream ss(selection);
  std::string id;
  while (std::getline(ss, id, ',')) {
    const auto spec = find_model(cfg.models, id);
    if (!spec) {
      throw ConfigError(fmt::format("unknown model '{}'", id));
    }
    out.push_back(*spec);
  }
  if (out.empty()) {
    throw ConfigError("no models selected");
  }
  return out;
}

void write_text(const std::string& out, const std::string& text) {
  if (out.empty() || out == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f || !(f << text)) {
    throw IoError("cannot write " + out);
  }
}

ReportFormat parse_format(const std::string& s) {
  if (s == "csv") return ReportFormat::csv;
  if (s == "markdown" || s == "md") return ReportFormat::markdown;
  throw ConfigError("format must be csv or markdown");
}

int run_eval(const AppConfig& cfg, const fs::path& faq_path, const std::string& selection,
             const std::string& judge_id, const fs::path& out, const std::string& report_out,
             const std::string& report_format) {
  const auto faq = load_faq(faq_path);
  const auto models = select_models(cfg, selection);
  const auto embedder = make_embedder(cfg.embedder);
  const auto store = load_store_checked(cfg.store_path, *embedder);
  const GatewayClient client(GatewayOptions{cfg.gateway_url, cfg.api_key_env});

  EvalContext ctx;
  ctx.store = store.get();
  ctx.embedder = embedder.get();
  ctx.generator = &client;
  ctx.judge_client = &client;
  ctx.judge_spec = cfg.judge;
  if (!judge_id.empty()) {
    ctx.judge_spec = ModelSpec{judge_id, judge_id, false, cfg.judge.timeout_s};
  }
  ctx.prompt_template = prompt_template_of(cfg);
  if (cfg.judge_template_path) {
    ctx.judge_template = JudgeTemplate::load(*cfg.judge_template_path);
  }
  ctx.k = cfg.k;
  ctx.max_tokens = cfg.max_tokens;
  std::mutex print_mutex;
  ctx.on_record = [&](const RunRecord& r) {
    std::lock_guard lock(print_mutex);
    if (r.ok()) {
      fmt::print(stderr, "[{}] ok {:.2f}s judge={:.3f}\n", r.model_id, r.latency_s, r.scores->judge);
    } else {
      fmt::print(stderr, "[{}] failed: {}\n", r.model_id, r.error);
    }
  };

  std::vector<RunRecord> records;
  int status = 0;
  try {
    records = sabia::run_eval(faq, models, ctx);
  } catch (const EvalAbortedError& e) {
    fmt::print(stderr, "evaluation aborted: {}\n", e.what());
    records = e.partial();
    status = 2;
  }
  write_results_csv(out, records);
  fmt::print(stderr, "{} records written to {}\n", records.size(), out.string());
  if (!report_out.empty()) {
    const auto table = aggregate(records, cfg.models);
    for (const auto& w : table.warnings) {
      fmt::print(stderr, "warning: {}\n", w);
    }
    write_text(report_out, render_report(build_report(table), parse_format(report_format)));
  }
  return status;
}

int run_report(const AppConfig& cfg, const fs::path& in, const std::string& format, const std::string& out) {
  const auto records = read_results_csv(in);
  const auto table = aggregate(records, cfg.models);
  for (const auto& w : table.warnings) {
    fmt::print(stderr, "warning: {}\n", w);
  }
  write_text(out, render_report(build_report(table), parse_format(format)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Retrieval-augmented assistant over an institutional document corpus"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);

  auto* ingest = app.add_subcommand("ingest", "Chunk, embed and store a document tree");
  std::string root;
  std::vector<std::string> globs{"*.md", "*.txt"};
  ChunkOptions chunking;
  std::string store_out;
  int dim = 0;
  ingest->add_option("--root", root, "Corpus directory")->required();
  ingest->add_option("--glob", globs, "File patterns (repeatable)");
  ingest->add_option("--max-chars", chunking.max_chars, "Chunk size in characters");
  ingest->add_option("--overlap", chunking.overlap_chars, "Overlap between chunks");
  ingest->add_option("--out", store_out, "Store file (default: store_path from config)");
  ingest->add_option("--dim", dim, "Dimension of the local hash embedder")->check(CLI::PositiveNumber);

  auto* serve = app.add_subcommand("serve", "Serve the HTTP chat API");
  std::string host = "127.0.0.1";
  int port = 8080;
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port")->check(CLI::Range(1, 65535));

  auto* chat = app.add_subcommand("chat", "Interactive chat on the terminal");
  std::string chat_model = "openai/gpt-4o-mini";
  chat->add_option("--model", chat_model, "Model id");

  auto* eval = app.add_subcommand("eval", "Answer a FAQ with every model and score the answers");
  std::string faq;
  std::string models = "all";
  std::string judge;
  std::string results_out = "results.csv";
  std::string eval_store;
  std::string eval_report;
  std::string eval_format = "markdown";
  eval->add_option("--faq", faq, "FAQ CSV with pergunta,resposta")->required()->check(CLI::ExistingFile);
  eval->add_option("--models", models, "Comma-separated model ids, or 'all'");
  eval->add_option("--judge", judge, "Judge model id (default from config)");
  eval->add_option("--store", eval_store, "Store file (default: store_path from config)");
  eval->add_option("--out", results_out, "Results CSV");
  eval->add_option("--report", eval_report, "Also write the aggregate report here");
  eval->add_option("--format", eval_format, "Report format: csv or markdown");

  auto* report = app.add_subcommand("report", "Aggregate a results CSV into a ranked table");
  std::string report_in;
  std::string report_format = "markdown";
  std::string report_out;
  report->add_option("--in", report_in, "Results CSV")->required()->check(CLI::ExistingFile);
  report->add_option("--format", report_format, "csv or markdown");
  report->add_option("--out", report_out, "Output file (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    auto cfg = load_app_config(opt_path(config_path));
    if (*ingest) {
      if (dim > 0) {
        cfg.embedder.dim = dim;
      }
      return run_ingest(cfg, root, globs, chunking, store_out.empty() ? cfg.store_path : fs::path(store_out));
    }
    if (*serve) {
      return run_serve(cfg, host, port);
    }
    if (*chat) {
      return run_chat(cfg, chat_model);
    }
    if (*eval) {
      if (!eval_store.empty()) {
        cfg.store_path = eval_store;
      }
      return run_eval(cfg, faq, models, judge, results_out, eval_report, eval_format);
    }
    if (*report) {
      return run_report(cfg, report_in, report_format, report_out);
    }
  } catch (const Error& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
