#include "sabia/service.hpp"

#include <httplib.h>
#include <json.hpp>

#include <cmath>
#include <fmt/format.h>

#include "sabia/text.hpp"

namespace sabia {

using nlohmann::ordered_json;

std::string error_body(const ApiError& e) {
  ordered_json j;
  j["error"] = e.code();
  j["message"] = e.what();
  if (!e.stage().empty()) {
    j["stage"] = e.stage();
  }
  return j.dump();
}

ChatRequest parse_chat_request(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception&) {
    throw ApiError(400, "invalid_json", "request body is not valid JSON");
  }
  if (!j.is_object()) {
    throw ApiError(400, "invalid_request", "request body must be a JSON object");
  }
  ChatRequest req;
  auto string_field = [&](const char* key, bool required) -> std::optional<std::string> {
    if (!j.contains(key) || j[key].is_null()) {
      if (required) {
        throw ApiError(400, "invalid_request", fmt::format("missing field '{}'", key));
      }
      return std::nullopt;
    }
    if (!j[key].is_string()) {
      throw ApiError(400, "invalid_request", fmt::format("field '{}' must be a string", key));
    }
    return j[key].get<std::string>();
  };
  req.session_id = string_field("session_id", false);
  req.model_id = *string_field("model_id", true);
  req.message = string_field("message", false).value_or("");
  return req;
}

std::string to_json(const ChatResponse& r) {
  ordered_json j;
  j["session_id"] = r.session_id;
  j["answer"] = r.answer;
  j["sources"] = ordered_json::array();
  for (const auto& s : r.sources) {
    j["sources"].push_back({{"doc_id", s.doc_id}, {"chunk_index", s.chunk_index}, {"score", s.score}});
  }
  j["latency_ms"] = r.latency_ms;
  return j.dump();
}

std::string to_json(const HealthStatus& h) {
  ordered_json j;
  j["status"] = h.status;
  j["store_count"] = h.store_count;
  j["dim"] = h.dim ? ordered_json(*h.dim) : ordered_json(nullptr);
  return j.dump();
}

std::string models_json(const std::vector<ModelSpec>& registry) {
  auto j = ordered_json::array();
  for (const auto& m : registry) {
    j.push_back({{"model_id", m.model_id}, {"display_name", m.display_name}, {"open_source", m.open_source}});
  }
  return j.dump();
}

ChatService::ChatService(std::shared_ptr<const VectorStore> store, std::shared_ptr<const Embedder> embedder,
                         std::shared_ptr<const ChatBackend> backend, ServiceOptions options)
    : store_(std::move(store)),
      embedder_(std::move(embedder)),
      backend_(std::move(backend)),
      options_(std::move(options)),
      rng_(std::random_device{}()) {
  if (!backend_) {
    throw ConfigError("chat service needs a chat backend");
  }
  if (store_ && !embedder_) {
    throw ConfigError("chat service with a store needs an embedder");
  }
  if (options_.k < 1) {
    throw ConfigError("k must be at least 1");
  }
}

std::chrono::steady_clock::time_point ChatService::now() const {
  return options_.clock ? options_.clock() : std::chrono::steady_clock::now();
}

void ChatService::evict_expired(std::chrono::steady_clock::time_point t) {
  std::erase_if(sessions_, [&](const auto& kv) { return t - kv.second.last_active >= options_.session_ttl; });
}

std::string ChatService::new_session_id() {
  std::string id;
  do {
    id = fmt::format("{:016x}{:016x}", rng_(), rng_());
  } while (sessions_.count(id) != 0);
  return id;
}

ChatResponse ChatService::handle_chat(const ChatRequest& request) {
  if (is_blank(request.message)) {
    throw ApiError(400, "empty_message", "message must not be empty");
  }
  const auto spec = find_model(options_.registry, request.model_id);
  if (!spec) {
    throw ApiError(400, "unknown_model", fmt::format("unknown model_id '{}'", request.model_id));
  }
  if (request.session_id) {
    std::lock_guard lock(mutex_);
    evict_expired(now());
    if (sessions_.count(*request.session_id) == 0) {
      throw ApiError(404, "unknown_session", "unknown or expired session_id");
    }
  }
  if (!store_) {
    throw ApiError(503, "store_unavailable", "no vector store is loaded");
  }

  RagAnswer result;
  try {
    result = answer(*store_, *embedder_, *backend_, *spec, options_.prompt_template, request.message,
                    options_.k, GenerationParams{options_.temperature, options_.max_tokens});
  } catch (const StageError& e) {
    throw ApiError(502, "provider_error", e.what(), e.stage());
  }

  ChatResponse resp;
  resp.answer = result.text;
  resp.latency_ms = std::llround(result.latency_s * 1000.0);
  for (const auto& h : result.hits) {
    resp.sources.push_back({h.chunk.doc_id, static_cast<std::size_t>(h.chunk.chunk_index), h.score});
  }

  std::lock_guard lock(mutex_);
  const auto t = now();
  evict_expired(t);
  // A session that expired while the request ran is revived under its id.
  resp.session_id = request.session_id ? *request.session_id : new_session_id();
  auto& session = sessions_[resp.session_id];
  if (!session.turns.empty() && t < session.turns.back().at) {
    session.turns.push_back({request.message, std::move(result), session.turns.back().at});
  } else {
    session.turns.push_back({request.message, std::move(result), t});
  }
  session.last_active = t;
  return resp;
}

HealthStatus ChatService::handle_health() const {
  HealthStatus h;
  if (!store_) {
    h.status = "degraded";
    return h;
  }
  const auto header = store_->header();
  h.status = "ok";
  h.store_count = header.count;
  h.dim = header.dim;
  return h;
}

std::optional<std::vector<SessionTurn>> ChatService::session_turns(const std::string& session_id) {
  std::lock_guard lock(mutex_);
  evict_expired(now());
  const auto it = sessions_.find(session_id);
  if (it == sessions_.end()) {
    return std::nullopt;
  }
  return it->second.turns;
}

std::size_t ChatService::session_count() {
  std::lock_guard lock(mutex_);
  evict_expired(now());
  return sessions_.size();
}

namespace {

constexpr const char* kJsonType = "application/json";
constexpr std::size_t kWorkerThreads = 32;

void set_cors(httplib::Response& res) {
  res.set_header("Access-Control-Allow-Origin", "*");
  res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
  res.set_header("Access-Control-Allow-Headers", "Content-Type");
}

void send_error(httplib::Response& res, const ApiError& e) {
  res.status = e.status();
  res.set_content(error_body(e), kJsonType);
}

std::string default_code(int status) {
  switch (status) {
    case 404:
      return "not_found";
    case 405:
      return "method_not_allowed";
    case 413:
      return "payload_too_large";
    default:
      return status >= 500 ? "internal_error" : "bad_request";
  }
}

}  // namespace

ApiServer::ApiServer(ChatService& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto& svr = *server_;
  // Chat handlers block on the upstream model for seconds; size the pool for that.
  svr.new_task_queue = [] { return new httplib::ThreadPool(kWorkerThreads); };
  svr.Post("/v1/chat", [this](const httplib::Request& req, httplib::Response& res) {
    set_cors(res);
    try {
      const auto reply = service_.handle_chat(parse_chat_request(req.body));
      res.set_content(to_json(reply), kJsonType);
    } catch (const ApiError& e) {
      send_error(res, e);
    }
  });
  svr.Get("/v1/models", [this](const httplib::Request&, httplib::Response& res) {
    set_cors(res);
    res.set_content(models_json(service_.handle_models()), kJsonType);
  });
  svr.Get("/v1/health", [this](const httplib::Request&, httplib::Response& res) {
    set_cors(res);
    res.set_content(to_json(service_.handle_health()), kJsonType);
  });
  svr.Options(R"(/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
    set_cors(res);
    res.status = 204;
  });
  svr.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    set_cors(res);
    std::string message = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    send_error(res, ApiError(500, "internal_error", message));
  });
  svr.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (!res.body.empty()) {
      return httplib::Server::HandlerResponse::Unhandled;
    }
    set_cors(res);
    send_error(res, ApiError(res.status, default_code(res.status), httplib::status_message(res.status)));
    return httplib::Server::HandlerResponse::Handled;
  });
}

ApiServer::~ApiServer() { stop(); }

int ApiServer::start(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = server_->bind_to_any_port(host);
  } else if (!server_->bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) {
    throw IoError(fmt::format("cannot bind {}:{}", host, port));
  }
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return bound;
}

void ApiServer::listen(const std::string& host, int port) {
  if (!server_->listen(host, port)) {
    throw IoError(fmt::format("cannot listen on {}:{}", host, port));
  }
}

void ApiServer::stop() {
  server_->stop();
  if (thread_.joinable()) {
    thread_.join();
  }
}

}  // namespace sabia
