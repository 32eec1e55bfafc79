#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "sabia/embed.hpp"
#include "sabia/error.hpp"
#include "sabia/genclient.hpp"
#include "sabia/rag.hpp"
#include "sabia/vstore.hpp"

namespace httplib {
class Server;
}

namespace sabia {

/// A 4xx/5xx reply: HTTP status, machine-readable code, optional stage.
class ApiError : public Error {
 public:
  ApiError(int status, std::string code, const std::string& message, std::string stage = {})
      : Error(message), status_(status), code_(std::move(code)), stage_(std::move(stage)) {}
  int status() const noexcept { return status_; }
  const std::string& code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  int status_;
  std::string code_;
  std::string stage_;
};

/// JSON body `{"error": code, "message": ..., "stage": ...}`.
std::string error_body(const ApiError& e);

struct ChatRequest {
  std::optional<std::string> session_id;
  std::string model_id;
  std::string message;
};

struct SourceRef {
  std::string doc_id;
  std::size_t chunk_index = 0;
  double score = 0.0;
};

struct ChatResponse {
  std::string session_id;
  std::string answer;
  std::vector<SourceRef> sources;
  long long latency_ms = 0;
};

struct HealthStatus {
  std::string status;  // "ok" or "degraded"
  std::size_t store_count = 0;
  std::optional<int> dim;
};

/// Throws ApiError 400 `invalid_json` / `invalid_request`.
ChatRequest parse_chat_request(const std::string& body);
std::string to_json(const ChatResponse& r);
std::string to_json(const HealthStatus& h);
std::string models_json(const std::vector<ModelSpec>& registry);

struct SessionTurn {
  std::string question;
  RagAnswer answer;
  std::chrono::steady_clock::time_point at;
};

using Clock = std::function<std::chrono::steady_clock::time_point()>;

struct ServiceOptions {
  std::vector<ModelSpec> registry = default_registry();
  PromptTemplate prompt_template = PromptTemplate::builtin();
  std::size_t k = kDefaultTopK;
  double temperature = kChatTemperature;
  int max_tokens = 1024;
  std::chrono::minutes session_ttl{60};
  Clock clock;  // steady_clock::now when empty
};

/// Transport-independent chat façade. The store, embedder and registry are
/// fixed at construction; only the session map mutates.
class ChatService {
 public:
  /// `store` may be null: chat then fails with 503 and health is "degraded".
  ChatService(std::shared_ptr<const VectorStore> store, std::shared_ptr<const Embedder> embedder,
              std::shared_ptr<const ChatBackend> backend, ServiceOptions options);

  /// Errors (as ApiError): 400 empty_message / unknown_model, 404
  /// unknown_session, 503 store_unavailable, 502 provider_error with stage.
  ChatResponse handle_chat(const ChatRequest& request);
  const std::vector<ModelSpec>& handle_models() const noexcept { return options_.registry; }
  HealthStatus handle_health() const;

  /// Copy of a session's turns, or nullopt when unknown or expired.
  std::optional<std::vector<SessionTurn>> session_turns(const std::string& session_id);
  std::size_t session_count();

 private:
  struct Session {
    std::vector<SessionTurn> turns;
    std::chrono::steady_clock::time_point last_active;
  };

  std::chrono::steady_clock::time_point now() const;
  void evict_expired(std::chrono::steady_clock::time_point now);  // caller holds mutex_
  std::string new_session_id();                                   // caller holds mutex_

  std::shared_ptr<const VectorStore> store_;
  std::shared_ptr<const Embedder> embedder_;
  std::shared_ptr<const ChatBackend> backend_;
  ServiceOptions options_;

  std::mutex mutex_;
  std::map<std::string, Session> sessions_;
  std::mt19937_64 rng_;
};

/// HTTP binding of a ChatService: POST /v1/chat, GET /v1/models,
/// GET /v1/health, with permissive CORS for browser clients.
class ApiServer {
 public:
  explicit ApiServer(ChatService& service);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Binds and serves on a background thread; returns the bound port
  /// (pass 0 for an ephemeral one). Throws IoError when binding fails.
  int start(const std::string& host, int port);
  /// Blocks serving on the calling thread.
  void listen(const std::string& host, int port);
  void stop();

 private:
  ChatService& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
};

}  // namespace sabia
