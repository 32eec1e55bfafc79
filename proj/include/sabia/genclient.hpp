#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace sabia {

struct ModelSpec {
  std::string model_id;      // wire id sent to the gateway
  std::string display_name;
  bool open_source = false;
  double timeout_s = 60.0;
  friend bool operator==(const ModelSpec&, const ModelSpec&) = default;
};

enum class Role { system, user, assistant };

std::string to_string(Role role);

struct ChatMessage {
  Role role = Role::user;
  std::string content;
};

struct GenerationParams {
  double temperature = 0.7;
  int max_tokens = 1024;
};

/// Evaluation runs sample greedily for reproducibility.
inline constexpr double kEvalTemperature = 0.0;
inline constexpr double kChatTemperature = 0.7;

struct CompletionResult {
  std::string text;
  std::string model_id;
  double latency_s = 0.0;
};

/// The seven generation models offered by default, in display order.
std::vector<ModelSpec> default_registry();

/// The model used as evaluation judge; never offered for generation.
ModelSpec default_judge();

/// Default registry extended (or replaced) by the "models" array of a JSON
/// config object. Throws ConfigError on duplicate model ids or bad entries.
std::vector<ModelSpec> registry_from_json(const std::string& json_text);
std::vector<ModelSpec> registry_from_file(const std::filesystem::path& path);

/// Returns the ModelSpec for `model_id`, or nullopt.
std::optional<ModelSpec> find_model(const std::vector<ModelSpec>& registry, const std::string& model_id);

/// Exact request body for a chat completion; stable for identical inputs.
std::string chat_request_body(const ModelSpec& spec, const std::vector<ChatMessage>& messages,
                              const GenerationParams& params);

/// Anything that can answer a chat completion. Implementations must be
/// safe to call from several threads at once.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual CompletionResult complete(const ModelSpec& spec, const std::vector<ChatMessage>& messages,
                                    const GenerationParams& params) const = 0;
};

struct GatewayOptions {
  std::string gateway_url;
  std::string api_key_env = "SABIA_API_KEY";
  std::chrono::milliseconds retry_backoff{500};
};

/// OpenAI-style `/chat/completions` client for an LLM gateway.
///
/// One retry on HTTP 429 or 5xx after `retry_backoff`; timeouts are not
/// retried. Latency is steady-clock time from the first request byte to the
/// final parsed response, including a retry when one happened.
class GatewayClient final : public ChatBackend {
 public:
  explicit GatewayClient(GatewayOptions options);

  CompletionResult complete(const ModelSpec& spec, const std::vector<ChatMessage>& messages,
                            const GenerationParams& params) const override;

  const GatewayOptions& options() const noexcept { return options_; }

 private:
  GatewayOptions options_;
};

/// `SABIA_GATEWAY_URL` when set, else `fallback`.
std::string gateway_url_from_env(const std::string& fallback);

}  // namespace sabia
