#include "sabia/genclient.hpp"

#include <json.hpp>

#include <fstream>
#include <iterator>
#include <set>
#include <thread>

#include "http_client.hpp"
#include "sabia/error.hpp"

namespace sabia {
namespace {

using ojson = nlohmann::ordered_json;

ModelSpec spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw ConfigError("model entry must be an object");
  }
  ModelSpec m;
  try {
    m.model_id = j.at("model_id").get<std::string>();
    m.display_name = j.value("display_name", m.model_id);
    m.open_source = j.value("open_source", false);
    m.timeout_s = j.value("timeout_s", 60.0);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad model entry: ") + e.what());
  }
  if (m.model_id.empty()) {
    throw ConfigError("model entry has an empty model_id");
  }
  if (!(m.timeout_s > 0.0)) {
    throw ConfigError("model " + m.model_id + " has a non-positive timeout_s");
  }
  return m;
}

std::string content_of(const nlohmann::json& message) {
  const auto& c = message.at("content");
  if (c.is_string()) {
    return c.get<std::string>();
  }
  if (c.is_array()) {
    std::string out;
    for (const auto& part : c) {
      if (part.is_object() && part.contains("text") && part["text"].is_string()) {
        out += part["text"].get<std::string>();
      }
    }
    return out;
  }
  throw ProtocolError("choices[0].message.content is neither a string nor a list of parts");
}

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

std::string to_string(Role role) {
  switch (role) {
    case Role::system:
      return "system";
    case Role::user:
      return "user";
    case Role::assistant:
      return "assistant";
  }
  return "user";
}

std::vector<ModelSpec> default_registry() {
  return {
      {"openai/gpt-4o-mini", "GPT 4o", false, 60.0},
      {"deepseek/deepseek-r1", "DeepSeek R1", true, 60.0},
      {"meta-llama/llama-4-scout", "LLama 4 Scout", true, 60.0},
      {"google/gemini-2.0-flash-001", "Gemini 2.0 Flash", false, 60.0},
      {"google/gemma-3n-e4b-it", "Gemma 3n", true, 60.0},
      {"microsoft/phi-4-reasoning", "Phi 4", true, 60.0},
      {"qwen/qwen3-235b-a22b", "Qwen3-235b", true, 60.0},
  };
}

ModelSpec default_judge() { return {"openai/gpt-4.1-mini", "GPT-4.1-mini", false, 60.0}; }

std::vector<ModelSpec> registry_from_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) {
    throw ConfigError("config must be a JSON object");
  }
  std::vector<ModelSpec> registry;
  if (doc.value("default_models", true)) {
    registry = default_registry();
  }
  if (doc.contains("models")) {
    if (!doc["models"].is_array()) {
      throw ConfigError("config key 'models' must be an array");
    }
    for (const auto& entry : doc["models"]) {
      registry.push_back(spec_from_json(entry));
    }
  }
  std::set<std::string> seen;
  for (const auto& m : registry) {
    if (!seen.insert(m.model_id).second) {
      throw ConfigError("duplicate model_id in registry: " + m.model_id);
    }
  }
  return registry;
}

std::vector<ModelSpec> registry_from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot read config " + path.string());
  }
  return registry_from_json(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
}

std::optional<ModelSpec> find_model(const std::vector<ModelSpec>& registry, const std::string& model_id) {
  for (const auto& m : registry) {
    if (m.model_id == model_id) {
      return m;
    }
  }
  return std::nullopt;
}

std::string chat_request_body(const ModelSpec& spec, const std::vector<ChatMessage>& messages,
                              const GenerationParams& params) {
  ojson body;
  body["model"] = spec.model_id;
  body["messages"] = ojson::array();
  for (const auto& m : messages) {
    body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  body["temperature"] = params.temperature;
  body["max_tokens"] = params.max_tokens;
  return body.dump();
}

GatewayClient::GatewayClient(GatewayOptions options) : options_(std::move(options)) {
  if (options_.gateway_url.empty()) {
    throw ConfigError("gateway_url is not configured");
  }
  detail::split_url(options_.gateway_url);
}

CompletionResult GatewayClient::complete(const ModelSpec& spec, const std::vector<ChatMessage>& messages,
                                         const GenerationParams& params) const {
  if (messages.empty() || messages.back().role != Role::user) {
    throw ConfigError("chat messages must end with a user message");
  }
  for (const auto& m : messages) {
    if (m.role != Role::assistant && m.content.empty()) {
      throw ConfigError("system and user messages must have content");
    }
  }
  const std::string body = chat_request_body(spec, messages, params);
  const std::string token = detail::env_or_empty(options_.api_key_env);

  const auto started = std::chrono::steady_clock::now();
  detail::HttpReply reply;
  for (int attempt = 1;; ++attempt) {
    reply = detail::post_json(options_.gateway_url, "/chat/completions", body, token, spec.timeout_s);
    if (reply.status >= 200 && reply.status < 300) {
      break;
    }
    if (attempt >= 2 || !retryable(reply.status)) {
      throw ProviderError(reply.status, detail::excerpt(reply.body));
    }
    std::this_thread::sleep_for(options_.retry_backoff);
  }

  std::string text;
  try {
    const auto doc = nlohmann::json::parse(reply.body);
    text = content_of(doc.at("choices").at(0).at("message"));
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("malformed chat completion: ") + e.what());
  }
  const double latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return {std::move(text), spec.model_id, latency};
}

std::string gateway_url_from_env(const std::string& fallback) {
  const auto v = detail::env_or_empty("SABIA_GATEWAY_URL");
  return v.empty() ? fallback : v;
}

}  // namespace sabia
