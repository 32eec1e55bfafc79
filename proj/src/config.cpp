#include "sabia/config.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <iterator>

#include "http_client.hpp"
#include "sabia/error.hpp"

namespace sabia {
namespace {

template <typename T>
T get_or(const nlohmann::json& doc, const char* key, T fallback) {
  if (!doc.contains(key) || doc[key].is_null()) {
    return fallback;
  }
  try {
    return doc[key].get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

EmbedderConfig parse_embedder(const nlohmann::json& j) {
  if (!j.is_object()) {
    throw ConfigError("config key 'embedder' must be an object");
  }
  EmbedderConfig e;
  const auto kind = get_or<std::string>(j, "kind", "local_hash");
  if (kind == "remote") {
    e.kind = EmbedderKind::remote;
  } else if (kind == "local_hash") {
    e.kind = EmbedderKind::local_hash;
  } else {
    throw ConfigError("embedder kind must be 'remote' or 'local_hash', got '" + kind + "'");
  }
  if (j.contains("endpoint_url")) e.endpoint_url = get_or<std::string>(j, "endpoint_url", "");
  if (j.contains("api_key_env")) e.api_key_env = get_or<std::string>(j, "api_key_env", "");
  if (j.contains("model_name")) e.model_name = get_or<std::string>(j, "model_name", "");
  e.dim = get_or<int>(j, "dim", e.dim);
  e.timeout_s = get_or<double>(j, "timeout_s", e.timeout_s);
  e.validate();
  return e;
}

}  // namespace

AppConfig parse_app_config(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) {
    throw ConfigError("config must be a JSON object");
  }
  AppConfig cfg;
  cfg.gateway_url = get_or<std::string>(doc, "gateway_url", cfg.gateway_url);
  cfg.api_key_env = get_or<std::string>(doc, "api_key_env", cfg.api_key_env);
  cfg.store_path = get_or<std::string>(doc, "store_path", cfg.store_path.string());
  if (doc.contains("template_path")) cfg.template_path = get_or<std::string>(doc, "template_path", "");
  if (doc.contains("judge_template_path")) {
    cfg.judge_template_path = get_or<std::string>(doc, "judge_template_path", "");
  }
  const auto k = get_or<long long>(doc, "k", static_cast<long long>(cfg.k));
  if (k < 1) {
    throw ConfigError("config key 'k' must be at least 1");
  }
  cfg.k = static_cast<std::size_t>(k);
  cfg.temperature = get_or<double>(doc, "temperature", cfg.temperature);
  cfg.max_tokens = get_or<int>(doc, "max_tokens", cfg.max_tokens);
  const auto ttl = get_or<long long>(doc, "session_ttl_minutes", cfg.session_ttl.count());
  if (ttl < 1) {
    throw ConfigError("config key 'session_ttl_minutes' must be positive");
  }
  cfg.session_ttl = std::chrono::minutes(ttl);
  if (doc.contains("embedder")) {
    cfg.embedder = parse_embedder(doc["embedder"]);
  }
  cfg.models = registry_from_json(json_text);
  if (doc.contains("judge")) {
    const auto& j = doc["judge"];
    if (!j.is_object() || !j.contains("model_id")) {
      throw ConfigError("config key 'judge' must be an object with model_id");
    }
    cfg.judge.model_id = get_or<std::string>(j, "model_id", cfg.judge.model_id);
    cfg.judge.display_name = get_or<std::string>(j, "display_name", cfg.judge.model_id);
    cfg.judge.timeout_s = get_or<double>(j, "timeout_s", cfg.judge.timeout_s);
  }
  return cfg;
}

void apply_env_overrides(AppConfig& cfg) {
  if (auto v = detail::env_or_empty("SABIA_GATEWAY_URL"); !v.empty()) cfg.gateway_url = v;
  if (auto v = detail::env_or_empty("SABIA_API_KEY_ENV"); !v.empty()) cfg.api_key_env = v;
  if (auto v = detail::env_or_empty("SABIA_STORE_PATH"); !v.empty()) cfg.store_path = v;
  if (auto v = detail::env_or_empty("SABIA_TEMPLATE_PATH"); !v.empty()) cfg.template_path = v;
  if (auto v = detail::env_or_empty("SABIA_K"); !v.empty()) {
    std::size_t k = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), k);
    if (ec != std::errc{} || ptr != v.data() + v.size() || k < 1) {
      throw ConfigError("SABIA_K must be a positive integer");
    }
    cfg.k = k;
  }
  if (auto v = detail::env_or_empty("SABIA_TEMPERATURE"); !v.empty()) {
    double t = 0.0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), t);
    if (ec != std::errc{} || ptr != v.data() + v.size() || t < 0.0) {
      throw ConfigError("SABIA_TEMPERATURE must be a non-negative number");
    }
    cfg.temperature = t;
  }
}

AppConfig load_app_config(const std::optional<std::filesystem::path>& path) {
  AppConfig cfg;
  if (path) {
    std::ifstream in(*path);
    if (!in) {
      throw ConfigError("cannot read config " + path->string());
    }
    cfg = parse_app_config(std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>()));
  }
  apply_env_overrides(cfg);
  return cfg;
}

}  // namespace sabia
