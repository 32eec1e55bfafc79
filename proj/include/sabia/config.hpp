#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sabia/embed.hpp"
#include "sabia/genclient.hpp"

namespace sabia {

/// Settings shared by the CLI verbs, read from a JSON file and then
/// overridden by environment variables:
///   SABIA_GATEWAY_URL, SABIA_API_KEY_ENV, SABIA_STORE_PATH,
///   SABIA_TEMPLATE_PATH, SABIA_K, SABIA_TEMPERATURE.
struct AppConfig {
  std::string gateway_url = "https://openrouter.ai/api/v1";
  std::string api_key_env = "SABIA_API_KEY";
  std::filesystem::path store_path = "sabia_store.jsonl";
  std::optional<std::filesystem::path> template_path;
  std::optional<std::filesystem::path> judge_template_path;
  std::size_t k = 4;
  double temperature = kChatTemperature;
  int max_tokens = 1024;
  std::chrono::minutes session_ttl{60};
  EmbedderConfig embedder;
  std::vector<ModelSpec> models = default_registry();
  ModelSpec judge = default_judge();
};

/// Parses a config document (all keys optional). Throws ConfigError.
AppConfig parse_app_config(const std::string& json_text);

/// Defaults when `path` is empty, otherwise the file; env overrides applied
/// in both cases.
AppConfig load_app_config(const std::optional<std::filesystem::path>& path);

/// Applies the SABIA_* environment overrides in place.
void apply_env_overrides(AppConfig& cfg);

}  // namespace sabia
