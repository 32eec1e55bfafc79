#pragma once

#include <string>

namespace sabia::detail {

struct HttpReply {
  int status = 0;
  std::string body;
};

/// Splits "https://host:port/prefix" into "https://host:port" and "/prefix".
struct SplitUrl {
  std::string origin;
  std::string path_prefix;
};
SplitUrl split_url(const std::string& url);

/// Blocking JSON POST. Throws TimeoutError when no response arrives within
/// `timeout_s`, ProviderError(0, ...) when the connection fails.
HttpReply post_json(const std::string& base_url, const std::string& path, const std::string& body,
                    const std::string& bearer_token, double timeout_s);

/// Value of the environment variable, or empty.
std::string env_or_empty(const std::string& name);

std::string excerpt(const std::string& body, std::size_t max_len = 200);

}  // namespace sabia::detail
