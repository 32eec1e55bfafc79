#include "http_client.hpp"

#include <httplib.h>

#include <chrono>
#include <cmath>
#include <cstdlib>

#include "sabia/error.hpp"

namespace sabia::detail {

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("URL must include a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  SplitUrl out;
  if (path_start == std::string::npos) {
    out.origin = url;
  } else {
    out.origin = url.substr(0, path_start);
    out.path_prefix = url.substr(path_start);
  }
  while (!out.path_prefix.empty() && out.path_prefix.back() == '/') {
    out.path_prefix.pop_back();
  }
  return out;
}

HttpReply post_json(const std::string& base_url, const std::string& path, const std::string& body,
                    const std::string& bearer_token, double timeout_s) {
  const SplitUrl url = split_url(base_url);
  httplib::Client client(url.origin);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(
      std::chrono::duration<double>(timeout_s));
  const auto secs = static_cast<time_t>(timeout.count() / 1000000);
  const auto usecs = static_cast<time_t>(timeout.count() % 1000000);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  if (!bearer_token.empty()) {
    headers.emplace("Authorization", "Bearer " + bearer_token);
  }
  const auto started = std::chrono::steady_clock::now();
  auto res = client.Post(url.path_prefix + path, headers, body, "application/json");
  if (!res) {
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const auto err = res.error();
    if (err == httplib::Error::ConnectionTimeout ||
        (err == httplib::Error::Read && elapsed >= timeout_s * 0.95)) {
      throw TimeoutError("request to " + base_url + path + " timed out after " +
                         std::to_string(timeout_s) + " s");
    }
    throw ProviderError(0, "request to " + base_url + path + " failed: " + httplib::to_string(err));
  }
  return {res->status, res->body};
}

std::string env_or_empty(const std::string& name) {
  if (name.empty()) {
    return {};
  }
  const char* v = std::getenv(name.c_str());
  return v == nullptr ? std::string{} : std::string(v);
}

std::string excerpt(const std::string& body, std::size_t max_len) {
  if (body.size() <= max_len) {
    return body;
  }
  return body.substr(0, max_len) + "...";
}

}  // namespace sabia::detail
