#include "sabia/embed.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

#include "http_client.hpp"
#include "sabia/error.hpp"
#include "sabia/text.hpp"

namespace sabia {

Embedding Embedding::normalized(std::vector<double> values, std::string embedder_id) {
  if (values.empty()) {
    throw IntegrityError("embedding has no values");
  }
  double sq = 0.0;
  for (const double v : values) {
    if (!std::isfinite(v)) {
      throw IntegrityError("embedding contains a non-finite value");
    }
    sq += v * v;
  }
  const double norm = std::sqrt(sq);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw IntegrityError("embedding has zero norm");
  }
  for (double& v : values) {
    v /= norm;
  }
  return Embedding(std::move(values), std::move(embedder_id));
}

Embedding Embedding::from_unit(std::vector<double> values, std::string embedder_id) {
  if (values.empty()) {
    throw IntegrityError("embedding has no values");
  }
  double sq = 0.0;
  for (const double v : values) {
    if (!std::isfinite(v)) {
      throw IntegrityError("embedding contains a non-finite value");
    }
    sq += v * v;
  }
  if (std::abs(std::sqrt(sq) - 1.0) > 1e-9) {
    throw IntegrityError("embedding is not unit norm");
  }
  return Embedding(std::move(values), std::move(embedder_id));
}

void EmbedderConfig::validate() const {
  if (dim <= 0) {
    throw ConfigError("embedder dim must be positive");
  }
  if (kind == EmbedderKind::remote && (!endpoint_url || endpoint_url->empty())) {
    throw ConfigError("remote embedder requires endpoint_url");
  }
}

double cosine(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim()) {
    throw IntegrityError("cosine of embeddings with dims " + std::to_string(a.dim()) + " and " +
                         std::to_string(b.dim()));
  }
  const auto& x = a.values();
  const auto& y = b.values();
  double dot = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    dot += x[i] * y[i];
  }
  return std::clamp(dot, -1.0, 1.0);
}

std::string hash_embedder_id(int dim) { return "local-hash-fnv1a-" + std::to_string(dim); }

Embedding hash_embed(std::string_view text, int dim) {
  if (dim <= 0) {
    throw ConfigError("embedding dim must be positive");
  }
  const TokenSeq tokens = tokenize(text);
  if (tokens.empty()) {
    throw ConfigError("empty text");
  }
  std::vector<double> acc(static_cast<std::size_t>(dim), 0.0);
  for (const auto& tok : tokens) {
    const std::uint64_t h = fnv1a64(tok);
    const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
    acc[h % static_cast<std::uint64_t>(dim)] += sign;
  }
  // Colliding tokens of opposite sign can cancel to zero.
  if (std::all_of(acc.begin(), acc.end(), [](double v) { return v == 0.0; })) {
    acc[fnv1a64(tokens[0]) % static_cast<std::uint64_t>(dim)] = 1.0;
  }
  return Embedding::normalized(std::move(acc), hash_embedder_id(dim));
}

std::vector<Embedding> remote_embed(const EmbedderConfig& cfg, const std::vector<std::string>& texts) {
  if (cfg.kind != EmbedderKind::remote) {
    throw ConfigError("remote_embed requires a remote embedder config");
  }
  cfg.validate();
  if (texts.empty()) {
    throw ConfigError("remote_embed requires at least one text");
  }
  const std::string model = cfg.model_name.value_or("");
  nlohmann::json req = {{"model", model}, {"input", texts}};
  const auto reply = detail::post_json(*cfg.endpoint_url, "/embeddings", req.dump(),
                                       detail::env_or_empty(cfg.api_key_env.value_or("")), cfg.timeout_s);
  if (reply.status < 200 || reply.status >= 300) {
    throw ProviderError(reply.status, detail::excerpt(reply.body));
  }

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(reply.body);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("embedding response is not JSON: ") + e.what());
  }
  if (!doc.contains("data") || !doc["data"].is_array()) {
    throw ProtocolError("embedding response lacks a data array");
  }
  const auto& data = doc["data"];
  if (data.size() != texts.size()) {
    throw IntegrityError("embedding response has " + std::to_string(data.size()) + " items for " +
                         std::to_string(texts.size()) + " inputs");
  }
  const std::string id = model.empty() ? *cfg.endpoint_url : model;
  std::vector<std::optional<Embedding>> slots(texts.size());
  for (std::size_t pos = 0; pos < data.size(); ++pos) {
    const auto& item = data[pos];
    if (!item.is_object() || !item.contains("embedding") || !item["embedding"].is_array()) {
      throw ProtocolError("embedding item " + std::to_string(pos) + " is malformed");
    }
    std::size_t index = pos;
    if (item.contains("index")) {
      if (!item["index"].is_number_integer()) {
        throw ProtocolError("embedding item " + std::to_string(pos) + " has a non-integer index");
      }
      const auto raw = item["index"].get<long long>();
      if (raw < 0 || static_cast<std::size_t>(raw) >= texts.size()) {
        throw IntegrityError("embedding index " + std::to_string(raw) + " out of range");
      }
      index = static_cast<std::size_t>(raw);
    }
    if (slots[index]) {
      throw IntegrityError("duplicate embedding index " + std::to_string(index));
    }
    std::vector<double> values;
    values.reserve(item["embedding"].size());
    for (const auto& v : item["embedding"]) {
      if (!v.is_number()) {
        throw ProtocolError("embedding item " + std::to_string(pos) + " has a non-numeric value");
      }
      values.push_back(v.get<double>());
    }
    if (static_cast<int>(values.size()) != cfg.dim) {
      throw IntegrityError("embedding item " + std::to_string(index) + " has dim " +
                           std::to_string(values.size()) + ", expected " + std::to_string(cfg.dim));
    }
    slots[index] = Embedding::normalized(std::move(values), id);
  }
  std::vector<Embedding> out;
  out.reserve(slots.size());
  for (auto& s : slots) {
    out.push_back(std::move(*s));
  }
  return out;
}

Embedding Embedder::embed_one(const std::string& text) const {
  auto v = embed({text});
  if (v.size() != 1) {
    throw IntegrityError("embedder returned " + std::to_string(v.size()) + " vectors for one text");
  }
  return std::move(v.front());
}

HashEmbedder::HashEmbedder(int dim) : dim_(dim) {
  if (dim <= 0) {
    throw ConfigError("embedding dim must be positive");
  }
}

std::vector<Embedding> HashEmbedder::embed(const std::vector<std::string>& texts) const {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) {
    out.push_back(hash_embed(t, dim_));
  }
  return out;
}

RemoteEmbedder::RemoteEmbedder(EmbedderConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.kind = EmbedderKind::remote;
  cfg_.validate();
}

std::string RemoteEmbedder::id() const {
  return cfg_.model_name && !cfg_.model_name->empty() ? *cfg_.model_name : *cfg_.endpoint_url;
}

std::vector<Embedding> RemoteEmbedder::embed(const std::vector<std::string>& texts) const {
  return remote_embed(cfg_, texts);
}

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& cfg) {
  cfg.validate();
  if (cfg.kind == EmbedderKind::remote) {
    return std::make_unique<RemoteEmbedder>(cfg);
  }
  return std::make_unique<HashEmbedder>(cfg.dim);
}

}  // namespace sabia
