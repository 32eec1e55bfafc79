#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sabia {

/// Unit-norm embedding vector tagged with the embedder that produced it.
class Embedding {
 public:
  Embedding() = default;

  /// L2-normalizes `values`. Throws IntegrityError on empty, non-finite or zero vectors.
  static Embedding normalized(std::vector<double> values, std::string embedder_id);

  /// Adopts values that are already unit norm (e.g. read back from a store).
  /// Throws IntegrityError when the norm is off by more than 1e-9.
  static Embedding from_unit(std::vector<double> values, std::string embedder_id);

  const std::vector<double>& values() const noexcept { return values_; }
  int dim() const noexcept { return static_cast<int>(values_.size()); }
  const std::string& embedder_id() const noexcept { return embedder_id_; }

  friend bool operator==(const Embedding&, const Embedding&) = default;

 private:
  Embedding(std::vector<double> values, std::string id)
      : values_(std::move(values)), embedder_id_(std::move(id)) {}

  std::vector<double> values_;
  std::string embedder_id_;
};

enum class EmbedderKind { remote, local_hash };

struct EmbedderConfig {
  EmbedderKind kind = EmbedderKind::local_hash;
  std::optional<std::string> endpoint_url;
  std::optional<std::string> api_key_env;
  std::optional<std::string> model_name;
  int dim = 512;
  double timeout_s = 30.0;

  /// Throws ConfigError when remote lacks an endpoint or dim <= 0.
  void validate() const;
};

/// Dot product of two unit vectors, clamped to [-1, 1].
double cosine(const Embedding& a, const Embedding& b);

std::string hash_embedder_id(int dim);

/// Signed feature hashing over the token bag: every token's FNV-1a hash picks
/// slot `h % dim`, bit 63 picks the sign. Throws ConfigError("empty text") when
/// the text has no tokens.
Embedding hash_embed(std::string_view text, int dim);

/// POSTs `{endpoint}/embeddings` and returns one normalized embedding per text.
std::vector<Embedding> remote_embed(const EmbedderConfig& cfg, const std::vector<std::string>& texts);

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::string id() const = 0;
  virtual int dim() const = 0;
  virtual std::vector<Embedding> embed(const std::vector<std::string>& texts) const = 0;

  Embedding embed_one(const std::string& text) const;
};

class HashEmbedder final : public Embedder {
 public:
  explicit HashEmbedder(int dim);
  std::string id() const override { return hash_embedder_id(dim_); }
  int dim() const override { return dim_; }
  std::vector<Embedding> embed(const std::vector<std::string>& texts) const override;

 private:
  int dim_;
};

class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(EmbedderConfig cfg);
  std::string id() const override;
  int dim() const override { return cfg_.dim; }
  std::vector<Embedding> embed(const std::vector<std::string>& texts) const override;

 private:
  EmbedderConfig cfg_;
};

std::unique_ptr<Embedder> make_embedder(const EmbedderConfig& cfg);

}  // namespace sabia
