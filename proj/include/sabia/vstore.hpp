#pragma once

#include <cstdint>
#include <filesystem>
#include <shared_mutex>
#include <string>
#include <vector>

#include "sabia/corpus.hpp"
#include "sabia/embed.hpp"

namespace sabia {

inline constexpr int kStoreFormatVersion = 1;

struct StoreHeader {
  int format_version = kStoreFormatVersion;
  int dim = 0;
  std::string embedder_id;
  std::size_t count = 0;
  friend bool operator==(const StoreHeader&, const StoreHeader&) = default;
};

struct VectorRecord {
  DocumentChunk chunk;
  Embedding embedding;
  std::uint64_t insert_seq = 0;  // assigned by the store
  friend bool operator==(const VectorRecord&, const VectorRecord&) = default;
};

struct SearchHit {
  DocumentChunk chunk;
  double score = 0.0;
  std::uint64_t insert_seq = 0;
};

/// Ordering of a result list: score descending, then insert_seq ascending.
bool hit_before(const SearchHit& a, const SearchHit& b) noexcept;

/// Exact cosine index over unit vectors, persisted as JSON lines.
///
/// Readers (top_k, snapshot, save) and writers (upsert) follow a
/// reader-writer contract: an upsert batch becomes visible atomically.
class VectorStore {
 public:
  VectorStore(int dim, std::string embedder_id);

  VectorStore(const VectorStore&) = delete;
  VectorStore& operator=(const VectorStore&) = delete;

  /// Replaces records whose (doc_id, chunk_index) already exists, keeping
  /// their insert_seq; appends the rest. All-or-nothing: a record with the
  /// wrong dim or embedder_id throws IntegrityError and leaves the store as is.
  /// Returns the resulting count.
  std::size_t upsert(std::vector<VectorRecord> records);

  /// The k most similar records, exact.
  std::vector<SearchHit> top_k(const Embedding& query, std::size_t k) const;

  StoreHeader header() const;
  std::size_t count() const;
  int dim() const noexcept { return dim_; }
  const std::string& embedder_id() const noexcept { return embedder_id_; }

  /// Copy of all records in insertion-slot order.
  std::vector<VectorRecord> records() const;

  void save(const std::filesystem::path& path) const;
  std::string serialize() const;

  /// Throws UnsupportedVersionError, IntegrityError (naming the bad record) or IoError.
  static std::unique_ptr<VectorStore> load(const std::filesystem::path& path);
  static std::unique_ptr<VectorStore> parse(const std::string& content);

 private:
  const int dim_;
  const std::string embedder_id_;
  mutable std::shared_mutex mutex_;
  std::vector<VectorRecord> records_;
  std::uint64_t next_seq_ = 0;
};

}  // namespace sabia
