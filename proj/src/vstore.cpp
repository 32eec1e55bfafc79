#include "sabia/vstore.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <mutex>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "sabia/error.hpp"

namespace sabia {
namespace {

using ojson = nlohmann::ordered_json;

std::string record_key(const DocumentChunk& c) {
  return c.doc_id + '\0' + std::to_string(c.chunk_index);
}

ojson record_to_json(const VectorRecord& r) {
  ojson j;
  j["seq"] = r.insert_seq;
  j["doc_id"] = r.chunk.doc_id;
  j["chunk_index"] = r.chunk.chunk_index;
  j["start"] = r.chunk.span.start;
  j["end"] = r.chunk.span.end;
  j["text"] = r.chunk.text;
  j["embedding"] = r.embedding.values();
  return j;
}

VectorRecord record_from_json(const ojson& j, const StoreHeader& h) {
  VectorRecord r;
  r.insert_seq = j.at("seq").get<std::uint64_t>();
  r.chunk.doc_id = j.at("doc_id").get<std::string>();
  r.chunk.chunk_index = j.at("chunk_index").get<int>();
  r.chunk.span.start = j.at("start").get<std::size_t>();
  r.chunk.span.end = j.at("end").get<std::size_t>();
  r.chunk.text = j.at("text").get<std::string>();
  if (r.chunk.chunk_index < 0 || r.chunk.span.start >= r.chunk.span.end) {
    throw IntegrityError("invalid chunk span or index");
  }
  auto values = j.at("embedding").get<std::vector<double>>();
  if (static_cast<int>(values.size()) != h.dim) {
    throw IntegrityError("embedding dim " + std::to_string(values.size()) + " != header dim " +
                         std::to_string(h.dim));
  }
  r.embedding = Embedding::from_unit(std::move(values), h.embedder_id);
  return r;
}

}  // namespace

bool hit_before(const SearchHit& a, const SearchHit& b) noexcept {
  if (a.score != b.score) {
    return a.score > b.score;
  }
  return a.insert_seq < b.insert_seq;
}

VectorStore::VectorStore(int dim, std::string embedder_id)
    : dim_(dim), embedder_id_(std::move(embedder_id)) {
  if (dim_ <= 0) {
    throw ConfigError("store dim must be positive");
  }
  if (embedder_id_.empty()) {
    throw ConfigError("store embedder_id must be nonempty");
  }
}

std::size_t VectorStore::upsert(std::vector<VectorRecord> records) {
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& e = records[i].embedding;
    if (e.dim() != dim_) {
      throw IntegrityError("record " + std::to_string(i) + " has dim " + std::to_string(e.dim()) +
                           ", store dim is " + std::to_string(dim_));
    }
    if (e.embedder_id() != embedder_id_) {
      throw IntegrityError("record " + std::to_string(i) + " embedded by '" + e.embedder_id() +
                           "', store expects '" + embedder_id_ + "'");
    }
  }

  std::unique_lock lock(mutex_);
  std::unordered_map<std::string, std::size_t> slots;
  slots.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    slots.emplace(record_key(records_[i].chunk), i);
  }
  for (auto& r : records) {
    const auto key = record_key(r.chunk);
    if (const auto it = slots.find(key); it != slots.end()) {
      r.insert_seq = records_[it->second].insert_seq;
      records_[it->second] = std::move(r);
    } else {
      r.insert_seq = next_seq_++;
      slots.emplace(key, records_.size());
      records_.push_back(std::move(r));
    }
  }
  return records_.size();
}

std::vector<SearchHit> VectorStore::top_k(const Embedding& query, std::size_t k) const {
  if (query.dim() != dim_) {
    throw IntegrityError("query dim " + std::to_string(query.dim()) + " != store dim " +
                         std::to_string(dim_));
  }
  std::shared_lock lock(mutex_);
  struct Scored {
    double score;
    std::uint64_t seq;
    std::size_t slot;
  };
  std::vector<Scored> scored;
  scored.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    scored.push_back({cosine(query, records_[i].embedding), records_[i].insert_seq, i});
  }
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                    [](const Scored& a, const Scored& b) {
                      if (a.score != b.score) {
                        return a.score > b.score;
                      }
                      return a.seq < b.seq;
                    });
  std::vector<SearchHit> hits;
  hits.reserve(take);
  for (std::size_t i = 0; i < take; ++i) {
    hits.push_back({records_[scored[i].slot].chunk, scored[i].score, scored[i].seq});
  }
  return hits;
}

StoreHeader VectorStore::header() const {
  std::shared_lock lock(mutex_);
  return {kStoreFormatVersion, dim_, embedder_id_, records_.size()};
}

std::size_t VectorStore::count() const {
  std::shared_lock lock(mutex_);
  return records_.size();
}

std::vector<VectorRecord> VectorStore::records() const {
  std::shared_lock lock(mutex_);
  return records_;
}

std::string VectorStore::serialize() const {
  std::shared_lock lock(mutex_);
  std::string out;
  ojson header;
  header["format_version"] = kStoreFormatVersion;
  header["dim"] = dim_;
  header["embedder_id"] = embedder_id_;
  header["count"] = records_.size();
  out += header.dump();
  out += '\n';
  for (const auto& r : records_) {
    out += record_to_json(r).dump();
    out += '\n';
  }
  return out;
}

void VectorStore::save(const std::filesystem::path& path) const {
  const std::string content = serialize();
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw IoError("cannot write " + tmp.string());
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      throw IoError("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    throw IoError("cannot replace " + path.string() + ": " + ec.message());
  }
}

std::unique_ptr<VectorStore> VectorStore::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open store " + path.string());
  }
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse(content);
}

std::unique_ptr<VectorStore> VectorStore::parse(const std::string& content) {
  std::vector<std::string_view> lines;
  std::string_view rest = content;
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    lines.push_back(rest.substr(0, nl));
    if (nl == std::string_view::npos) {
      break;
    }
    rest.remove_prefix(nl + 1);
  }
  if (lines.empty() || lines.front().empty()) {
    throw IntegrityError("store has no header line");
  }

  StoreHeader h;
  try {
    const auto j = ojson::parse(lines.front());
    h.format_version = j.at("format_version").get<int>();
    if (h.format_version != kStoreFormatVersion) {
      throw UnsupportedVersionError(h.format_version);
    }
    h.dim = j.at("dim").get<int>();
    h.embedder_id = j.at("embedder_id").get<std::string>();
    h.count = j.at("count").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError(std::string("corrupt store header: ") + e.what());
  }

  auto store = std::make_unique<VectorStore>(h.dim, h.embedder_id);
  std::unordered_set<std::uint64_t> seqs;
  std::unordered_set<std::string> keys;
  std::uint64_t max_seq = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const std::size_t record_index = i - 1;
    VectorRecord r;
    try {
      r = record_from_json(ojson::parse(lines[i]), h);
    } catch (const nlohmann::json::exception& e) {
      throw IntegrityError("corrupt store record " + std::to_string(record_index) + ": " + e.what());
    } catch (const IntegrityError& e) {
      throw IntegrityError("corrupt store record " + std::to_string(record_index) + ": " + e.what());
    }
    if (!seqs.insert(r.insert_seq).second || !keys.insert(record_key(r.chunk)).second) {
      throw IntegrityError("corrupt store record " + std::to_string(record_index) +
                           ": duplicate seq or chunk key");
    }
    max_seq = std::max(max_seq, r.insert_seq);
    store->records_.push_back(std::move(r));
  }
  if (store->records_.size() != h.count) {
    throw IntegrityError("store header declares " + std::to_string(h.count) + " records, found " +
                         std::to_string(store->records_.size()) + " (truncated?)");
  }
  store->next_seq_ = store->records_.empty() ? 0 : max_seq + 1;
  return store;
}

}  // namespace sabia
