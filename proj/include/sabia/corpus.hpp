#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace sabia {

struct SourceDocument {
  std::string doc_id;  // relative path, '/'-separated
  std::string title;
  std::string text;    // UTF-8, BOM stripped
  std::filesystem::path origin;
  std::string digest;  // SHA-256 of the raw file bytes, lowercase hex
};

/// Half-open range of code-point offsets into SourceDocument::text.
struct CharSpan {
  std::size_t start = 0;
  std::size_t end = 0;
  friend bool operator==(const CharSpan&, const CharSpan&) = default;
};

struct DocumentChunk {
  std::string doc_id;
  int chunk_index = 0;
  std::string text;
  CharSpan span;
  friend bool operator==(const DocumentChunk&, const DocumentChunk&) = default;
};

struct FileError {
  std::filesystem::path path;
  std::string message;
};

struct CorpusLoad {
  std::vector<SourceDocument> documents;
  std::vector<FileError> errors;
};

struct ChunkOptions {
  std::size_t max_chars = 1000;
  std::size_t overlap_chars = 200;
};

/// Loads every regular file under `root` whose name or relative path matches
/// one of the glob patterns. Documents come back sorted by relative path;
/// unreadable or blank files are reported in `errors` and skipped.
CorpusLoad load_corpus(const std::filesystem::path& root, const std::vector<std::string>& patterns);

/// Reads and validates one file as a document with the given id.
SourceDocument read_document(const std::filesystem::path& file, std::string doc_id);

std::string sha256_hex(std::string_view bytes);

/// Splits a document into overlapping chunks of at most `max_chars` code points.
///
/// Cuts prefer, in order, the last paragraph break, line break, sentence end
/// and space inside the window; a hard cut is made only when none exists. The
/// next chunk starts `overlap_chars` before the previous cut. Chunk spans
/// cover the whole text without gaps.
std::vector<DocumentChunk> chunk_text(const SourceDocument& doc, const ChunkOptions& options = {});

}  // namespace sabia
