#include "sabia/corpus.hpp"

#include <fnmatch.h>
#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string_view>

#include "sabia/error.hpp"
#include "sabia/text.hpp"

namespace fs = std::filesystem;

namespace sabia {
namespace {

bool valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > s.size()) {
      return false;
    }
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) {
        return false;
      }
      cp = (cp << 6) | (cc & 0x3F);
    }
    const std::uint32_t min_cp = len == 2 ? 0x80 : len == 3 ? 0x800 : 0x10000;
    if (cp < min_cp || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      return false;
    }
    i += len;
  }
  return true;
}

bool matches_any(const std::vector<std::string>& patterns, const std::string& rel,
                 const std::string& name) {
  if (patterns.empty()) {
    return true;
  }
  return std::any_of(patterns.begin(), patterns.end(), [&](const std::string& p) {
    return ::fnmatch(p.c_str(), rel.c_str(), 0) == 0 || ::fnmatch(p.c_str(), name.c_str(), 0) == 0;
  });
}

std::string derive_title(std::string_view text, const fs::path& file) {
  std::istringstream lines{std::string(text)};
  std::string line;
  while (std::getline(lines, line)) {
    const auto t = trim(line);
    if (t.empty()) {
      continue;
    }
    if (t.front() == '#') {
      const auto title = trim(t.substr(t.find_first_not_of('#')));
      if (!title.empty()) {
        return std::string(title);
      }
    }
    break;
  }
  return file.stem().string();
}

// Cut position (code-point index) after the last `sep` that ends inside
// (min_cut, limit], or 0 when there is none.
std::size_t last_separator_cut(std::string_view text, const std::vector<std::size_t>& cps,
                               std::string_view sep, std::size_t min_cut, std::size_t limit) {
  const std::size_t window_begin = cps[min_cut];
  const std::size_t window_end = cps[limit];
  if (window_end < sep.size()) {
    return 0;
  }
  std::size_t pos = text.rfind(sep, window_end - sep.size());
  while (pos != std::string_view::npos && pos + sep.size() > window_begin) {
    const std::size_t cut_byte = pos + sep.size();
    if (cut_byte > window_begin && cut_byte <= window_end) {
      const auto it = std::lower_bound(cps.begin(), cps.end(), cut_byte);
      if (it != cps.end() && *it == cut_byte) {
        return static_cast<std::size_t>(it - cps.begin());
      }
    }
    if (pos == 0) {
      break;
    }
    pos = text.rfind(sep, pos - 1);
  }
  return 0;
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0x0F]);
  }
  return out;
}

SourceDocument read_document(const fs::path& file, std::string doc_id) {
  std::ifstream in(file, std::ios::binary);
  if (!in) {
    throw IoError("cannot read " + file.string());
  }
  std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) {
    throw IoError("read failed for " + file.string());
  }
  const std::string_view body = strip_bom(raw);
  if (!valid_utf8(body)) {
    throw IoError("invalid UTF-8 in " + file.string());
  }
  if (is_blank(body)) {
    throw IoError("empty document " + file.string());
  }
  SourceDocument doc;
  doc.doc_id = std::move(doc_id);
  doc.text = std::string(body);
  doc.title = derive_title(doc.text, file);
  doc.origin = file;
  doc.digest = sha256_hex(raw);
  return doc;
}

CorpusLoad load_corpus(const fs::path& root, const std::vector<std::string>& patterns) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw IoError("corpus root is not a readable directory: " + root.string());
  }
  std::vector<std::pair<std::string, fs::path>> candidates;
  fs::recursive_directory_iterator it(root, fs::directory_options::skip_permission_denied, ec);
  if (ec) {
    throw IoError("cannot list " + root.string() + ": " + ec.message());
  }
  for (const auto& entry : it) {
    std::error_code type_ec;
    if (entry.is_directory(type_ec)) {
      continue;
    }
    const std::string rel = entry.path().lexically_relative(root).generic_string();
    if (matches_any(patterns, rel, entry.path().filename().string())) {
      candidates.emplace_back(rel, entry.path());
    }
  }
  std::sort(candidates.begin(), candidates.end());

  CorpusLoad out;
  for (auto& [rel, path] : candidates) {
    try {
      out.documents.push_back(read_document(path, rel));
    } catch (const IoError& e) {
      out.errors.push_back({path, e.what()});
    }
  }
  return out;
}

std::vector<DocumentChunk> chunk_text(const SourceDocument& doc, const ChunkOptions& options) {
  if (options.max_chars <= options.overlap_chars) {
    throw ConfigError("max_chars (" + std::to_string(options.max_chars) +
                      ") must exceed overlap_chars (" + std::to_string(options.overlap_chars) + ")");
  }
  if (doc.text.empty()) {
    throw ConfigError("cannot chunk empty document " + doc.doc_id);
  }
  static constexpr std::array<std::string_view, 4> kSeparators = {"\n\n", "\n", ". ", " "};

  const std::string_view text = doc.text;
  const auto cps = code_point_offsets(text);
  const std::size_t n = cps.size() - 1;

  std::vector<DocumentChunk> chunks;
  std::size_t start = 0;
  while (true) {
    const std::size_t limit = std::min(n, start + options.max_chars);
    std::size_t end = limit;
    if (limit < n) {
      for (const auto sep : kSeparators) {
        if (const auto cut = last_separator_cut(text, cps, sep, start + options.overlap_chars, limit);
            cut != 0) {
          end = cut;
          break;
        }
      }
    }
    DocumentChunk chunk;
    chunk.doc_id = doc.doc_id;
    chunk.chunk_index = static_cast<int>(chunks.size());
    chunk.span = {start, end};
    chunk.text = std::string(text.substr(cps[start], cps[end] - cps[start]));
    chunks.push_back(std::move(chunk));
    if (end == n) {
      break;
    }
    start = end - options.overlap_chars;
  }
  return chunks;
}

}  // namespace sabia
