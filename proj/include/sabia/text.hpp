#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace sabia {

/// Lowercased word tokens derived from a text. Never contains empty tokens.
struct TokenSeq {
  std::vector<std::string> tokens;

  TokenSeq() = default;
  explicit TokenSeq(std::vector<std::string> toks) : tokens(std::move(toks)) {}
  TokenSeq(std::initializer_list<std::string> toks) : tokens(toks) {}

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }
  const std::string& operator[](std::size_t i) const { return tokens[i]; }
  auto begin() const noexcept { return tokens.begin(); }
  auto end() const noexcept { return tokens.end(); }

  friend bool operator==(const TokenSeq&, const TokenSeq&) = default;
};

/// NFC-normalize, lowercase, and split on every maximal run of characters
/// that are neither letters, digits nor combining marks.
TokenSeq tokenize(std::string_view text);

/// FNV-1a 64-bit over raw bytes.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// Byte offset of every code point in a UTF-8 string, followed by text.size().
/// Invalid sequences count as one code point per byte.
std::vector<std::size_t> code_point_offsets(std::string_view text);

/// Strips a leading UTF-8 byte-order mark, if present.
std::string_view strip_bom(std::string_view bytes) noexcept;

bool is_blank(std::string_view text) noexcept;

/// Trims ASCII whitespace from both ends.
std::string_view trim(std::string_view text) noexcept;

}  // namespace sabia
