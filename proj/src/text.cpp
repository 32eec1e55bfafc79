#include "sabia/text.hpp"

#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/locid.h>
#include <unicode/unistr.h>

#include <stdexcept>

namespace sabia {
namespace {

bool is_word_char(UChar32 c) {
  if (u_isalnum(c)) {
    return true;
  }
  return (U_GET_GC_MASK(c) & U_GC_M_MASK) != 0;
}

icu::UnicodeString nfc(const icu::UnicodeString& in) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) {
    throw std::runtime_error("ICU NFC normalizer unavailable");
  }
  icu::UnicodeString out = normalizer->normalize(in, status);
  if (U_FAILURE(status)) {
    throw std::runtime_error("ICU normalization failed");
  }
  return out;
}

}  // namespace

TokenSeq tokenize(std::string_view text) {
  TokenSeq seq;
  if (text.empty()) {
    return seq;
  }
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  u = nfc(u);
  u.toLower(icu::Locale::getRoot());
  u = nfc(u);

  icu::UnicodeString current;
  auto flush = [&] {
    if (!current.isEmpty()) {
      std::string utf8;
      current.toUTF8String(utf8);
      seq.tokens.push_back(std::move(utf8));
      current.remove();
    }
  };
  for (int32_t i = 0; i < u.length();) {
    const UChar32 c = u.char32At(i);
    if (is_word_char(c)) {
      current.append(c);
    } else {
      flush();
    }
    i = u.moveIndex32(i, 1);
  }
  flush();
  return seq;
}

std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char ch : bytes) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<std::size_t> code_point_offsets(std::string_view text) {
  std::vector<std::size_t> offsets;
  offsets.reserve(text.size() + 1);
  std::size_t i = 0;
  while (i < text.size()) {
    offsets.push_back(i);
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 1;
    if (lead >= 0xF0 && lead < 0xF8) {
      len = 4;
    } else if (lead >= 0xE0) {
      len = lead < 0xF0 ? 3 : 1;
    } else if (lead >= 0xC0) {
      len = 2;
    }
    if (len > 1) {
      if (i + len > text.size()) {
        len = 1;
      } else {
        for (std::size_t k = 1; k < len; ++k) {
          if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
            len = 1;
            break;
          }
        }
      }
    }
    i += len;
  }
  offsets.push_back(text.size());
  return offsets;
}

std::string_view strip_bom(std::string_view bytes) noexcept {
  constexpr std::string_view kBom = "\xEF\xBB\xBF";
  if (bytes.substr(0, kBom.size()) == kBom) {
    bytes.remove_prefix(kBom.size());
  }
  return bytes;
}

std::string_view trim(std::string_view text) noexcept {
  constexpr std::string_view kSpace = " \t\r\n\f\v";
  const auto first = text.find_first_not_of(kSpace);
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = text.find_last_not_of(kSpace);
  return text.substr(first, last - first + 1);
}

bool is_blank(std::string_view text) noexcept { return trim(text).empty(); }

}  // namespace sabia
