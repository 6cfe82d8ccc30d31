#pragma once

// UTF-8 helpers backed by ICU: normalization, case mapping, code point
// classification and tokenization.

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "archrag/error.hpp"

namespace archrag::text {

/// Calls fn(code_point, byte_offset, byte_length) for each code point.
/// Ill-formed sequences are reported as U+FFFD.
template <typename Fn>
void for_each_code_point(std::string_view s, Fn&& fn) {
  const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
  const auto len = static_cast<int32_t>(s.size());
  int32_t i = 0;
  while (i < len) {
    const int32_t start = i;
    UChar32 c = 0;
    U8_NEXT(bytes, i, len, c);
    if (c < 0) c = 0xFFFD;
    fn(static_cast<char32_t>(c), static_cast<std::size_t>(start),
       static_cast<std::size_t>(i - start));
  }
}

inline void append_utf8(std::string& out, char32_t cp) {
  char buf[4];
  int32_t n = 0;
  UBool error = false;
  U8_APPEND(reinterpret_cast<uint8_t*>(buf), n, 4, static_cast<UChar32>(cp),
            error);
  if (!error) out.append(buf, static_cast<std::size_t>(n));
}

inline bool is_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)); }
inline bool is_letter(char32_t c) { return u_isalpha(static_cast<UChar32>(c)); }
inline bool is_alnum(char32_t c) {
  return u_isalnum(static_cast<UChar32>(c)) ||
         u_getIntPropertyValue(static_cast<UChar32>(c), UCHAR_GENERAL_CATEGORY) ==
             U_NON_SPACING_MARK;
}
inline bool is_punct(char32_t c) { return u_ispunct(static_cast<UChar32>(c)); }

inline std::string nfc(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw Error("ICU NFC normalizer unavailable");
  icu::UnicodeString src = icu::UnicodeString::fromUTF8(
      icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  icu::UnicodeString dst = norm->normalize(src, status);
  if (U_FAILURE(status)) throw Error("NFC normalization failed");
  std::string out;
  dst.toUTF8String(out);
  return out;
}

inline std::string to_lower(std::string_view s) {
  icu::UnicodeString u = icu::UnicodeString::fromUTF8(
      icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
  u.toLower(icu::Locale::getRoot());
  std::string out;
  u.toUTF8String(out);
  return out;
}

/// Number of code points in s.
inline std::size_t length(std::string_view s) {
  std::size_t n = 0;
  for_each_code_point(s, [&](char32_t, std::size_t, std::size_t) { ++n; });
  return n;
}

/// Byte offsets for code point offsets [start, end); nullopt if out of range.
inline std::optional<std::pair<std::size_t, std::size_t>> byte_range(
    std::string_view s, std::size_t start, std::size_t end) {
  std::size_t cp = 0;
  std::optional<std::size_t> bstart, bend;
  for_each_code_point(s, [&](char32_t, std::size_t off, std::size_t) {
    if (cp == start) bstart = off;
    if (cp == end) bend = off;
    ++cp;
  });
  if (start == cp) bstart = s.size();
  if (end == cp) bend = s.size();
  if (!bstart || !bend || *bstart > *bend) return std::nullopt;
  return std::pair{*bstart, *bend};
}

/// Splits on Unicode whitespace.
inline std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t tok_start = 0;
  bool in_tok = false;
  for_each_code_point(s, [&](char32_t c, std::size_t off, std::size_t) {
    if (is_space(c)) {
      if (in_tok) out.push_back(s.substr(tok_start, off - tok_start));
      in_tok = false;
    } else if (!in_tok) {
      tok_start = off;
      in_tok = true;
    }
  });
  if (in_tok) out.push_back(s.substr(tok_start));
  return out;
}

/// Lowercased maximal runs of letters, digits and combining marks.
inline std::vector<std::string> word_tokens(std::string_view s) {
  const std::string lower = to_lower(s);
  std::vector<std::string> out;
  std::string cur;
  for_each_code_point(lower, [&](char32_t c, std::size_t off, std::size_t n) {
    if (is_alnum(c)) {
      cur.append(lower, off, n);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  });
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

inline std::string_view trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\n' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\n' ||
                   s[e - 1] == '\r'))
    --e;
  return s.substr(b, e - b);
}

}  // namespace archrag::text
