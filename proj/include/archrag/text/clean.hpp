#pragma once

#include <array>
#include <string>
#include <string_view>

#include "archrag/text/unicode.hpp"

namespace archrag::text {

namespace detail {

struct NamedEntity {
  std::string_view name;
  char32_t cp;
};

inline constexpr std::array<NamedEntity, 30> kNamedEntities{{
    {"nbsp", 0x00A0},  {"amp", '&'},       {"lt", '<'},       {"gt", '>'},
    {"quot", '"'},     {"apos", '\''},     {"laquo", 0x00AB}, {"raquo", 0x00BB},
    {"lsquo", 0x2018}, {"rsquo", 0x2019},  {"ldquo", 0x201C}, {"rdquo", 0x201D},
    {"ndash", 0x2013}, {"mdash", 0x2014},  {"hellip", 0x2026}, {"eacute", 0x00E9},
    {"egrave", 0x00E8}, {"ecirc", 0x00EA}, {"euml", 0x00EB},  {"agrave", 0x00E0},
    {"acirc", 0x00E2}, {"ccedil", 0x00E7}, {"icirc", 0x00EE}, {"iuml", 0x00EF},
    {"ocirc", 0x00F4}, {"ugrave", 0x00F9}, {"ucirc", 0x00FB}, {"Eacute", 0x00C9},
    {"copy", 0x00A9},  {"deg", 0x00B0},
}};

// Decodes &name; &#NNN; &#xHH; for the common named set. Unknown entities
// are left verbatim.
inline std::string decode_entities(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] != '&') {
      out.push_back(s[i++]);
      continue;
    }
    const auto semi = s.find(';', i + 1);
    if (semi == std::string_view::npos || semi - i > 10) {
      out.push_back(s[i++]);
      continue;
    }
    const std::string_view body = s.substr(i + 1, semi - i - 1);
    char32_t cp = 0;
    if (body.size() >= 2 && body[0] == '#') {
      const bool hex = body[1] == 'x' || body[1] == 'X';
      const auto digits = body.substr(hex ? 2 : 1);
      bool ok = !digits.empty();
      for (char c : digits) {
        const bool is_digit = c >= '0' && c <= '9';
        const bool is_hex = is_digit || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
        if (!(hex ? is_hex : is_digit)) ok = false;
      }
      if (ok) {
        unsigned long v = std::stoul(std::string(digits), nullptr, hex ? 16 : 10);
        if (v > 0 && v <= 0x10FFFF && !(v >= 0xD800 && v <= 0xDFFF)) cp = static_cast<char32_t>(v);
      }
    } else {
      for (const auto& e : kNamedEntities)
        if (e.name == body) cp = e.cp;
    }
    if (cp == 0) {
      out.push_back(s[i++]);
      continue;
    }
    append_utf8(out, cp);
    i = semi + 1;
  }
  return out;
}

inline bool is_tag_start(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '/' || c == '!' ||
         c == '?';
}

// Replaces each <tag ...> with a space. Text between tags is kept.
inline std::string strip_tags(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    if (s[i] == '<' && i + 1 < s.size() && is_tag_start(s[i + 1])) {
      const auto close = s.find('>', i + 1);
      const auto next_open = s.find('<', i + 1);
      if (close != std::string_view::npos && close < next_open) {
        out.push_back(' ');
        i = close + 1;
        continue;
      }
    }
    out.push_back(s[i++]);
  }
  return out;
}

inline bool is_spacing_punct(char32_t c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?';
}

// Collapses whitespace runs, drops spaces before .,;:!? and inserts one after
// them when a letter follows directly. Trims both ends.
inline std::string fix_spacing(std::string_view s) {
  std::u32string cps;
  for_each_code_point(s, [&](char32_t c, std::size_t, std::size_t) {
    cps.push_back(is_space(c) ? U' ' : c);
  });
  std::u32string out;
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t c = cps[i];
    if (c == U' ') {
      if (out.empty() || out.back() == U' ') continue;
      std::size_t j = i;
      while (j < cps.size() && cps[j] == U' ') ++j;
      if (j == cps.size() || is_spacing_punct(cps[j])) continue;
      out.push_back(U' ');
      continue;
    }
    out.push_back(c);
    if (is_spacing_punct(c) && i + 1 < cps.size() && is_letter(cps[i + 1]))
      out.push_back(U' ');
  }
  while (!out.empty() && out.back() == U' ') out.pop_back();
  std::string utf8;
  utf8.reserve(s.size());
  for (char32_t c : out) append_utf8(utf8, c);
  return utf8;
}

inline std::string clean_once(std::string_view raw) {
  std::string s = nfc(raw);
  // Decoding can expose new tags or entities ("&amp;lt;"); every change
  // shortens the string, so this terminates.
  for (;;) {
    std::string next = strip_tags(decode_entities(s));
    if (next == s) break;
    s = std::move(next);
  }
  return nfc(fix_spacing(s));
}

}  // namespace detail

/// Minimal cleaning for noisy archive text: NFC, tag removal, entity
/// decoding, whitespace and punctuation spacing. OCR noise is left alone.
/// Idempotent.
inline std::string preprocess_text(std::string_view raw) {
  std::string s = detail::clean_once(raw);
  // A spacing fix can complete an entity ("&amp ;" -> "&amp;"); iterate to a
  // fixed point so the function is idempotent.
  for (int i = 0; i < 16; ++i) {
    std::string next = detail::clean_once(s);
    if (next == s) break;
    s = std::move(next);
  }
  return s;
}

}  // namespace archrag::text
