#pragma once

// Orthographic normalization and tokenization for narrative text.

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "glossa/errors.hpp"

namespace glossa {

namespace utf8 {

inline constexpr char32_t kReplacement = 0xFFFD;

/// Decodes UTF-8; malformed sequences become U+FFFD.
inline std::u32string decode(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(s[k]); };
  while (i < s.size()) {
    const unsigned char b0 = byte(i);
    int len = 0;
    char32_t cp = 0;
    if (b0 < 0x80) {
      len = 1;
      cp = b0;
    } else if ((b0 & 0xE0) == 0xC0) {
      len = 2;
      cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
      len = 3;
      cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
      len = 4;
      cp = b0 & 0x07;
    } else {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    if (i + len > s.size()) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k < len; ++k) {
      const unsigned char b = byte(i + k);
      if ((b & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (b & 0x3F);
    }
    // Reject overlong forms, surrogates and out-of-range values.
    static constexpr char32_t kMin[] = {0, 0, 0x80, 0x800, 0x10000};
    if (!ok || cp < kMin[len] || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      out.push_back(kReplacement);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += len;
  }
  return out;
}

inline void append(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

inline std::string encode(std::u32string_view cps) {
  std::string out;
  out.reserve(cps.size());
  for (char32_t cp : cps) append(out, cp);
  return out;
}

inline std::size_t length(std::string_view s) { return decode(s).size(); }

}  // namespace utf8

/// Simple case folding for Latin, Greek and Cyrillic capitals. Never maps a
/// character onto another capital, so applying it twice is a no-op.
inline char32_t to_lower(char32_t c) {
  if (c >= U'A' && c <= U'Z') return c + 32;
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;
  if ((c >= 0x100 && c <= 0x12F) || (c >= 0x132 && c <= 0x137) || (c >= 0x14A && c <= 0x177))
    return (c % 2 == 0) ? c + 1 : c;
  if ((c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E)) return (c % 2 == 1) ? c + 1 : c;
  if (c == 0x178) return 0xFF;
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 0x20;
  if (c >= 0x410 && c <= 0x42F) return c + 0x20;
  if (c >= 0x400 && c <= 0x40F) return c + 0x50;
  return c;
}

/// Strips grave/acute/circumflex/diaeresis from lowercase Latin vowels.
inline char32_t fold_diacritic(char32_t c) {
  switch (c) {
    case 0xE0: case 0xE1: case 0xE2: case 0xE4: return U'a';
    case 0xE8: case 0xE9: case 0xEA: case 0xEB: return U'e';
    case 0xEC: case 0xED: case 0xEE: case 0xEF: return U'i';
    case 0xF2: case 0xF3: case 0xF4: case 0xF6: return U'o';
    case 0xF9: case 0xFA: case 0xFB: case 0xFC: return U'u';
    default: return c;
  }
}

struct NormalizeOptions {
  /// Off by default: stress marks are kept verbatim and distinguish types.
  bool fold_diacritics = false;
};

/// Lowercases, replaces curly quotes and apostrophes with ASCII ones and
/// rewrites the circumflex contractions â ô û as à' ò' ù'. Idempotent.
inline std::string normalize(std::string_view raw, const NormalizeOptions& opts = {}) {
  std::string out;
  out.reserve(raw.size() + 4);
  for (char32_t c : utf8::decode(raw)) {
    c = to_lower(c);
    switch (c) {
      case 0x2018:
      case 0x2019:
        c = U'\'';
        break;
      case 0x201C:
      case 0x201D:
        c = U'"';
        break;
      default:
        break;
    }
    char32_t base = 0;
    if (c == 0xE2) base = 0xE0;       // â -> à'
    else if (c == 0xF4) base = 0xF2;  // ô -> ò'
    else if (c == 0xFB) base = 0xF9;  // û -> ù'
    if (base) {
      utf8::append(out, opts.fold_diacritics ? fold_diacritic(base) : base);
      out.push_back('\'');
      continue;
    }
    utf8::append(out, opts.fold_diacritics ? fold_diacritic(c) : c);
  }
  return out;
}

inline bool is_split_punctuation(char32_t c) {
  switch (c) {
    case U'.': case U',': case U';': case U':': case U'!': case U'?':
    case 0xAB: case 0xBB: case U'"': case U'(': case U')':
      return true;
    default:
      return false;
  }
}

inline bool is_space(char32_t c) {
  return c == U' ' || c == U'\t' || c == U'\n' || c == U'\r' || c == U'\v' || c == U'\f' ||
         c == 0xA0;
}

/// Whitespace tokenizer that splits off punctuation and apostrophes. An
/// apostrophe stays attached only when the text before it forms a known
/// elision (default: "c'").
class Tokenizer {
 public:
  Tokenizer() : elisions_{"c'"} {}
  explicit Tokenizer(std::set<std::string> elisions) : elisions_(std::move(elisions)) {}

  /// One elision per line; blank lines and '#' comments ignored.
  static Tokenizer from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open elision list " + path.string());
    std::set<std::string> elisions;
    std::string line;
    while (std::getline(in, line)) {
      const auto first = line.find_first_not_of(" \t\r");
      if (first == std::string::npos || line[first] == '#') continue;
      const auto last = line.find_last_not_of(" \t\r");
      elisions.insert(line.substr(first, last - first + 1));
    }
    return Tokenizer(std::move(elisions));
  }

  const std::set<std::string>& elisions() const { return elisions_; }

  std::vector<std::string> operator()(std::string_view normalized_line) const {
    std::vector<std::string> tokens;
    std::u32string current;
    const auto flush = [&] {
      if (!current.empty()) tokens.push_back(utf8::encode(current));
      current.clear();
    };
    for (char32_t c : utf8::decode(normalized_line)) {
      if (is_space(c)) {
        flush();
      } else if (is_split_punctuation(c)) {
        flush();
        tokens.push_back(utf8::encode(std::u32string(1, c)));
      } else if (c == U'\'') {
        std::string candidate = utf8::encode(current) + "'";
        if (!current.empty() && elisions_.count(candidate)) {
          tokens.push_back(std::move(candidate));
          current.clear();
        } else {
          flush();
          tokens.emplace_back("'");
        }
      } else {
        current.push_back(c);
      }
    }
    flush();
    return tokens;
  }

 private:
  std::set<std::string> elisions_;
};

inline std::vector<std::string> tokenize(std::string_view normalized_line) {
  return Tokenizer()(normalized_line);
}

inline bool is_punctuation_word(std::string_view w) {
  if (w.empty()) return false;
  for (char32_t c : utf8::decode(w)) {
    const bool punct = is_split_punctuation(c) || c == U'\'' || c == U'-' || c == U'[' ||
                       c == U']' || c == 0x2014 || c == 0x2013 || c == 0x2026;
    if (!punct) return false;
  }
  return true;
}

}  // namespace glossa
