#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "glossa/errors.hpp"

namespace glossa {

/// The twelve universal-style part-of-speech labels. Enumerator order is the
/// canonical tag order used for tagsets and tie-breaking.
enum class AtomicTag : std::uint8_t { V, N, Adj, Adv, Pr, D, P, C, Prt, Num, PUNCT, X };

inline constexpr std::size_t kNumAtomicTags = 12;

inline constexpr std::array<AtomicTag, kNumAtomicTags> kAtomicTags = {
    AtomicTag::V,  AtomicTag::N, AtomicTag::Adj, AtomicTag::Adv,
    AtomicTag::Pr, AtomicTag::D, AtomicTag::P,   AtomicTag::C,
    AtomicTag::Prt, AtomicTag::Num, AtomicTag::PUNCT, AtomicTag::X};

inline constexpr std::array<std::string_view, kNumAtomicTags> kAtomicTagNames = {
    "V", "N", "Adj", "Adv", "Pr", "D", "P", "C", "Prt", "Num", "PUNCT", "X"};

inline std::string_view to_string(AtomicTag t) {
  return kAtomicTagNames[static_cast<std::size_t>(t)];
}

inline std::optional<AtomicTag> parse_atomic_tag(std::string_view s) {
  for (std::size_t i = 0; i < kNumAtomicTags; ++i)
    if (kAtomicTagNames[i] == s) return kAtomicTags[i];
  return std::nullopt;
}

/// A part-of-speech label: one atomic tag, or an ordered composite such as
/// P+D for fused words. Part order is significant.
class Tag {
 public:
  Tag() = default;
  Tag(AtomicTag t) : parts_{t} {}  // NOLINT(google-explicit-constructor)
  explicit Tag(std::vector<AtomicTag> parts) : parts_(std::move(parts)) {
    if (parts_.empty()) throw EmptyTag("a tag needs at least one part");
  }
  Tag(std::initializer_list<AtomicTag> parts) : Tag(std::vector<AtomicTag>(parts)) {}

  const std::vector<AtomicTag>& parts() const { return parts_; }
  bool is_atomic() const { return parts_.size() == 1; }
  bool is_composite() const { return parts_.size() > 1; }

  std::string str() const {
    std::string out;
    for (std::size_t i = 0; i < parts_.size(); ++i) {
      if (i) out += '+';
      out += to_string(parts_[i]);
    }
    return out;
  }

  friend bool operator==(const Tag&, const Tag&) = default;
  friend std::strong_ordering operator<=>(const Tag& a, const Tag& b) {
    return a.parts_ <=> b.parts_;
  }

 private:
  std::vector<AtomicTag> parts_;
};

inline std::string to_string(const Tag& t) { return t.str(); }

/// Parses the canonical '+'-joined form ("P+D", "Adv+Adv+Prt").
inline Tag parse_tag(std::string_view s) {
  if (s.empty()) throw EmptyTag("empty tag string");
  std::vector<AtomicTag> parts;
  std::size_t start = 0;
  while (true) {
    const auto end = s.find('+', start);
    const auto piece = s.substr(start, end == std::string_view::npos ? end : end - start);
    auto atomic = parse_atomic_tag(piece);
    if (!atomic)
      throw UnknownAtomicTag("unknown atomic tag '" + std::string(piece) + "' in '" +
                             std::string(s) + "'");
    parts.push_back(*atomic);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return Tag(std::move(parts));
}

/// Non-throwing variant for validation paths.
inline std::optional<Tag> try_parse_tag(std::string_view s) {
  try {
    return parse_tag(s);
  } catch (const Error&) {
    return std::nullopt;
  }
}

/// The open-class tags permitted for out-of-vocabulary words.
inline bool is_open_class(const Tag& t) {
  if (!t.is_atomic()) return false;
  switch (t.parts().front()) {
    case AtomicTag::V:
    case AtomicTag::N:
    case AtomicTag::Adj:
    case AtomicTag::Adv:
    case AtomicTag::X:
      return true;
    default:
      return false;
  }
}

}  // namespace glossa

template <>
struct std::hash<glossa::Tag> {
  std::size_t operator()(const glossa::Tag& t) const noexcept {
    std::size_t h = 0xcbf29ce484222325ULL;
    for (auto p : t.parts()) {
      h ^= static_cast<std::size_t>(p) + 1;
      h *= 0x100000001b3ULL;
    }
    return h;
  }
};
