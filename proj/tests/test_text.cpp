#include <gtest/gtest.h>

#include "glossa/random.hpp"
#include "glossa/tag.hpp"
#include "glossa/text.hpp"

using namespace glossa;

TEST(Normalize, CircumflexBecomesAccentApostrophe) {
  EXPECT_EQ(normalize("â"), "à'");
  EXPECT_EQ(normalize("ô"), "ò'");
  EXPECT_EQ(normalize("û"), "ù'");
  EXPECT_EQ(normalize("Â"), "à'");
}

TEST(Normalize, AsciiIsFixedPoint) { EXPECT_EQ(normalize("abc"), "abc"); }

TEST(Normalize, CurlyApostropheAndCase) {
  // ’ -> ', N -> n, è kept verbatim.
  const std::string once = normalize("’Ndè");
  EXPECT_EQ(once, "'ndè");
  EXPECT_EQ(normalize(once), once);
  EXPECT_EQ(normalize("“leo” ‘ti’"), "\"leo\" 'ti'");
}

TEST(Normalize, StressMarksKeptUnlessFolded) {
  EXPECT_EQ(normalize("vàleti"), "vàleti");
  EXPECT_EQ(normalize("Vàleti", {.fold_diacritics = true}), "valeti");
  EXPECT_EQ(normalize("â", {.fold_diacritics = true}), "a'");
}

TEST(Normalize, MalformedUtf8IsReplaced) {
  const std::string bad = "a\xC3";
  EXPECT_EQ(normalize(bad), "a\xEF\xBF\xBD");
}

TEST(Normalize, IdempotentOnRandomUnicode) {
  Rng rng(7);
  // Bias towards the interesting ranges: ASCII, Latin-1, Latin Extended-A,
  // Greek, Cyrillic, general punctuation, anything else.
  const std::vector<std::pair<char32_t, char32_t>> ranges = {
      {0x20, 0x7E},     {0xA0, 0xFF},     {0x100, 0x17F}, {0x370, 0x3FF},
      {0x400, 0x45F},   {0x2010, 0x2030}, {0x1, 0xD7FF},  {0xE000, 0x10FFFF}};
  for (int trial = 0; trial < 3000; ++trial) {
    std::u32string s;
    const auto len = rng.below(12);
    for (std::uint64_t i = 0; i < len; ++i) {
      const auto& [lo, hi] = ranges[rng.below(ranges.size())];
      s.push_back(static_cast<char32_t>(lo + rng.below(hi - lo + 1)));
    }
    const std::string raw = utf8::encode(s);
    for (bool fold : {false, true}) {
      const std::string once = normalize(raw, {.fold_diacritics = fold});
      ASSERT_EQ(normalize(once, {.fold_diacritics = fold}), once) << "input: " << raw;
    }
  }
}

TEST(Tokenize, KnownElisionStaysAttached) {
  EXPECT_EQ(tokenize("c' ombra"), (std::vector<std::string>{"c'", "ombra"}));
  EXPECT_EQ(tokenize("c'ombra"), (std::vector<std::string>{"c'", "ombra"}));
}

TEST(Tokenize, OtherApostrophesAreTokens) {
  EXPECT_EQ(tokenize("l'acqua"), (std::vector<std::string>{"l", "'", "acqua"}));
  EXPECT_EQ(tokenize("à'"), (std::vector<std::string>{"à", "'"}));
  EXPECT_EQ(tokenize("'"), (std::vector<std::string>{"'"}));
}

TEST(Tokenize, EmptyLine) {
  EXPECT_TRUE(tokenize("").empty());
  EXPECT_TRUE(tokenize("   \t").empty());
}

TEST(Tokenize, PunctuationSplits) {
  EXPECT_EQ(tokenize("leo, ti!"), (std::vector<std::string>{"leo", ",", "ti", "!"}));
  EXPECT_EQ(tokenize("«ela»"), (std::vector<std::string>{"«", "ela", "»"}));
}

TEST(Tokenize, CustomWhitelist) {
  Tokenizer tok({"c'", "t'"});
  EXPECT_EQ(tok("t'ambro"), (std::vector<std::string>{"t'", "ambro"}));
}

namespace {

// Character-level reference splitter: classify each code point, then
// group runs of word characters. Written independently of Tokenizer.
std::vector<std::string> reference_split(const std::string& line) {
  std::vector<std::string> out;
  std::string word;
  const std::u32string cps = utf8::decode(line);
  for (std::size_t i = 0; i < cps.size(); ++i) {
    const char32_t c = cps[i];
    const bool sep = c == U' ' || c == U'\t';
    const bool punct = std::u32string_view(U".,;:!?«»\"()").find(c) != std::u32string_view::npos;
    if (sep || punct || c == U'\'') {
      if (c == U'\'' && word == "c") {
        out.push_back("c'");
        word.clear();
        continue;
      }
      if (!word.empty()) out.push_back(word);
      word.clear();
      if (!sep) out.push_back(utf8::encode(std::u32string(1, c)));
    } else {
      utf8::append(word, c);
    }
  }
  if (!word.empty()) out.push_back(word);
  return out;
}

}  // namespace

TEST(Tokenize, MatchesReferenceAndPreservesCharacters) {
  Rng rng(11);
  const std::vector<std::string> alphabet = {"a", "c", "o", "è", "'", " ", ",", ".", "«",
                                             "»", "!", "(", ")", "n", " ", "\"", "ù", "?"};
  for (int trial = 0; trial < 2000; ++trial) {
    std::string line;
    const auto len = rng.below(20);
    for (std::uint64_t i = 0; i < len; ++i) line += alphabet[rng.below(alphabet.size())];
    const auto tokens = tokenize(line);
    ASSERT_EQ(tokens, reference_split(line)) << "line: [" << line << "]";
    std::string joined, stripped;
    for (const auto& t : tokens) {
      ASSERT_FALSE(t.empty());
      joined += t;
    }
    for (char ch : line)
      if (ch != ' ') stripped += ch;
    ASSERT_EQ(joined, stripped);
  }
}

// ---------------------------------------------------------------------------

TEST(Tag, ParsesComposites) {
  EXPECT_EQ(parse_tag("P+D"), (Tag{AtomicTag::P, AtomicTag::D}));
  EXPECT_EQ(parse_tag("V"), Tag(AtomicTag::V));
  EXPECT_EQ(parse_tag("Adv+Adv+Prt"), (Tag{AtomicTag::Adv, AtomicTag::Adv, AtomicTag::Prt}));
  EXPECT_TRUE(parse_tag("V").is_atomic());
}

TEST(Tag, OrderMatters) { EXPECT_NE(parse_tag("P+D"), parse_tag("D+P")); }

TEST(Tag, Errors) {
  EXPECT_THROW(parse_tag(""), EmptyTag);
  EXPECT_THROW(parse_tag("Pt"), UnknownAtomicTag);
  EXPECT_THROW(parse_tag("Prt+Pt"), UnknownAtomicTag);
  EXPECT_THROW(parse_tag("P+"), UnknownAtomicTag);
  EXPECT_THROW(parse_tag("noun"), UnknownAtomicTag);
}

TEST(Tag, TwelveAtomicLabelsRoundTrip) {
  std::set<std::string> names;
  for (auto t : kAtomicTags) {
    names.insert(std::string(to_string(t)));
    EXPECT_EQ(parse_atomic_tag(to_string(t)), t);
  }
  EXPECT_EQ(names.size(), 12u);
}

TEST(Tag, RoundTripProperty) {
  Rng rng(3);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<AtomicTag> parts;
    const auto n = 1 + rng.below(4);
    for (std::uint64_t i = 0; i < n; ++i) parts.push_back(kAtomicTags[rng.below(kNumAtomicTags)]);
    const Tag t(parts);
    ASSERT_EQ(parse_tag(t.str()), t);
    ASSERT_EQ(parse_tag(t.str()).str(), t.str());
  }
}
