#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "glossa/corpus.hpp"
#include "glossa/dictionary.hpp"

using namespace glossa;
namespace fs = std::filesystem;

namespace {

Narrative parse(const std::string& text, const ReadOptions& opts = {}) {
  std::istringstream in(text);
  return parse_narrative(in, "story-1", opts);
}

fs::path scratch_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("glossa_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(Narrative, ParsesMetadataTagsAndExclusion) {
  const auto n = parse(
      "#title_griko: O lìkon\n"
      "#location: Calimera\n"
      "leo_V ti_C vastò_V oju_N finu_Adj\n"
      "\n"
      "#exclude: salentino\n"
      "ulìa_N mia_Num\n"
      "stì_P+D sciòla_N\n");
  EXPECT_EQ(n.id, "story-1");
  EXPECT_EQ(n.metadata.at("location"), "Calimera");
  ASSERT_EQ(n.sentences.size(), 3u);
  EXPECT_FALSE(n.sentences[0].excluded);
  EXPECT_TRUE(n.sentences[1].excluded);
  EXPECT_FALSE(n.sentences[2].excluded);
  EXPECT_EQ((*n.sentences[2].tags)[0], (Tag{AtomicTag::P, AtomicTag::D}));
  EXPECT_EQ(n.token_length(), 7u);
}

TEST(Narrative, UntaggedLinesAndNormalization) {
  const auto n = parse("’Ndè Leo\n");
  ASSERT_EQ(n.sentences.size(), 1u);
  EXPECT_FALSE(n.sentences[0].tagged());
  EXPECT_EQ(n.sentences[0].tokens[0].surface, "’Ndè");
  EXPECT_EQ(n.sentences[0].tokens[0].norm, "'ndè");
  EXPECT_EQ(n.sentences[0].tokens[1].norm, "leo");
}

TEST(Narrative, BadTagReportsLocation) {
  try {
    parse("leo_V ti_Q\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find(":1:"), std::string::npos);
  }
}

TEST(Narrative, WriteReadRoundTrip) {
  const auto n = parse("#narrator: anonymous\nleo_V ti_C\n#exclude: salentino\noju_N finu_Adj\n");
  std::ostringstream out;
  write_narrative(out, n);
  EXPECT_EQ(parse(out.str()), n);
}

TEST(TagsetMapping, MapsAndRejectsUnmapped) {
  std::istringstream in(
      "# UoI -> universal\n"
      "VERB V\nNOUN N\nCONJ+PRON C+Pr\nPREP+ART P+D\n");
  const auto m = TagsetMapping::parse(in);
  EXPECT_EQ(map_tagset("CONJ+PRON", m), (Tag{AtomicTag::C, AtomicTag::Pr}));
  EXPECT_THROW(map_tagset("ADJ", m), UnmappedTag);
  EXPECT_THROW(map_tagset("V", m), UnmappedTag);  // never an implicit identity
}

TEST(TagsetMapping, FourteenTagSourceCorpusFullyCovered) {
  // Twelve universal tags plus the two composites present in the source.
  std::string text;
  for (auto t : kAtomicTags) text += "src" + std::string(to_string(t)) + " " + std::string(to_string(t)) + "\n";
  text += "srcP+D P+D\nsrcC+Pr C+Pr\n";
  std::istringstream in(text);
  const auto m = TagsetMapping::parse(in);
  ASSERT_EQ(m.size(), 14u);
  std::string line;
  for (const auto& [src, _] : m.entries()) line += "w_" + src + " ";
  ReadOptions opts;
  opts.mapping = &m;
  const auto n = parse(line + "\n", opts);
  ASSERT_EQ(n.sentences.size(), 1u);
  EXPECT_EQ(n.sentences[0].tags->size(), 14u);
}

TEST(TagsetMapping, MalformedLine) {
  std::istringstream in("VERB\n");
  EXPECT_THROW(TagsetMapping::parse(in), ParseError);
}

TEST(CorpusStats, EmptyCorpusIsAllZero) {
  EXPECT_EQ(corpus_stats(Corpus{}), StatsReport{});
}

TEST(CorpusStats, CountsTypesAndTokens) {
  Corpus c;
  c.narratives.push_back(parse("o kunto ene\nene mia ulìa\n"));
  const auto st = corpus_stats(c);
  EXPECT_EQ(st.stories, 1u);
  EXPECT_EQ(st.sentences, 2u);
  EXPECT_EQ(st.griko.tokens, 6u);
  EXPECT_EQ(st.griko.types, 5u);
}

TEST(CorpusStats, ExcludedSentencesContributeNothing) {
  Corpus c;
  c.narratives.push_back(parse("o kunto\n#exclude: salentino\noju finu bonu\n"));
  const auto st = corpus_stats(c);
  EXPECT_EQ(st.sentences, 1u);
  EXPECT_EQ(st.excluded_sentences, 1u);
  EXPECT_EQ(st.griko.tokens, 2u);
  EXPECT_EQ(usable_sentences(c.narratives).size(), 1u);
}

TEST(CorpusDir, ParallelReadWriteAndValidate) {
  const auto dir = scratch_dir("corpus_dir");
  Corpus c;
  c.narratives.push_back(parse("leo_V ti_C\n#exclude: salentino\noju_N finu_Adj\n"));
  c.narratives.back().id = "story-2";
  c.translations.push_back(parse("dico_V che_C\nolio_N fino_Adj\n"));
  c.translations.back().id = "story-2";
  write_corpus(dir, c);

  const auto back = read_corpus(dir);
  ASSERT_TRUE(back.parallel());
  EXPECT_EQ(back.narratives[0], c.narratives[0]);
  EXPECT_TRUE(back.translations[0].sentences[1].excluded);  // follows the Griko flag
  EXPECT_TRUE(validate_corpus(back).empty());
  const auto st = corpus_stats(back);
  EXPECT_EQ(st.italian.tokens, 2u);
}

TEST(CorpusDir, ValidateFindsSentenceCountMismatch) {
  Corpus c;
  c.narratives.push_back(parse("a b\nc d\n"));
  c.translations.push_back(parse("x y\n"));
  const auto problems = validate_corpus(c);
  ASSERT_EQ(problems.size(), 1u);
  EXPECT_NE(problems[0].find("Italian sentences"), std::string::npos);
}

TEST(CorpusDir, ValidateFindsDuplicateIds) {
  Corpus c;
  c.narratives.push_back(parse("a\n"));
  c.narratives.push_back(parse("b\n"));
  EXPECT_FALSE(validate_corpus(c).empty());
}

TEST(TagDictionary, TsvRoundTripAndProvenance) {
  TagDictionary d;
  d.add("ènna", parse_tag("V+C"), Provenance::gold, 3);
  d.add("ènna", parse_tag("V"), Provenance::projected, 1);
  d.add("stì", parse_tag("P+D"), Provenance::propagated);
  std::stringstream io;
  d.write_tsv(io);
  EXPECT_EQ(TagDictionary::read_tsv(io), d);
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(d.pair_count(), 3u);
  EXPECT_TRUE(d.allows("ènna", parse_tag("V")));
  EXPECT_FALSE(d.allows("ènna", parse_tag("N")));
}

TEST(TagDictionary, DictionarySentencesAreSingleTokens) {
  TagDictionary d;
  d.add("a", parse_tag("N"), Provenance::projected);
  d.add("a", parse_tag("V"), Provenance::projected);
  const auto sents = dictionary_sentences(d);
  ASSERT_EQ(sents.size(), 2u);
  for (const auto& s : sents) EXPECT_EQ(s.size(), 1u);
}
