#include <gtest/gtest.h>

#include <algorithm>

#include "glossa/projection.hpp"
#include "glossa/random.hpp"
#include "oracles.hpp"

using namespace glossa;
using namespace oracle;

namespace {

const Tag V(AtomicTag::V), N(AtomicTag::N), D(AtomicTag::D), Adj(AtomicTag::Adj);

/// `n` copies of a one-link pair g -> i with probability p, Italian tag t.
std::vector<ProjectionPair> repeated(const std::string& g, const std::string& i, const Tag& t, double p, int n) {
  return std::vector<ProjectionPair>(static_cast<std::size_t>(n), ProjectionPair{{g}, {i}, {t}, {{0, 0, p}}});
}

std::vector<ProjectionPair> concat(std::initializer_list<std::vector<ProjectionPair>> parts) {
  std::vector<ProjectionPair> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}


}  // namespace

TEST(ProjectionFilter, FootnoteRuleWithBoundaries) {
  const ProjectionFilter f;
  EXPECT_TRUE(f.keep(1.0, 1, 1));    // certain links need no frequency
  EXPECT_TRUE(f.keep(0.95, 6, 6));
  EXPECT_FALSE(f.keep(0.95, 6, 3));  // Italian too rare
  EXPECT_FALSE(f.keep(0.9, 6, 6));   // strictly above 0.9
  EXPECT_FALSE(f.keep(0.95, 5, 6));  // strictly above 5
  EXPECT_FALSE(f.keep(0.95, 6, 5));
  EXPECT_FALSE(f.keep(0.5, 100, 100));
}

TEST(ProjectionFilter, CorpusFixture) {
  const auto pairs = concat({
      repeated("leo", "dico", V, 0.95, 6),   // kept: freq 6
      repeated("oju", "olio", N, 0.95, 5),   // dropped: freq 5
      repeated("ti", "che", D, 0.9, 6),      // dropped: p = 0.9
      repeated("kalò", "buono", Adj, 1.0, 1) // kept: p = 1
  });
  const auto d = project_type_dictionary(pairs, {});
  EXPECT_EQ(d.size(), 2u);
  EXPECT_EQ(d.tags("leo"), std::vector<Tag>{V});
  EXPECT_EQ(d.entries("leo")[0].votes, 6);
  EXPECT_EQ(d.entries("leo")[0].provenance, Provenance::projected);
  EXPECT_TRUE(d.allows("kalò", Adj));
  EXPECT_FALSE(d.contains("oju"));
  EXPECT_FALSE(d.contains("ti"));
}

TEST(ProjectionFilter, MajorityAndTies) {
  auto pairs = concat({repeated("pame", "andiamo", V, 1.0, 3), repeated("pame", "andata", N, 1.0, 1),
                       repeated("èrkete", "viene", V, 1.0, 2), repeated("èrkete", "venuta", N, 1.0, 2)});
  const auto d = project_type_dictionary(pairs, {});
  EXPECT_EQ(d.tags("pame"), std::vector<Tag>{V});
  EXPECT_FALSE(d.contains("èrkete"));
}

TEST(ProjectionFilter, TighteningKeepsSubsetOfLinks) {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const auto pairs = random_link_set(rng);
    ProjectionFilter loose;
    loose.p_high = 0.5 + 0.45 * rng.uniform();
    loose.min_freq = static_cast<long>(rng.below(6));
    ProjectionFilter tight = loose;
    tight.p_high = loose.p_high + (0.99 - loose.p_high) * rng.uniform();
    tight.min_freq = loose.min_freq + static_cast<long>(rng.below(4));
    const auto kl = filter_links(pairs, loose), kt = filter_links(pairs, tight);
    ASSERT_LE(kt.size(), kl.size());
    for (const auto& k : kt) ASSERT_NE(std::find(kl.begin(), kl.end(), k), kl.end());
  }
}

TEST(ProjectionFilter, MorePairsNeverLoseKeptLinks) {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    const auto train = random_link_set(rng);
    auto all = train;
    for (auto& p : random_link_set(rng)) all.push_back(p);
    const auto kt = filter_links(train, {}), ka = filter_links(all, {});
    for (const auto& k : kt) ASSERT_NE(std::find(ka.begin(), ka.end(), k), ka.end());
  }
}

TEST(ProjectionFilter, BadConfigAndMissingTags) {
  ProjectionFilter f;
  f.p_high = 1.0;
  EXPECT_THROW(f.validate(), InvalidConfig);
  auto pairs = repeated("a", "b", V, 1.0, 1);
  pairs[0].italian_tags.clear();
  EXPECT_THROW(project_type_dictionary(pairs, {}), MissingItalianTags);
  pairs = repeated("a", "b", V, 1.0, 1);
  pairs[0].links[0].italian_pos = 3;
  EXPECT_THROW(project_type_dictionary(pairs, {}), OutOfRange);
}

TEST(ProjectionPipeline, TrainOnlyAndTransductive) {
  auto make = [](const std::string& id, std::vector<std::pair<std::string, std::string>> lines) {
    ParallelNarrative pn;
    pn.griko.id = pn.italian.id = id;
    for (const auto& [g, it] : lines) {
      pn.griko.sentences.push_back(parse_sentence_line(g));
      pn.italian.sentences.push_back(parse_sentence_line(it));
    }
    return pn;
  };
  const std::vector<ParallelNarrative> train = {make("s1", {{"leo", "dico_V"}, {"leo oju", "dico_V olio_N"}})};
  const std::vector<ParallelNarrative> test = {make("s2", {{"kalò", "buono_Adj"}})};
  ProjectionOptions opts;
  ProjectionReport rep;
  const auto d1 = build_projected_dictionary(train, test, opts, &rep);
  EXPECT_TRUE(d1.allows("leo", V));
  EXPECT_FALSE(d1.contains("kalò"));
  EXPECT_EQ(rep.pairs, 2u);
  opts.mode = ProjectionMode::transductive;
  const auto d2 = build_projected_dictionary(train, test, opts);
  EXPECT_TRUE(d2.allows("kalò", Adj));
  for (const auto& [type, entries] : d1.all()) EXPECT_EQ(d2.entries(type), entries);

  auto untagged = train;
  untagged[0].italian.sentences[0].tags.reset();
  EXPECT_THROW(build_projected_dictionary(untagged, {}, {}), MissingItalianTags);
}
