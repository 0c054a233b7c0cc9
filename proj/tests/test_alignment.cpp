#include <gtest/gtest.h>

#include <map>
#include <sstream>

#include "glossa/alignment.hpp"
#include "glossa/random.hpp"
#include "oracles.hpp"

using namespace glossa;
using namespace oracle;

namespace {

// Dense IBM1 over string keys, written without the trainer's index tables.
std::map<std::pair<std::string, std::string>, double> reference_em(const std::vector<SentencePair>& pairs,
                                                                   int iters) {
  std::set<std::string> fv;
  for (const auto& p : pairs) fv.insert(p.griko.begin(), p.griko.end());
  std::map<std::pair<std::string, std::string>, double> t;  // (f, e)
  for (const auto& p : pairs)
    for (const auto& f : p.griko) {
      t[{f, "<null>"}] = 1.0 / static_cast<double>(fv.size());
      for (const auto& e : p.italian) t[{f, e}] = 1.0 / static_cast<double>(fv.size());
    }
  for (int it = 0; it < iters; ++it) {
    std::map<std::pair<std::string, std::string>, double> c;
    std::map<std::string, double> tot;
    for (const auto& p : pairs) {
      std::vector<std::string> es = {"<null>"};
      es.insert(es.end(), p.italian.begin(), p.italian.end());
      for (const auto& f : p.griko) {
        double z = 0;
        for (const auto& e : es) z += t[{f, e}];
        for (const auto& e : es) {
          c[{f, e}] += t[{f, e}] / z;
          tot[e] += t[{f, e}] / z;
        }
      }
    }
    for (auto& [k, v] : t) v = c[k] / tot[k.second];
  }
  return t;
}


}  // namespace

TEST(Ibm1, SinglePairIsCertainAfterOneIteration) {
  const auto m = train_ibm1({{{"leo"}, {"dico"}}}, 1);
  EXPECT_EQ(m.prob("leo", "dico"), 1.0);
  const auto links = extract_links(m, {{"leo"}, {"dico"}});
  ASSERT_EQ(links.size(), 1u);
  EXPECT_EQ(links[0], (Link{0, 0, 1.0}));
}

TEST(Ibm1, ThreePairCorpusConverges) {
  std::vector<double> ll;
  const auto m = train_ibm1(kThreePairs, 20, &ll);
  EXPECT_GT(m.prob("a", "x"), 0.95);
  EXPECT_GT(m.prob("b", "y"), 0.95);
  EXPECT_EQ(ll.size(), 21u);
}

TEST(Ibm1, MatchesReferenceEm) {
  for (int iters : {1, 2, 5, 20}) {
    const auto m = train_ibm1(kThreePairs, iters);
    for (const auto& [k, v] : reference_em(kThreePairs, iters)) EXPECT_NEAR(m.prob(k.first, k.second), v, 1e-12);
  }
  Rng rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const auto c = random_parallel(rng);
    const auto m = train_ibm1(c, 4);
    for (const auto& [k, v] : reference_em(c, 4)) ASSERT_NEAR(m.prob(k.first, k.second), v, 1e-12);
  }
}

TEST(Ibm1, ThreePairLinksMatchHandComputation) {
  const auto m = train_ibm1(kThreePairs, 20);
  const auto links = extract_links(m, kThreePairs[1]);
  ASSERT_EQ(links.size(), 2u);
  EXPECT_EQ(links[0].italian_pos, 0u);
  EXPECT_EQ(links[1].italian_pos, 1u);
  // Posterior of a->x: t(a|x) / (t(a|x) + t(a|y)).
  const double expect = m.prob("a", "x") / (m.prob("a", "x") + m.prob("a", "y"));
  EXPECT_DOUBLE_EQ(links[0].prob, expect);
  EXPECT_EQ(extract_links(m, kThreePairs[1], ProbSource::lexical)[0].prob, m.prob("a", "x"));
}

TEST(Ibm1, RowsSumToOneAndLikelihoodIsMonotone) {
  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const auto c = random_parallel(rng);
    std::vector<double> ll;
    const auto m = train_ibm1(c, 15, &ll);
    for (std::size_t i = 1; i < ll.size(); ++i) ASSERT_GE(ll[i], ll[i - 1] - 1e-12);
    for (const auto& e : m.italian_vocab()) ASSERT_NEAR(m.row_sum(e), 1.0, 1e-9) << e;
  }
}

TEST(Ibm1, PosteriorsAreNormalized) {
  Rng rng(4);
  const auto c = random_parallel(rng);
  const auto m = train_ibm1(c, 5);
  for (const auto& p : c)
    for (std::size_t j = 0; j < p.griko.size(); ++j) {
      double s = 0;
      for (double v : link_posteriors(m, p, j)) s += v;
      EXPECT_NEAR(s, 1.0, 1e-12);
    }
}

TEST(Ibm1, Errors) {
  EXPECT_THROW(train_ibm1({}, 5), EmptyCorpus);
  EXPECT_THROW(train_ibm1(kThreePairs, 0), InvalidConfig);
}

TEST(Ibm1, FrequenciesExcludeNull) {
  const auto m = train_ibm1(kThreePairs, 1);
  EXPECT_EQ(m.griko_frequency("a"), 2);
  EXPECT_EQ(m.italian_frequency("y"), 2);
  EXPECT_EQ(m.italian_frequency("<null>"), 0);
}

TEST(AlignmentFile, RoundTripWithEmptyBlock) {
  const std::vector<std::vector<Link>> blocks = {{{0, 1, 0.95}, {1, 0, 1.0}}, {}, {{2, 2, 0.125}}};
  std::stringstream io;
  write_alignments(io, blocks);
  EXPECT_EQ(read_alignments(io), blocks);
}

TEST(AlignmentFile, MalformedLine) {
  std::istringstream in("0:1 0.5\n");
  EXPECT_THROW(read_alignments(in), ParseError);
}
