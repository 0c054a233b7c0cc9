#include <gtest/gtest.h>

#include <sstream>

#include "glossa/hmm.hpp"
#include "glossa/random.hpp"
#include "oracles.hpp"

using namespace glossa;
using namespace oracle;

namespace {

const Tag V(AtomicTag::V), N(AtomicTag::N), D(AtomicTag::D), C(AtomicTag::C);


}  // namespace

TEST(Hmm, ForwardMatchesEnumeration) {
  Rng rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const int K = 2 + static_cast<int>(rng.below(2));
    const auto m = random_hmm(rng, K, 3);
    const auto words = random_words(rng, 4, 3);
    double total = 0;
    each_path(words.size(), K, [&](const std::vector<int>& p) { total += path_prob(m, words, p); });
    ASSERT_NEAR(hmm_log_likelihood(m, words), std::log(total), 1e-10);
  }
}

TEST(Hmm, ViterbiMatchesEnumeration) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const int K = 2 + static_cast<int>(rng.below(2));
    const auto m = random_hmm(rng, K, 3);
    const auto words = random_words(rng, 4, 3);
    std::vector<int> best;
    double best_p = -1;
    each_path(words.size(), K, [&](const std::vector<int>& p) {
      const double pr = path_prob(m, words, p);
      if (pr > best_p) {
        best_p = pr;
        best = p;
      }
    });
    ASSERT_EQ(viterbi_hmm(m, words), best);
  }
}

TEST(Hmm, PosteriorsSumToOne) {
  Rng rng(3);
  const auto m = random_hmm(rng, 3, 4);
  const auto post = hmm_posteriors(m, {"w0", "w3", "w1", "w2", "w0"});
  for (Eigen::Index t = 0; t < post.rows(); ++t) EXPECT_NEAR(post.row(t).sum(), 1.0, 1e-12);
}

TEST(Hmm, UniformModelDecodesFirstTag) {
  Rng rng(4);
  auto m = random_hmm(rng, 3, 2);
  m.trans.setConstant(0.25);
  m.trans(3, 3) = 0.0;
  m.trans.row(3) /= m.trans.row(3).sum();
  m.emit.setConstant(1.0 / 3.0);
  for (int k : viterbi_hmm(m, {"w0", "w1", "w0"})) EXPECT_EQ(k, 0);
  EXPECT_TRUE(viterbi_hmm(m, {}).empty());
}

TEST(Hmm, SupervisedModelIsNormalizedAndConstrained) {
  TagDictionary dict;
  dict.add("ce", C, Provenance::gold);
  dict.add("ulìa", N, Provenance::projected);
  Rng rng(5);
  const auto m = supervised_hmm(grammar_corpus(), dict, grammar_mono(rng, 5));
  for (Eigen::Index i = 0; i < m.trans.rows(); ++i) EXPECT_NEAR(m.trans.row(i).sum(), 1.0, 1e-9);
  for (Eigen::Index k = 0; k < m.emit.rows(); ++k) EXPECT_NEAR(m.emit.row(k).sum(), 1.0, 1e-9);
  EXPECT_EQ(m.trans(m.start(), m.stop()), 0.0);
  for (int k = 0; k < m.num_tags(); ++k)
    if (m.tagset[static_cast<std::size_t>(k)] != N) EXPECT_EQ(m.emit(k, m.word_id("ulìa")), 0.0);
  // The unknown word may only be an open-class tag here.
  EXPECT_EQ(m.emit(m.tag_index(D), 0), 0.0);
  EXPECT_GT(m.emit(m.tag_index(N), 0), 0.0);
}

TEST(Hmm, ZeroEmIterationsIsSupervisedModel) {
  TagDictionary dict = gold_dictionary(grammar_corpus());
  Rng rng(6);
  const auto mono = grammar_mono(rng, 20);
  HmmConfig cfg;
  cfg.em_iters = 0;
  const auto a = train_semisup_hmm(mono, grammar_corpus(), dict, cfg);
  const auto b = supervised_hmm(grammar_corpus(), dict, mono, cfg);
  EXPECT_TRUE((a.trans.array() == b.trans.array()).all());
  EXPECT_TRUE((a.emit.array() == b.emit.array()).all());
}

TEST(Hmm, SupervisedModelReproducesTrainingTags) {
  const auto data = grammar_corpus();
  const auto m = supervised_hmm(data, gold_dictionary(data));
  for (const auto& s : data) EXPECT_EQ(decode_hmm(m, s), *s.tags);
}

TEST(Hmm, EmLikelihoodIsMonotone) {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    TagDictionary dict;
    dict.add("o", D, Provenance::gold);
    dict.add("ce", C, Provenance::gold);
    HmmConfig cfg;
    cfg.em_iters = 25;
    HmmTrainReport rep;
    train_semisup_hmm(grammar_mono(rng, 60), grammar_corpus(), dict, cfg, &rep);
    ASSERT_EQ(rep.ll_history.size(), 26u);
    for (std::size_t i = 1; i < rep.ll_history.size(); ++i) ASSERT_GE(rep.ll_history[i], rep.ll_history[i - 1] - 1e-9);
  }
}

TEST(Hmm, EmLearnsUnseenWordsWithinDictionary) {
  Rng rng(8);
  TagDictionary dict = gold_dictionary(grammar_corpus());
  const auto m = train_semisup_hmm(grammar_mono(rng, 200), grammar_corpus(), dict);
  EXPECT_EQ(decode_hmm(m, std::vector<std::string>{"i", "ghineka", "èrkete"}), (std::vector<Tag>{D, N, V}));
}

TEST(Hmm, DecodesRespectDictionary) {
  Rng rng(9);
  TagDictionary dict;
  dict.add("o", D, Provenance::gold);
  dict.add("ce", C, Provenance::gold);
  dict.add("pai", V, Provenance::projected);
  dict.add("ene", V, Provenance::propagated);
  dict.add("ene", N, Provenance::propagated);
  const auto m = train_semisup_hmm(grammar_mono(rng, 50), grammar_corpus(), dict);
  const std::vector<std::string> vocab = {"o", "i", "ce", "pai", "ene", "ulìa", "spiti", "xyz", "ciuri"};
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> words;
    for (std::uint64_t i = 0, len = 1 + rng.below(8); i < len; ++i) words.push_back(vocab[rng.below(vocab.size())]);
    const auto tags = decode_hmm(m, words);
    for (std::size_t i = 0; i < words.size(); ++i)
      if (m.dictionary.contains(words[i])) ASSERT_TRUE(m.dictionary.allows(words[i], tags[i])) << words[i];
  }
}

TEST(Hmm, Errors) {
  EXPECT_THROW(train_semisup_hmm({{"a"}}, grammar_corpus(), TagDictionary{}), EmptyDictionary);
  TagDictionary dict;
  dict.add("a", N, Provenance::gold);
  EXPECT_THROW(train_semisup_hmm({{"a"}}, {}, dict), NoAnnotatedData);
}

TEST(Hmm, ExactRoundTrip) {
  Rng rng(10);
  const auto m = train_semisup_hmm(grammar_mono(rng, 30), grammar_corpus(), gold_dictionary(grammar_corpus()));
  std::stringstream io;
  save_hmm(io, m);
  const auto back = load_hmm(io);
  EXPECT_EQ(back.tagset, m.tagset);
  EXPECT_EQ(back.vocab, m.vocab);
  EXPECT_EQ(back.dictionary, m.dictionary);
  EXPECT_TRUE((back.trans.array() == m.trans.array()).all());
  EXPECT_TRUE((back.emit.array() == m.emit.array()).all());
}
