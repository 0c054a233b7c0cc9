#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "crf_oracle.hpp"
#include "glossa/crf.hpp"

using namespace glossa;

namespace {

bool has(const std::vector<std::string>& v, const std::string& x) {
  return std::find(v.begin(), v.end(), x) != v.end();
}

std::vector<Sentence> toy_corpus() {
  const auto V = Tag(AtomicTag::V), N = Tag(AtomicTag::N), C = Tag(AtomicTag::C),
             D = Tag(AtomicTag::D), PD = parse_tag("P+D"), PU = Tag(AtomicTag::PUNCT);
  return {
      Sentence::from_words({"leo", "ti", "vastò", "oju"}, {V, C, V, N}),
      Sentence::from_words({"o", "kunto", "ene", "."}, {D, N, V, PU}),
      Sentence::from_words({"stì", "sciòla", "pame"}, {PD, N, V}),
      Sentence::from_words({"ti", "leo", "o", "kunto"}, {C, V, D, N}),
      Sentence::from_words({"pame", "stì", "ulìa", "."}, {V, PD, N, PU}),
  };
}

}  // namespace

TEST(CrfFeatures, ExtendedSuffixes) {
  const auto f = extract_features(std::vector<std::string>{"ènna"}, 0, FeatureTemplateConfig::extended());
  for (const auto* s : {"s1=a", "s2=na", "s3=nna", "s4=ènna", "p1=è", "p4=ènna"}) EXPECT_TRUE(has(f, s)) << s;
  EXPECT_FALSE(has(f, "s5=ènna"));
}

TEST(CrfFeatures, OneTokenUsesBoundaryMarkers) {
  const auto f = extract_features(std::vector<std::string>{"leo"}, 0, FeatureTemplateConfig::extended());
  EXPECT_TRUE(has(f, "w-1=<s>"));
  EXPECT_TRUE(has(f, "w+1=</s>"));
  EXPECT_TRUE(has(f, "b-1=<s>|leo"));
  EXPECT_TRUE(has(f, "b+1=leo|</s>"));
  EXPECT_TRUE(has(f, "t=<s>|leo|</s>"));
}

TEST(CrfFeatures, BasicProfileHasNoAffixesOrNgrams) {
  const std::vector<std::string> words = {"c'", "ènna", "1900", ","};
  for (std::size_t i = 0; i < words.size(); ++i)
    for (const auto& f : extract_features(words, i, FeatureTemplateConfig::basic())) {
      EXPECT_FALSE(f[0] == 'p' && f[1] != 'u') << f;
      EXPECT_FALSE(f[0] == 's' && std::isdigit(static_cast<unsigned char>(f[1]))) << f;
      EXPECT_FALSE(f.rfind("b-1=", 0) == 0 || f.rfind("b+1=", 0) == 0 || f.rfind("t=", 0) == 0) << f;
    }
  const auto f2 = extract_features(words, 2, FeatureTemplateConfig::basic());
  EXPECT_TRUE(has(f2, "digit"));
  EXPECT_TRUE(has(extract_features(words, 0, FeatureTemplateConfig::basic()), "apos"));
  EXPECT_TRUE(has(extract_features(words, 3, FeatureTemplateConfig::basic()), "punct"));
}

TEST(CrfFeatures, OutOfRange) {
  EXPECT_THROW(extract_features(std::vector<std::string>{"a"}, 1, FeatureTemplateConfig::basic()), OutOfRange);
}

TEST(CrfInference, ZeroWeightsGiveTLogK) {
  const std::vector<Tag> tags = {Tag(AtomicTag::V), Tag(AtomicTag::N), Tag(AtomicTag::D)};
  const auto m = make_crf_model(tags, {"w=a"});
  const auto s = Sentence::from_words({"a", "b", "c", "a"});
  EXPECT_NEAR(log_partition(m, s), 4 * std::log(3.0), 1e-12);
  EXPECT_EQ(log_partition(m, Sentence{}), 0.0);
  const auto d = decode(m, s);
  for (const auto& t : d.tags) EXPECT_EQ(t, tags[0]);  // tie-break: first tag
  EXPECT_TRUE(decode(m, Sentence{}).tags.empty());
}

TEST(CrfInference, LengthOneIsUnaryLogSumExp) {
  Rng rng(5);
  auto [m, words] = oracle::random_instance(rng, 1, 4);
  const auto s = Sentence::from_words(words);
  const Eigen::MatrixXd u = m.unary(s);
  double acc = 0.0;
  for (Eigen::Index y = 0; y < u.cols(); ++y) acc += std::exp(u(0, y));
  EXPECT_NEAR(log_partition(m, s), std::log(acc), 1e-12);
}

TEST(CrfInference, MatchesBruteForceOnLengthThreeThreeTags) {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    auto [m, words] = oracle::random_instance(rng, 3, 3);
    while (words.size() < 3) words.push_back("leo");
    const auto s = Sentence::from_words(words);
    EXPECT_NEAR(log_partition(m, s), oracle::brute_log_z(m, words), 1e-8);
  }
}

TEST(CrfInference, ViterbiMatchesEnumerationAndScore) {
  Rng rng(23);
  for (int trial = 0; trial < 100; ++trial) {
    auto [m, words] = oracle::random_instance(rng, 4, 4);
    const auto s = Sentence::from_words(words);
    const auto d = decode(m, s);
    const auto [best, best_score] = oracle::brute_argmax(m, words);
    ASSERT_EQ(tag_indices(m, d.tags), best);
    EXPECT_NEAR(d.score, best_score, 1e-9);
    EXPECT_NEAR(d.score, score_sequence(m, s, d.tags), 1e-12);
  }
}

TEST(CrfInference, LogPartitionBoundsEverySequence) {
  Rng rng(29);
  for (int trial = 0; trial < 30; ++trial) {
    auto [m, words] = oracle::random_instance(rng, 4, 3);
    const auto s = Sentence::from_words(words);
    const double lz = log_partition(m, s);
    oracle::for_each_path(words.size(), m.num_tags(), [&](const std::vector<int>& p) {
      EXPECT_LT(oracle::direct_score(m, words, p), lz);
    });
  }
}

TEST(CrfInference, MarginalsSumToOne) {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    auto [m, words] = oracle::random_instance(rng, 5, 4);
    const auto mg = posterior_marginals(m, Sentence::from_words(words));
    for (Eigen::Index t = 0; t < mg.rows(); ++t) EXPECT_NEAR(mg.row(t).sum(), 1.0, 1e-10);
  }
}

TEST(CrfInference, ScaledMarginalsMatchEnumeration) {
  Rng rng(37);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index T = 1 + static_cast<Eigen::Index>(rng.below(4)), K = 3;
    Eigen::MatrixXd unary(T, K), trans(K, K);
    for (Eigen::Index i = 0; i < unary.size(); ++i) unary(i) = rng.uniform(-3, 3);
    for (Eigen::Index i = 0; i < trans.size(); ++i) trans(i) = rng.uniform(-3, 3);
    Eigen::MatrixXd node = Eigen::MatrixXd::Zero(T, K), edge = Eigen::MatrixXd::Zero(K, K);
    double z = 0;
    oracle::for_each_path(static_cast<std::size_t>(T), K, [&](const std::vector<int>& p) {
      const double w = std::exp(chain::score(unary, trans, p));
      z += w;
      for (Eigen::Index t = 0; t < T; ++t) {
        node(t, p[static_cast<std::size_t>(t)]) += w;
        if (t > 0) edge(p[static_cast<std::size_t>(t - 1)], p[static_cast<std::size_t>(t)]) += w;
      }
    });
    const auto m = chain::marginals(unary, trans);
    EXPECT_NEAR(m.log_z, std::log(z), 1e-10);
    EXPECT_LT((m.node - node / z).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((m.edge - edge / z).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(CrfInference, ScaledMarginalsSurviveExtremePotentials) {
  Eigen::MatrixXd unary(4, 3), trans(3, 3);
  unary << 900, -900, 0, 0, 1200, -5, -800, 3, 700, 1, 2, 3;
  trans << 0, -1000, 2, 800, 0, -3, -900, 5, 0;
  const auto fast = chain::marginals(unary, trans);
  const auto ref = chain::marginals_log(unary, trans);
  EXPECT_NEAR(fast.log_z, ref.log_z, 1e-9 * std::abs(ref.log_z));
  EXPECT_LT((fast.node - ref.node).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((fast.edge - ref.edge).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(CrfTraining, AnalyticGradientMatchesFiniteDifferences) {
  const auto data = toy_corpus();
  CrfTrainOptions opts;
  auto [model, objective] = detail::prepare_crf(data, nullptr, opts);
  Rng rng(41);
  Eigen::VectorXd w(static_cast<Eigen::Index>(objective.dimension()));
  for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = 0.5 * rng.normal();
  Eigen::VectorXd g, scratch;
  objective.value_and_gradient(w, g);
  const double h = 1e-5;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    Eigen::VectorXd wp = w, wm = w;
    wp(i) += h;
    wm(i) -= h;
    const double fd = (objective.value_and_gradient(wp, scratch) - objective.value_and_gradient(wm, scratch)) / (2 * h);
    const double denom = std::max({std::abs(fd), std::abs(g(i)), 1e-6});
    worst = std::max(worst, std::abs(fd - g(i)) / denom);
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(CrfTraining, ReachesStationaryPointMonotonically) {
  const auto data = toy_corpus();
  CrfTrainOptions opts;
  opts.optimizer.rel_tol = 0.0;
  opts.optimizer.grad_tol = 1e-6;
  opts.optimizer.max_iters = 2000;
  CrfTrainReport report;
  const auto m = train_crf(data, nullptr, opts, &report);
  EXPECT_TRUE(report.converged);
  for (std::size_t i = 1; i < report.nll_history.size(); ++i)
    EXPECT_LE(report.nll_history[i], report.nll_history[i - 1]);
  const auto g = crf_objective_gradient(m, data, nullptr, opts);
  EXPECT_LT(g.lpNorm<Eigen::Infinity>(), 1e-4);
  for (const auto& s : data) EXPECT_EQ(decode(m, s).tags, *s.tags);
}

TEST(CrfTraining, DeterministicWeights) {
  const auto data = toy_corpus();
  const auto a = train_crf(data, nullptr);
  const auto b = train_crf(data, nullptr);
  ASSERT_EQ(a.weights.size(), b.weights.size());
  EXPECT_TRUE((a.weights.array() == b.weights.array()).all());
}

TEST(CrfTraining, TypeSupervisionExtendsTagset) {
  TagDictionary sup;
  sup.add("èrkete", Tag(AtomicTag::Adv), Provenance::projected);
  sup.add("kalò", Tag(AtomicTag::Adj), Provenance::projected);
  const auto m = train_crf(toy_corpus(), &sup);
  EXPECT_GE(m.tag_index(Tag(AtomicTag::Adv)), 0);
  EXPECT_GE(m.tag_index(Tag(AtomicTag::Adj)), 0);
  EXPECT_EQ(decode(m, Sentence::from_words({"kalò"})).tags.front(), Tag(AtomicTag::Adj));
}

TEST(CrfTraining, Errors) {
  EXPECT_THROW(train_crf({}, nullptr), NoTrainingData);
  const std::vector<Sentence> one_tag = {Sentence::from_words({"a", "b"}, {Tag(AtomicTag::N), Tag(AtomicTag::N)})};
  EXPECT_THROW(train_crf(one_tag, nullptr), DegenerateTagset);
  const std::vector<Sentence> untagged = {Sentence::from_words({"a"})};
  EXPECT_THROW(train_crf(untagged, nullptr), NoTrainingData);
}

TEST(CrfModelIo, ExactRoundTrip) {
  const auto m = train_crf(toy_corpus(), nullptr);
  std::stringstream io;
  save_crf(io, m);
  const auto back = load_crf(io);
  EXPECT_EQ(back.tagset, m.tagset);
  EXPECT_EQ(back.features, m.features);
  EXPECT_EQ(back.templates, m.templates);
  EXPECT_EQ(back.l2, m.l2);
  EXPECT_TRUE((back.weights.array() == m.weights.array()).all());
}
