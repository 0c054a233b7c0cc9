// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// fails. Tolerances are fixed here and nowhere else.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>

#include "crf_oracle.hpp"
#include "glossa/glossa.hpp"
#include "glossa/http.hpp"
#include "oracles.hpp"
#include "small_world.hpp"

using namespace glossa;
namespace fs = std::filesystem;
using clock_type = std::chrono::steady_clock;

namespace {

constexpr double kCrfLogZTol = 1e-8;
constexpr double kCrfTimeLimitS = 10.0;
constexpr double kCrfGradTol = 1e-4;
constexpr double kNeuralGradTol = 1e-3;
constexpr double kOverfitLoss = 0.01;
constexpr int kOverfitEpochs = 50;
constexpr double kIbm1Slack = 1e-12;  // floating-point noise on a non-decreasing sequence
constexpr double kIbm1Target = 0.95;
constexpr int kIbm1MaxIters = 20;
constexpr double kMadResidual = 1e-6;
constexpr double kMadOracleTol = 1e-6;
constexpr double kHmmEmTol = 1e-9;
constexpr double kHmmForwardTol = 1e-10;
constexpr double kAlGainPoints = 5.0;
constexpr double kE2eTimeLimitS = 300.0;
constexpr double kCvTol = 1e-12;

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

Outcome crf_oracle() {
  const auto t0 = clock_type::now();
  Rng rng(101);
  double worst = 0;
  int viterbi_wrong = 0;
  for (int i = 0; i < 200; ++i) {
    auto [m, words] = oracle::random_instance(rng, 5, 4);
    const auto s = Sentence::from_words(words);
    worst = std::max(worst, std::abs(log_partition(m, s) - oracle::brute_log_z(m, words)));
    viterbi_wrong += tag_indices(m, decode(m, s).tags) != oracle::brute_argmax(m, words).first;
  }
  const double secs = seconds_since(t0);
  return {worst < kCrfLogZTol && viterbi_wrong == 0 && secs < kCrfTimeLimitS,
          "max |logZ - brute| " + fmt("%.2e", worst) + ", viterbi mismatches " + std::to_string(viterbi_wrong) +
              ", " + fmt("%.2f", secs) + " s"};
}

Outcome crf_gradient() {
  Rng rng(202);
  const std::vector<std::string> vocab = {"leo", "ti", "ènna", "stì", ",", "mànassu", "o", "cikau", "pame", "ulìa"};
  double worst = 0;
  for (int model = 0; model < 20; ++model) {
    std::vector<Sentence> data;
    for (std::uint64_t s = 0, n = 2 + rng.below(4); s < n; ++s) {
      std::vector<std::string> words;
      std::vector<Tag> tags;
      for (std::uint64_t i = 0, len = 1 + rng.below(5); i < len; ++i) {
        words.push_back(vocab[rng.below(vocab.size())]);
        tags.push_back(kAtomicTags[rng.below(4)]);
      }
      data.push_back(Sentence::from_words(words, tags));
    }
    CrfTrainOptions opts;
    opts.templates = rng.bernoulli(0.5) ? FeatureTemplateConfig::extended() : FeatureTemplateConfig::basic();
    auto [m, objective] = detail::prepare_crf(data, nullptr, opts);
    Eigen::VectorXd w(static_cast<Eigen::Index>(objective.dimension())), g, scratch;
    for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = 0.5 * rng.normal();
    objective.value_and_gradient(w, g);
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      Eigen::VectorXd wp = w, wm = w;
      wp(i) += h;
      wm(i) -= h;
      const double fd =
          (objective.value_and_gradient(wp, scratch) - objective.value_and_gradient(wm, scratch)) / (2 * h);
      worst = std::max(worst, std::abs(fd - g(i)) / std::max({std::abs(fd), std::abs(g(i)), 1e-6}));
    }
  }
  return {worst < kCrfGradTol, "max relative error " + fmt("%.2e", worst) + " over 20 models"};
}

Outcome neural() {
  const auto data = oracle::five_sentences();
  std::vector<std::string> vocab;
  for (const auto& s : data)
    for (const auto& w : s.norms()) vocab.push_back(w);
  std::sort(vocab.begin(), vocab.end());
  vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
  NeuralConfig full;
  auto m = init_neural(vocab, collect_tagset(data), full);
  Rng rng(303);
  const double grad_err = gradient_check(m, data, rng);

  NeuralConfig cfg;
  cfg.dev_size = 0;
  cfg.lr = 0.001;
  cfg.max_epochs = kOverfitEpochs;
  NeuralTrainReport rep;
  train_neural(data, cfg, &rep);
  const double loss = rep.train_loss.back();
  return {grad_err < kNeuralGradTol && loss < kOverfitLoss && static_cast<int>(rep.train_loss.size()) <= kOverfitEpochs,
          "gradient max relative error " + fmt("%.2e", grad_err) + ", loss after " +
              std::to_string(rep.train_loss.size()) + " epochs " + fmt("%.4f", loss)};
}

Outcome ibm1() {
  Rng rng(404);
  double worst_drop = 0;
  for (int c = 0; c < 50; ++c) {
    std::vector<double> ll;
    train_ibm1(oracle::random_parallel(rng), 15, &ll);
    for (std::size_t i = 1; i < ll.size(); ++i) worst_drop = std::max(worst_drop, ll[i - 1] - ll[i]);
  }
  int reached = -1;
  for (int it = 1; it <= kIbm1MaxIters && reached < 0; ++it) {
    const auto m = train_ibm1(oracle::kThreePairs, it);
    if (m.prob("a", "x") > kIbm1Target && m.prob("b", "y") > kIbm1Target) reached = it;
  }
  return {worst_drop <= kIbm1Slack && reached > 0,
          "largest likelihood drop " + fmt("%.2e", worst_drop) + ", t(a|x), t(b|y) > 0.95 after " +
              (reached > 0 ? std::to_string(reached) : std::string("more than 20")) + " iterations"};
}

Outcome projection_filter() {
  Rng rng(505);
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto pairs = oracle::random_link_set(rng);
    ProjectionFilter loose;
    loose.p_high = 0.5 + 0.45 * rng.uniform();
    loose.min_freq = static_cast<long>(rng.below(6));
    ProjectionFilter tight = loose;
    tight.p_high = loose.p_high + (0.99 - loose.p_high) * rng.uniform();
    tight.min_freq = loose.min_freq + static_cast<long>(rng.below(4));
    const auto kl = filter_links(pairs, loose), kt = filter_links(pairs, tight);
    for (const auto& k : kt) violations += std::find(kl.begin(), kl.end(), k) == kl.end();
  }

  const Tag V(AtomicTag::V), N(AtomicTag::N), D(AtomicTag::D), Adj(AtomicTag::Adj);
  auto repeated = [](const std::string& g, const std::string& i, const Tag& t, double p, int n) {
    return std::vector<ProjectionPair>(static_cast<std::size_t>(n), ProjectionPair{{g}, {i}, {t}, {{0, 0, p}}});
  };
  std::vector<ProjectionPair> fixture;
  for (const auto& part : {repeated("leo", "dico", V, 0.95, 6), repeated("oju", "olio", N, 0.95, 5),
                           repeated("ti", "che", D, 0.9, 6), repeated("kalò", "buono", Adj, 1.0, 1)})
    fixture.insert(fixture.end(), part.begin(), part.end());
  const auto d = project_type_dictionary(fixture, {});
  const ProjectionFilter f;
  const bool rule = f.keep(1.0, 1, 1) && f.keep(0.95, 6, 6) && !f.keep(0.9, 6, 6) && !f.keep(0.95, 5, 6) &&
                    !f.keep(0.95, 6, 5) && !f.keep(0.5, 100, 100);
  const bool fixture_ok = d.size() == 2 && d.tags("leo") == std::vector<Tag>{V} && d.tags("kalò") == std::vector<Tag>{Adj} &&
                          !d.contains("oju") && !d.contains("ti");
  return {violations == 0 && rule && fixture_ok,
          std::to_string(violations) + " monotonicity violations in 100 link sets, boundary rule " +
              (rule ? "exact" : "WRONG") + ", fixture " + (fixture_ok ? "exact" : "WRONG")};
}

Outcome mad() {
  // Residual at termination on a corpus graph.
  Rng rng(606);
  const std::vector<std::string> vocab = {"o", "leo", "vastò", "kalà", "ti", "ene", "mia", "ulìa", "spiti", "pai"};
  std::vector<std::vector<std::string>> mono;
  for (int s = 0; s < 200; ++s) {
    std::vector<std::string> sent;
    for (std::uint64_t i = 0, len = 2 + rng.below(6); i < len; ++i) sent.push_back(vocab[rng.below(vocab.size())]);
    mono.push_back(sent);
  }
  TagDictionary seeds;
  seeds.add("leo", Tag(AtomicTag::V), Provenance::gold);
  seeds.add("o", Tag(AtomicTag::D), Provenance::gold);
  seeds.add("spiti", Tag(AtomicTag::N), Provenance::projected);
  PropagationConfig cfg;
  cfg.max_iters = 5000;
  const auto corpus = propagate(build_label_graph(mono, seeds, cfg), cfg);

  // A lone seed is its own fixed point.
  bool lone_exact = true;
  for (const auto& seed : std::vector<std::vector<double>>{{1.0, 0.0}, {0.5, 0.5}, {0.0, 1.0}}) {
    LabelGraph g({Tag(AtomicTag::V), Tag(AtomicTag::N)});
    g.set_seed(g.add_node("a", LabelGraph::Kind::type), seed);
    lone_exact = lone_exact && propagate(g).dist[0] == seed;
  }

  // Three-node path against the direct solve.
  PropagationConfig tight;
  tight.max_iters = 1000;
  tight.tol = 1e-12;
  double path_err = 0;
  for (auto [wab, wbc] : std::vector<std::pair<double, double>>{{1, 1}, {2, 0.5}, {0.3, 4}}) {
    for (int both = 0; both < 2; ++both) {
      auto g = oracle::path_graph(wab, wbc);
      g.set_seed(0, {1.0, 0.0});
      if (both) g.set_seed(2, {0.0, 1.0});
      const auto r = propagate(g, tight);
      const auto ref = oracle::solve_fixed_point(g, tight);
      for (std::size_t v = 0; v < 3; ++v)
        for (std::size_t l = 0; l < 2; ++l) path_err = std::max(path_err, std::abs(r.dist[v][l] - ref[v][l]));
    }
  }
  return {corpus.converged && corpus.residual < kMadResidual && lone_exact && path_err < kMadOracleTol,
          "corpus residual " + fmt("%.2e", corpus.residual) + " after " + std::to_string(corpus.iterations) +
              " iterations, lone seed " + (lone_exact ? "exact" : "WRONG") + ", path max error " +
              fmt("%.2e", path_err)};
}

Outcome hmm() {
  const Tag V(AtomicTag::V), N(AtomicTag::N), D(AtomicTag::D), C(AtomicTag::C);
  Rng rng(707);
  double worst_drop = 0;
  for (int trial = 0; trial < 5; ++trial) {
    TagDictionary dict;
    dict.add("o", D, Provenance::gold);
    dict.add("ce", C, Provenance::gold);
    HmmConfig cfg;
    cfg.em_iters = 25;
    HmmTrainReport rep;
    train_semisup_hmm(oracle::grammar_mono(rng, 60), oracle::grammar_corpus(), dict, cfg, &rep);
    for (std::size_t i = 1; i < rep.ll_history.size(); ++i)
      worst_drop = std::max(worst_drop, rep.ll_history[i - 1] - rep.ll_history[i]);
  }

  double fwd_err = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const int K = 2 + static_cast<int>(rng.below(2));
    const auto m = oracle::random_hmm(rng, K, 3);
    const auto words = oracle::random_words(rng, 4, 3);
    double total = 0;
    oracle::each_path(words.size(), K, [&](const std::vector<int>& p) { total += oracle::path_prob(m, words, p); });
    fwd_err = std::max(fwd_err, std::abs(hmm_log_likelihood(m, words) - std::log(total)));
  }

  TagDictionary dict;
  dict.add("o", D, Provenance::gold);
  dict.add("ce", C, Provenance::gold);
  dict.add("pai", V, Provenance::projected);
  dict.add("ene", V, Provenance::propagated);
  dict.add("ene", N, Provenance::propagated);
  const auto m = train_semisup_hmm(oracle::grammar_mono(rng, 50), oracle::grammar_corpus(), dict);
  const std::vector<std::string> vocab = {"o", "i", "ce", "pai", "ene", "ulìa", "spiti", "xyz", "ciuri"};
  int violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> words;
    for (std::uint64_t i = 0, len = 1 + rng.below(8); i < len; ++i) words.push_back(vocab[rng.below(vocab.size())]);
    const auto tags = decode_hmm(m, words);
    for (std::size_t i = 0; i < words.size(); ++i)
      violations += m.dictionary.contains(words[i]) && !m.dictionary.allows(words[i], tags[i]);
  }
  return {worst_drop <= kHmmEmTol && fwd_err < kHmmForwardTol && violations == 0,
          "largest EM drop " + fmt("%.2e", worst_drop) + ", forward max error " + fmt("%.2e", fwd_err) + ", " +
              std::to_string(violations) + " constraint violations in 1000 decodes"};
}

double best_final_story(const IterationRecord& r) {
  double best = 0;
  for (const auto& [name, acc] : r.final_story_accuracy) best = std::max(best, acc);
  return best;
}

Outcome end_to_end() {
  const auto t0 = clock_type::now();
  bool ok = true;
  std::ostringstream detail;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    DiglotConfig world;
    world.seed = seed;
    const auto d = generate_diglot(world);
    const ExperimentData data{d.base, d.parallel, d.test};
    const auto cells = run_grid({TaggerSpec{TaggerKind::crf_mod, false}, TaggerSpec{TaggerKind::gdb, false}},
                                {DataCondition::parse("none"), DataCondition::parse("clp")}, data);
    std::map<std::string, double> acc;
    for (const auto& c : cells) acc[c.tagger] = c.accuracy;
    const double crf = acc.at("crf-mod"), gdb = acc.at("gdb"), gdb_clp = acc.at("gdb+clp");

    AlConfig cfg;
    cfg.seed = seed;
    const auto run = run_active_learning(cfg, prepare_resources(data, cfg), data.test_griko(), oracle_annotator());
    const double first = best_final_story(run.log.front()), last = best_final_story(run.log.back());
    const double gain = 100 * (last - first);

    const bool seed_ok = gdb_clp >= gdb && gdb >= crf && gain >= kAlGainPoints;
    ok = ok && seed_ok;
    detail << (seed > 1 ? "; " : "") << "seed " << seed << ": " << fmt("%.2f", 100 * gdb_clp) << " >= "
           << fmt("%.2f", 100 * gdb) << " >= " << fmt("%.2f", 100 * crf) << ", AL " << fmt("%.2f", 100 * first)
           << " -> " << fmt("%.2f", 100 * last) << (seed_ok ? "" : " (miss)");
  }
  const double secs = seconds_since(t0);
  detail << "; " << fmt("%.0f", secs) << " s";
  return {ok && secs < kE2eTimeLimitS, detail.str()};
}

Outcome cross_validation() {
  DiglotConfig world;
  world.seed = 1;
  const auto narratives = generate_diglot(world).test_griko();
  TaggerOptions opts;
  opts.crf.optimizer.max_iters = 50;
  const auto cv = cross_validate(narratives, TaggerSpec{TaggerKind::crf_mod, false}, {}, opts);
  double sum = 0;
  for (const auto& f : cv.folds) sum += f.accuracy;
  const double n = static_cast<double>(cv.folds.size());
  const double mean = sum / n;
  double ss = 0;
  for (const auto& f : cv.folds) ss += (f.accuracy - mean) * (f.accuracy - mean);
  const double sd = std::sqrt(ss / (n - 1));
  const double err = std::max(std::abs(cv.summary.mean - mean), std::abs(cv.summary.sd - sd));
  return {cv.folds.size() == narratives.size() && err <= kCvTol,
          std::to_string(cv.folds.size()) + " folds for " + std::to_string(narratives.size()) +
              " narratives, mean/sd recheck error " + fmt("%.2e", err)};
}

Outcome service() {
  const auto data = fixture::small_data();
  const auto cfg = fixture::fast_config();
  const auto harness = run_active_learning(cfg, prepare_resources(data, cfg), data.test_griko(), oracle_annotator());
  std::map<std::string, std::vector<std::vector<std::string>>> gold;
  for (const auto& n : data.test_griko())
    for (const auto& tags : oracle_corrections(n)) {
      auto& rows = gold[n.id];
      rows.emplace_back();
      for (const auto& t : tags) rows.back().push_back(t.str());
    }
  const auto annotate = [&](const nlohmann::json& task) { return gold.at(task.at("narrative_id").get<std::string>()); };

  const auto store = fs::temp_directory_path() / ("glossa-acceptance-" + std::to_string(::getpid()));
  fs::remove_all(store);
  auto serve = [&](int max_tasks, std::vector<IterationRecord>* log_before, std::vector<Sentence>* pool_before) {
    AnnotationService svc(cfg, data, store);
    if (log_before) *log_before = svc.log();
    if (pool_before) *pool_before = svc.pool();
    httplib::Server server;
    mount_api(server, svc);
    const int port = server.bind_to_any_port("127.0.0.1");
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();
    httplib::Client client("127.0.0.1", port);
    drive_service(client, annotate, std::chrono::minutes(5), max_tasks);
    const auto log = svc.log();
    const auto pool = svc.pool();
    server.stop();
    t.join();
    return std::make_pair(log, pool);
  };

  // Two narratives, then a fresh process over the same store finishes the run.
  const auto [first_log, first_pool] = serve(2, nullptr, nullptr);
  std::vector<IterationRecord> restored_log;
  std::vector<Sentence> restored_pool;
  const auto [final_log, final_pool] = serve(-1, &restored_log, &restored_pool);
  fs::remove_all(store);

  const bool durable = restored_log == first_log && restored_pool == first_pool && first_log.size() == 2;
  const bool identical = log_to_json(final_log).dump() == log_to_json(harness.log).dump() && final_pool == harness.pool;
  return {durable && identical, std::string("restart ") + (durable ? "kept" : "LOST") + " 2 accepted narratives, HTTP log " +
                                    (identical ? "identical to" : "DIFFERS from") + " harness log (" +
                                    std::to_string(harness.log.size()) + " iterations)"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"crf inference matches enumeration", crf_oracle},
      {"crf gradient matches finite differences", crf_gradient},
      {"neural gradient check and overfit", neural},
      {"ibm1 likelihood and convergence", ibm1},
      {"projection filter monotone and exact", projection_filter},
      {"label propagation fixed point", mad},
      {"hmm em, forward and constraints", hmm},
      {"synthetic end-to-end ordering and active learning", end_to_end},
      {"cross-validation folds and summary", cross_validation},
      {"service reproduces harness and survives restart", service},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    const auto t0 = clock_type::now();
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS  " : "FAIL  ") << name << "  [" << o.detail << "] (" << fmt("%.1f", seconds_since(t0))
              << " s)" << std::endl;
  }
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << std::endl;
  return failed ? 1 : 0;
}
