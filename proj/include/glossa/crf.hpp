#pragma once

// Linear-chain CRF tagger with `basic` and `extended` feature templates.

#include <Eigen/Dense>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "glossa/corpus.hpp"
#include "glossa/dictionary.hpp"
#include "glossa/errors.hpp"
#include "glossa/optimize.hpp"
#include "glossa/serialize.hpp"
#include "glossa/tag.hpp"
#include "glossa/text.hpp"

namespace glossa {

enum class FeatureProfile { basic, extended };

inline std::string_view to_string(FeatureProfile p) {
  return p == FeatureProfile::basic ? "basic" : "extended";
}

inline FeatureProfile parse_profile(std::string_view s) {
  if (s == "basic" || s == "crf") return FeatureProfile::basic;
  if (s == "extended" || s == "crf-mod") return FeatureProfile::extended;
  throw InvalidConfig("unknown feature profile '" + std::string(s) + "'");
}

struct FeatureTemplateConfig {
  FeatureProfile profile = FeatureProfile::extended;
  int max_affix_len = 4;
  bool use_ngrams = true;

  static FeatureTemplateConfig basic() { return {FeatureProfile::basic, 4, false}; }
  static FeatureTemplateConfig extended() { return {FeatureProfile::extended, 4, true}; }
  static FeatureTemplateConfig for_profile(FeatureProfile p) {
    return p == FeatureProfile::basic ? basic() : extended();
  }

  void validate() const {
    if (max_affix_len < 1) throw InvalidConfig("max_affix_len must be >= 1");
  }

  friend bool operator==(const FeatureTemplateConfig&, const FeatureTemplateConfig&) = default;
};

inline constexpr std::string_view kBos = "<s>";
inline constexpr std::string_view kEos = "</s>";

/// Observation features of position `i`, sorted and unique.
inline std::vector<std::string> extract_features(const std::vector<std::string>& words,
                                                 std::size_t i,
                                                 const FeatureTemplateConfig& cfg) {
  if (i >= words.size())
    throw OutOfRange("feature position " + std::to_string(i) + " outside sentence of length " +
                     std::to_string(words.size()));
  const std::string& w = words[i];
  const std::string prev = i > 0 ? words[i - 1] : std::string(kBos);
  const std::string next = i + 1 < words.size() ? words[i + 1] : std::string(kEos);

  std::vector<std::string> f;
  f.push_back("bias");
  f.push_back("w=" + w);
  f.push_back("w-1=" + prev);
  f.push_back("w+1=" + next);
  if (is_punctuation_word(w)) f.push_back("punct");
  if (std::any_of(w.begin(), w.end(), [](char c) { return c >= '0' && c <= '9'; }))
    f.push_back("digit");
  if (w.find('\'') != std::string::npos) f.push_back("apos");

  if (cfg.profile == FeatureProfile::extended) {
    const std::u32string cps = utf8::decode(w);
    const std::size_t n = std::min<std::size_t>(cps.size(), static_cast<std::size_t>(cfg.max_affix_len));
    for (std::size_t k = 1; k <= n; ++k) {
      f.push_back("p" + std::to_string(k) + "=" + utf8::encode(cps.substr(0, k)));
      f.push_back("s" + std::to_string(k) + "=" + utf8::encode(cps.substr(cps.size() - k)));
    }
    if (cfg.use_ngrams) {
      f.push_back("b-1=" + prev + "|" + w);
      f.push_back("b+1=" + w + "|" + next);
      f.push_back("t=" + prev + "|" + w + "|" + next);
    }
  }
  std::sort(f.begin(), f.end());
  f.erase(std::unique(f.begin(), f.end()), f.end());
  return f;
}

inline std::vector<std::string> extract_features(const Sentence& s, std::size_t i,
                                                 const FeatureTemplateConfig& cfg) {
  return extract_features(s.norms(), i, cfg);
}

// ---------------------------------------------------------------------------
// Chain inference over a T x K unary table and a K x K transition table.

namespace chain {

inline double log_sum_exp(const Eigen::Ref<const Eigen::VectorXd>& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

/// Log forward messages: alpha(t, y) = log sum over prefixes ending in y.
inline Eigen::MatrixXd forward(const Eigen::MatrixXd& unary, const Eigen::MatrixXd& trans) {
  const auto T = unary.rows(), K = unary.cols();
  Eigen::MatrixXd alpha(T, K);
  if (T == 0) return alpha;
  alpha.row(0) = unary.row(0);
  Eigen::VectorXd tmp(K);
  for (Eigen::Index t = 1; t < T; ++t)
    for (Eigen::Index y = 0; y < K; ++y) {
      for (Eigen::Index a = 0; a < K; ++a) tmp(a) = alpha(t - 1, a) + trans(a, y);
      alpha(t, y) = log_sum_exp(tmp) + unary(t, y);
    }
  return alpha;
}

inline Eigen::MatrixXd backward(const Eigen::MatrixXd& unary, const Eigen::MatrixXd& trans) {
  const auto T = unary.rows(), K = unary.cols();
  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(T, K);
  Eigen::VectorXd tmp(K);
  for (Eigen::Index t = T - 2; t >= 0; --t)
    for (Eigen::Index y = 0; y < K; ++y) {
      for (Eigen::Index b = 0; b < K; ++b) tmp(b) = trans(y, b) + unary(t + 1, b) + beta(t + 1, b);
      beta(t, y) = log_sum_exp(tmp);
    }
  return beta;
}

inline double log_partition(const Eigen::MatrixXd& unary, const Eigen::MatrixXd& trans) {
  if (unary.rows() == 0) return 0.0;
  const Eigen::MatrixXd alpha = forward(unary, trans);
  return log_sum_exp(alpha.row(alpha.rows() - 1).transpose());
}

struct Marginals {
  Eigen::MatrixXd node;                // T x K
  Eigen::MatrixXd edge;                // K x K, summed over positions
  double log_z = 0.0;
};

/// Reference log-space version of `marginals`.
inline Marginals marginals_log(const Eigen::MatrixXd& unary, const Eigen::MatrixXd& trans) {
  const auto T = unary.rows(), K = unary.cols();
  Marginals m;
  m.node = Eigen::MatrixXd::Zero(T, K);
  m.edge = Eigen::MatrixXd::Zero(K, K);
  if (T == 0) return m;
  const Eigen::MatrixXd alpha = forward(unary, trans);
  const Eigen::MatrixXd beta = backward(unary, trans);
  m.log_z = log_sum_exp(alpha.row(T - 1).transpose());
  m.node = (alpha + beta).array() - m.log_z;
  m.node = m.node.array().exp();
  for (Eigen::Index t = 1; t < T; ++t)
    for (Eigen::Index a = 0; a < K; ++a)
      for (Eigen::Index b = 0; b < K; ++b)
        m.edge(a, b) += std::exp(alpha(t - 1, a) + trans(a, b) + unary(t, b) + beta(t, b) - m.log_z);
  return m;
}

/// Node and summed edge marginals plus log Z. Runs a scaled
/// forward-backward in probability space (potentials shifted by their
/// maxima); potentials spanning too wide a range go to the log-space path.
inline Marginals marginals(const Eigen::MatrixXd& unary, const Eigen::MatrixXd& trans) {
  const auto T = unary.rows(), K = unary.cols();
  Marginals m;
  m.node = Eigen::MatrixXd::Zero(T, K);
  m.edge = Eigen::MatrixXd::Zero(K, K);
  if (T == 0) return m;
  const Eigen::VectorXd row_max = unary.rowwise().maxCoeff();
  const double trans_max = trans.maxCoeff();
  const double spread = (row_max - unary.rowwise().minCoeff()).maxCoeff() + trans_max - trans.minCoeff();
  if (!(spread < 300.0)) return marginals_log(unary, trans);
  const Eigen::MatrixXd E = (unary.colwise() - row_max).array().exp();
  const Eigen::MatrixXd M = (trans.array() - trans_max).exp();
  Eigen::MatrixXd alpha(T, K), beta(T, K);
  Eigen::VectorXd scale(T);
  alpha.row(0) = E.row(0);
  for (Eigen::Index t = 0; t < T; ++t) {
    if (t > 0) alpha.row(t) = (alpha.row(t - 1) * M).cwiseProduct(E.row(t));
    scale(t) = alpha.row(t).sum();
    if (!(scale(t) > 0.0) || !std::isfinite(scale(t))) return marginals_log(unary, trans);
    alpha.row(t) /= scale(t);
  }
  beta.row(T - 1).setOnes();
  for (Eigen::Index t = T - 2; t >= 0; --t)
    beta.row(t) = (M * E.row(t + 1).cwiseProduct(beta.row(t + 1)).transpose()).transpose() / scale(t + 1);
  m.log_z = scale.array().log().sum() + row_max.sum() + static_cast<double>(T - 1) * trans_max;
  m.node = alpha.cwiseProduct(beta);
  Eigen::VectorXd eb(K);
  for (Eigen::Index t = 1; t < T; ++t) {
    eb = E.row(t).cwiseProduct(beta.row(t)).transpose() / scale(t);
    m.edge.noalias() += alpha.row(t - 1).transpose() * eb.transpose();
  }
  m.edge = m.edge.cwiseProduct(M);
  return m;
}

inline double score(const Eigen::MatrixXd& unary, const Eigen::MatrixXd& trans,
                    const std::vector<int>& path) {
  double s = 0.0;
  for (std::size_t t = 0; t < path.size(); ++t) {
    s += unary(static_cast<Eigen::Index>(t), path[t]);
    if (t > 0) s += trans(path[t - 1], path[t]);
  }
  return s;
}

/// Exact argmax; among equal scores the lower tag index wins at every step.
inline std::vector<int> viterbi(const Eigen::MatrixXd& unary, const Eigen::MatrixXd& trans,
                                double* best_score = nullptr) {
  const auto T = unary.rows(), K = unary.cols();
  std::vector<int> path(static_cast<std::size_t>(T));
  if (T == 0) {
    if (best_score) *best_score = 0.0;
    return path;
  }
  Eigen::MatrixXd delta(T, K);
  Eigen::MatrixXi back(T, K);
  delta.row(0) = unary.row(0);
  for (Eigen::Index t = 1; t < T; ++t)
    for (Eigen::Index y = 0; y < K; ++y) {
      double best = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (Eigen::Index a = 0; a < K; ++a) {
        const double v = delta(t - 1, a) + trans(a, y);
        if (v > best) {
          best = v;
          arg = static_cast<int>(a);
        }
      }
      delta(t, y) = best + unary(t, y);
      back(t, y) = arg;
    }
  double best = -std::numeric_limits<double>::infinity();
  int arg = 0;
  for (Eigen::Index y = 0; y < K; ++y)
    if (delta(T - 1, y) > best) {
      best = delta(T - 1, y);
      arg = static_cast<int>(y);
    }
  path[static_cast<std::size_t>(T - 1)] = arg;
  for (Eigen::Index t = T - 1; t > 0; --t) path[static_cast<std::size_t>(t - 1)] = back(t, path[static_cast<std::size_t>(t)]);
  if (best_score) *best_score = best;
  return path;
}

}  // namespace chain

// ---------------------------------------------------------------------------

/// Learned CRF parameters. Weight layout: emission weight of (feature f,
/// tag y) at f*K + y, followed by the K x K transition block (row = previous).
struct CrfModel {
  FeatureTemplateConfig templates;
  double l2 = 0.1;
  std::vector<Tag> tagset;
  std::vector<std::string> features;
  std::unordered_map<std::string, int> feature_index;
  Eigen::VectorXd weights;

  std::size_t num_tags() const { return tagset.size(); }
  std::size_t num_features() const { return features.size(); }
  std::size_t transition_offset() const { return features.size() * tagset.size(); }

  int tag_index(const Tag& t) const {
    for (std::size_t i = 0; i < tagset.size(); ++i)
      if (tagset[i] == t) return static_cast<int>(i);
    return -1;
  }

  int add_feature(const std::string& f) {
    auto [it, inserted] = feature_index.emplace(f, static_cast<int>(features.size()));
    if (inserted) features.push_back(f);
    return it->second;
  }

  /// Known feature ids per position; unseen features are dropped.
  std::vector<std::vector<int>> compile(const std::vector<std::string>& words) const {
    std::vector<std::vector<int>> out(words.size());
    for (std::size_t i = 0; i < words.size(); ++i)
      for (const auto& f : extract_features(words, i, templates)) {
        auto it = feature_index.find(f);
        if (it != feature_index.end()) out[i].push_back(it->second);
      }
    return out;
  }

  Eigen::MatrixXd transitions() const {
    const auto K = static_cast<Eigen::Index>(num_tags());
    Eigen::MatrixXd tr(K, K);
    const auto off = static_cast<Eigen::Index>(transition_offset());
    for (Eigen::Index a = 0; a < K; ++a)
      for (Eigen::Index b = 0; b < K; ++b) tr(a, b) = weights(off + a * K + b);
    return tr;
  }

  Eigen::MatrixXd unary(const std::vector<std::vector<int>>& feats) const {
    const auto K = static_cast<Eigen::Index>(num_tags());
    Eigen::MatrixXd u = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(feats.size()), K);
    for (std::size_t t = 0; t < feats.size(); ++t)
      for (int f : feats[t]) u.row(static_cast<Eigen::Index>(t)) += weights.segment(static_cast<Eigen::Index>(f) * K, K).transpose();
    return u;
  }

  Eigen::MatrixXd unary(const Sentence& s) const { return unary(compile(s.norms())); }
};

/// Zero-weight model over a fixed tagset and feature inventory.
inline CrfModel make_crf_model(std::vector<Tag> tagset, const std::vector<std::string>& features,
                               FeatureTemplateConfig templates = FeatureTemplateConfig::extended(),
                               double l2 = 0.1) {
  CrfModel m;
  m.templates = templates;
  m.l2 = l2;
  m.tagset = std::move(tagset);
  for (const auto& f : features) m.add_feature(f);
  m.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m.transition_offset() + m.num_tags() * m.num_tags()));
  return m;
}

inline double log_partition(const CrfModel& model, const Sentence& s) {
  if (s.empty()) return 0.0;
  return chain::log_partition(model.unary(s), model.transitions());
}

inline std::vector<int> tag_indices(const CrfModel& model, const std::vector<Tag>& tags) {
  std::vector<int> out;
  for (const auto& t : tags) {
    const int k = model.tag_index(t);
    if (k < 0) throw UnknownTag("tag " + t.str() + " is not in the model tagset");
    out.push_back(k);
  }
  return out;
}

inline double score_sequence(const CrfModel& model, const Sentence& s, const std::vector<Tag>& tags) {
  if (tags.size() != s.size()) throw LengthMismatch("tag sequence length differs from sentence length");
  return chain::score(model.unary(s), model.transitions(), tag_indices(model, tags));
}

struct Decoded {
  std::vector<Tag> tags;
  double score = 0.0;
};

inline Decoded decode(const CrfModel& model, const Sentence& s) {
  Decoded d;
  if (s.empty()) return d;
  const auto path = chain::viterbi(model.unary(s), model.transitions(), &d.score);
  for (int k : path) d.tags.push_back(model.tagset[static_cast<std::size_t>(k)]);
  return d;
}

/// Posterior marginal of each position's tag (T x K, rows sum to 1).
inline Eigen::MatrixXd posterior_marginals(const CrfModel& model, const Sentence& s) {
  return chain::marginals(model.unary(s), model.transitions()).node;
}

// ---------------------------------------------------------------------------
// Training

struct CrfTrainOptions {
  FeatureTemplateConfig templates = FeatureTemplateConfig::extended();
  double l2 = 0.1;
  LbfgsOptions optimizer{};
};

/// Regularized conditional log-likelihood of a compiled training set.
class CrfObjective {
 public:
  struct Instance {
    std::vector<std::vector<int>> feats;
    std::vector<int> gold;
    double weight = 1.0;
  };

  CrfObjective(std::size_t num_features, std::size_t num_tags, double l2)
      : F_(num_features), K_(num_tags), l2_(l2) {}

  void add(Instance inst) { data_.push_back(std::move(inst)); }
  const std::vector<Instance>& instances() const { return data_; }
  std::size_t dimension() const { return F_ * K_ + K_ * K_; }

  /// Returns sum_i w_i log p(y_i | x_i) - l2/2 ||w||^2 and its gradient.
  double value_and_gradient(const Eigen::VectorXd& w, Eigen::VectorXd& grad) const {
    const auto K = static_cast<Eigen::Index>(K_);
    const auto off = static_cast<Eigen::Index>(F_ * K_);
    grad = -l2_ * w;
    double value = -0.5 * l2_ * w.squaredNorm();
    Eigen::MatrixXd trans(K, K);
    for (Eigen::Index a = 0; a < K; ++a)
      for (Eigen::Index b = 0; b < K; ++b) trans(a, b) = w(off + a * K + b);

    for (const auto& inst : data_) {
      const auto T = static_cast<Eigen::Index>(inst.feats.size());
      if (T == 0) continue;
      Eigen::MatrixXd unary = Eigen::MatrixXd::Zero(T, K);
      for (Eigen::Index t = 0; t < T; ++t)
        for (int f : inst.feats[static_cast<std::size_t>(t)])
          unary.row(t) += w.segment(static_cast<Eigen::Index>(f) * K, K).transpose();
      const auto m = chain::marginals(unary, trans);
      value += inst.weight * (chain::score(unary, trans, inst.gold) - m.log_z);
      for (Eigen::Index t = 0; t < T; ++t) {
        const auto& feats = inst.feats[static_cast<std::size_t>(t)];
        const int y = inst.gold[static_cast<std::size_t>(t)];
        for (int f : feats) {
          auto seg = grad.segment(static_cast<Eigen::Index>(f) * K, K);
          seg -= inst.weight * m.node.row(t).transpose();
          seg(y) += inst.weight;
        }
        if (t > 0) grad(off + inst.gold[static_cast<std::size_t>(t - 1)] * K + y) += inst.weight;
      }
      for (Eigen::Index a = 0; a < K; ++a)
        for (Eigen::Index b = 0; b < K; ++b) grad(off + a * K + b) -= inst.weight * m.edge(a, b);
    }
    return value;
  }

 private:
  std::size_t F_, K_;
  double l2_;
  std::vector<Instance> data_;
};

struct CrfTrainReport {
  /// Negative objective after each optimizer iteration (non-increasing).
  std::vector<double> nll_history;
  int iterations = 0;
  bool converged = false;
};

namespace detail {

/// Builds the feature inventory and compiled objective for a training set.
inline std::pair<CrfModel, CrfObjective> prepare_crf(const std::vector<Sentence>& train,
                                                     const TagDictionary* supervision,
                                                     const CrfTrainOptions& opts) {
  opts.templates.validate();
  std::vector<Sentence> data;
  for (const auto& s : train) {
    if (s.excluded || s.empty()) continue;
    if (!s.tags) throw NoTrainingData("training sentence without tags");
    data.push_back(s);
  }
  if (supervision)
    for (auto& s : dictionary_sentences(*supervision)) data.push_back(std::move(s));
  if (data.empty()) throw NoTrainingData("no tagged training sentences");

  auto tagset = collect_tagset(data);
  if (tagset.size() < 2)
    throw DegenerateTagset("training data has " + std::to_string(tagset.size()) + " distinct tag(s)");

  CrfModel model;
  model.templates = opts.templates;
  model.l2 = opts.l2;
  model.tagset = std::move(tagset);
  std::vector<std::vector<std::vector<std::string>>> feats(data.size());
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto words = data[n].norms();
    for (std::size_t i = 0; i < words.size(); ++i) {
      feats[n].push_back(extract_features(words, i, opts.templates));
      for (const auto& f : feats[n].back()) model.add_feature(f);
    }
  }
  CrfObjective objective(model.num_features(), model.num_tags(), opts.l2);
  for (std::size_t n = 0; n < data.size(); ++n) {
    CrfObjective::Instance inst;
    for (const auto& fs : feats[n]) {
      std::vector<int> ids;
      for (const auto& f : fs) ids.push_back(model.feature_index.at(f));
      inst.feats.push_back(std::move(ids));
    }
    inst.gold = tag_indices(model, *data[n].tags);
    objective.add(std::move(inst));
  }
  model.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(objective.dimension()));
  return {std::move(model), std::move(objective)};
}

}  // namespace detail

inline CrfModel train_crf(const std::vector<Sentence>& train, const TagDictionary* supervision,
                          const CrfTrainOptions& opts = {}, CrfTrainReport* report = nullptr) {
  auto [model, objective] = detail::prepare_crf(train, supervision, opts);
  auto fg = [&objective](const Eigen::VectorXd& w, Eigen::VectorXd& g) {
    const double v = objective.value_and_gradient(w, g);
    g = -g;
    return -v;
  };
  auto result = minimize_lbfgs(fg, model.weights, opts.optimizer);
  model.weights = std::move(result.x);
  if (report) {
    report->nll_history = std::move(result.history);
    report->iterations = result.iterations;
    report->converged = result.converged;
  }
  return model;
}

/// Gradient of the training objective at the model's current weights.
inline Eigen::VectorXd crf_objective_gradient(const CrfModel& model, const std::vector<Sentence>& train,
                                              const TagDictionary* supervision,
                                              const CrfTrainOptions& opts) {
  auto [fresh, objective] = detail::prepare_crf(train, supervision, opts);
  if (fresh.features != model.features || fresh.tagset != model.tagset)
    throw InvalidConfig("model was not trained on this data");
  Eigen::VectorXd g;
  objective.value_and_gradient(model.weights, g);
  return g;
}

// ---------------------------------------------------------------------------
// Serialization: line-oriented text, exact round trip.

/// Format:
///   glossa-crf 1
///   profile <basic|extended> / max_affix_len N / use_ngrams 0|1 / l2 x
///   tags <tag>...              (tab separated)
///   T <w_00> ... <w_KK>        (transition block, row-major)
///   F <feature> <w_0> ... <w_K-1>  (one line per feature)
inline void save_crf(std::ostream& out, const CrfModel& m) {
  out << "glossa-crf\t1\n";
  out << "profile\t" << to_string(m.templates.profile) << '\n';
  out << "max_affix_len\t" << m.templates.max_affix_len << '\n';
  out << "use_ngrams\t" << (m.templates.use_ngrams ? 1 : 0) << '\n';
  out << "l2\t" << detail::format_double(m.l2) << '\n';
  out << "tags";
  for (const auto& t : m.tagset) out << '\t' << t.str();
  out << '\n';
  const auto K = static_cast<Eigen::Index>(m.num_tags());
  const auto off = static_cast<Eigen::Index>(m.transition_offset());
  out << 'T';
  for (Eigen::Index i = 0; i < K * K; ++i) out << '\t' << detail::format_double(m.weights(off + i));
  out << '\n';
  for (std::size_t f = 0; f < m.features.size(); ++f) {
    out << "F\t" << m.features[f];
    for (Eigen::Index y = 0; y < K; ++y)
      out << '\t' << detail::format_double(m.weights(static_cast<Eigen::Index>(f) * K + y));
    out << '\n';
  }
}

inline CrfModel load_crf(std::istream& in) {
  CrfModel m;
  std::string line;
  std::vector<double> transitions;
  std::vector<std::vector<double>> rows;
  if (!std::getline(in, line) || line != "glossa-crf\t1") throw ParseError("not a glossa CRF model");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cols = detail::split_tabs(line);
    const auto& key = cols[0];
    if (key == "profile") m.templates.profile = parse_profile(cols.at(1));
    else if (key == "max_affix_len") m.templates.max_affix_len = std::stoi(cols.at(1));
    else if (key == "use_ngrams") m.templates.use_ngrams = cols.at(1) == "1";
    else if (key == "l2") m.l2 = detail::parse_double(cols.at(1));
    else if (key == "tags") {
      for (std::size_t i = 1; i < cols.size(); ++i) m.tagset.push_back(parse_tag(cols[i]));
    } else if (key == "T") {
      for (std::size_t i = 1; i < cols.size(); ++i) transitions.push_back(detail::parse_double(cols[i]));
    } else if (key == "F") {
      if (cols.size() != m.tagset.size() + 2) throw ParseError("feature row has wrong width");
      m.add_feature(cols[1]);
      std::vector<double> r;
      for (std::size_t i = 2; i < cols.size(); ++i) r.push_back(detail::parse_double(cols[i]));
      rows.push_back(std::move(r));
    } else {
      throw ParseError("unknown CRF model line '" + key + "'");
    }
  }
  const std::size_t K = m.tagset.size();
  if (transitions.size() != K * K) throw ParseError("transition block has wrong size");
  if (rows.size() != m.features.size()) throw ParseError("duplicate feature rows");
  m.weights.resize(static_cast<Eigen::Index>(m.transition_offset() + K * K));
  for (std::size_t f = 0; f < rows.size(); ++f)
    for (std::size_t y = 0; y < K; ++y) m.weights(static_cast<Eigen::Index>(f * K + y)) = rows[f][y];
  for (std::size_t i = 0; i < K * K; ++i)
    m.weights(static_cast<Eigen::Index>(m.transition_offset() + i)) = transitions[i];
  return m;
}

inline void save_crf(const std::filesystem::path& path, const CrfModel& m) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  save_crf(out, m);
}

inline CrfModel load_crf(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return load_crf(in);
}

}  // namespace glossa
