#pragma once

// Bidirectional LSTM tagger: word embeddings, one forward and one backward
// LSTM, a tanh tag-embedding layer and a softmax over tags.

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "glossa/autograd.hpp"
#include "glossa/corpus.hpp"
#include "glossa/errors.hpp"
#include "glossa/random.hpp"
#include "glossa/serialize.hpp"

namespace glossa {

struct NeuralConfig {
  int embed_dim = 128;
  int hidden_dim = 128;
  int tag_dim = 32;
  double lr = 0.0002;
  int max_epochs = 50;
  int dev_size = 40;
  std::uint64_t seed = 1;
  /// Per-occurrence probability of replacing a training singleton by UNK.
  double unk_replace = 0.5;

  void validate() const {
    if (embed_dim <= 0 || hidden_dim <= 0 || tag_dim <= 0) throw InvalidConfig("neural dimensions must be positive");
    if (!(lr > 0) || max_epochs < 1 || dev_size < 0) throw InvalidConfig("bad neural training settings");
    if (!(unk_replace >= 0 && unk_replace <= 1)) throw InvalidConfig("unk_replace must lie in [0, 1]");
  }
};

struct NeuralModel {
  NeuralConfig cfg;
  std::vector<Tag> tagset;
  /// vocab[0] is UNK.
  std::vector<std::string> vocab;
  std::unordered_map<std::string, int> word_index;

  ad::Parameter embed;       // E x V
  ad::Parameter fw_w, fw_b;  // 4H x (E + H), 4H x 1; gate order i, f, o, g
  ad::Parameter bw_w, bw_b;
  ad::Parameter tag_w, tag_b;  // D x 2H
  ad::Parameter out_w, out_b;  // K x D

  std::vector<ad::Parameter*> params() {
    return {&embed, &fw_w, &fw_b, &bw_w, &bw_b, &tag_w, &tag_b, &out_w, &out_b};
  }
  std::vector<const ad::Parameter*> params() const {
    return {&embed, &fw_w, &fw_b, &bw_w, &bw_b, &tag_w, &tag_b, &out_w, &out_b};
  }

  int num_tags() const { return static_cast<int>(tagset.size()); }

  int word_id(const std::string& w) const {
    auto it = word_index.find(w);
    return it == word_index.end() ? 0 : it->second;
  }

  int tag_index(const Tag& t) const {
    auto it = std::lower_bound(tagset.begin(), tagset.end(), t);
    return it != tagset.end() && *it == t ? static_cast<int>(it - tagset.begin()) : -1;
  }
};

namespace detail {

inline void xavier(ad::Parameter& p, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
  for (Eigen::Index j = 0; j < p.value.cols(); ++j)
    for (Eigen::Index i = 0; i < p.value.rows(); ++i) p.value(i, j) = rng.uniform(-a, a);
}

struct LstmState {
  ad::Tape::Id h, c;
};

inline LstmState lstm_step(ad::Tape& t, ad::Parameter& w, ad::Parameter& b, ad::Tape::Id x, LstmState s, int H) {
  const auto z = t.add_bias(t.matvec(w, t.concat(x, s.h)), b);
  const auto i = t.sigmoid(t.slice(z, 0, H));
  const auto f = t.sigmoid(t.slice(z, H, H));
  const auto o = t.sigmoid(t.slice(z, 2 * H, H));
  const auto g = t.tanh(t.slice(z, 3 * H, H));
  const auto c = t.add(t.mul(f, s.c), t.mul(i, g));
  return {t.mul(o, t.tanh(c)), c};
}

/// Builds per-token log-softmax nodes for word ids.
inline std::vector<ad::Tape::Id> build_network(ad::Tape& t, NeuralModel& m, const std::vector<int>& ids) {
  const int H = m.cfg.hidden_dim;
  const auto T = ids.size();
  std::vector<ad::Tape::Id> x(T), hf(T), hb(T);
  for (std::size_t i = 0; i < T; ++i) x[i] = t.lookup(m.embed, ids[i]);
  const auto zero = t.constant(Eigen::VectorXd::Zero(H));
  LstmState s{zero, zero};
  for (std::size_t i = 0; i < T; ++i) hf[i] = (s = lstm_step(t, m.fw_w, m.fw_b, x[i], s, H)).h;
  s = {zero, zero};
  for (std::size_t i = T; i-- > 0;) hb[i] = (s = lstm_step(t, m.bw_w, m.bw_b, x[i], s, H)).h;
  std::vector<ad::Tape::Id> out(T);
  for (std::size_t i = 0; i < T; ++i) {
    const auto e = t.tanh(t.add_bias(t.matvec(m.tag_w, t.concat(hf[i], hb[i])), m.tag_b));
    out[i] = t.log_softmax(t.add_bias(t.matvec(m.out_w, e), m.out_b));
  }
  return out;
}

/// Summed token negative log-likelihood node.
inline ad::Tape::Id build_loss(ad::Tape& t, NeuralModel& m, const std::vector<int>& ids, const std::vector<int>& gold) {
  const auto lp = build_network(t, m, ids);
  std::vector<ad::Tape::Id> picks;
  for (std::size_t i = 0; i < ids.size(); ++i) picks.push_back(t.pick(lp[i], gold[i]));
  return t.negative_sum(picks);
}

inline std::vector<int> encode(const NeuralModel& m, const std::vector<std::string>& words) {
  std::vector<int> ids;
  for (const auto& w : words) ids.push_back(m.word_id(w));
  return ids;
}

inline std::vector<int> gold_ids(const NeuralModel& m, const Sentence& s) {
  std::vector<int> out;
  for (const auto& t : *s.tags) {
    const int k = m.tag_index(t);
    if (k < 0) throw UnknownTag("tag " + t.str() + " not in the neural tagset");
    out.push_back(k);
  }
  return out;
}

}  // namespace detail

/// Fresh model with random weights (uniform(-0.1, 0.1) embeddings, Xavier
/// matrices, zero biases).
inline NeuralModel init_neural(std::vector<std::string> words, std::vector<Tag> tagset, const NeuralConfig& cfg) {
  cfg.validate();
  NeuralModel m;
  m.cfg = cfg;
  std::sort(tagset.begin(), tagset.end());
  tagset.erase(std::unique(tagset.begin(), tagset.end()), tagset.end());
  m.tagset = std::move(tagset);
  m.vocab.emplace_back("<unk>");
  std::set<std::string> uniq(words.begin(), words.end());
  uniq.erase("<unk>");
  m.vocab.insert(m.vocab.end(), uniq.begin(), uniq.end());
  for (std::size_t i = 0; i < m.vocab.size(); ++i) m.word_index[m.vocab[i]] = static_cast<int>(i);

  const int E = cfg.embed_dim, H = cfg.hidden_dim, D = cfg.tag_dim, K = m.num_tags();
  Rng rng(cfg.seed);
  m.embed = ad::Parameter(E, static_cast<Eigen::Index>(m.vocab.size()));
  for (Eigen::Index j = 0; j < m.embed.value.cols(); ++j)
    for (Eigen::Index i = 0; i < E; ++i) m.embed.value(i, j) = rng.uniform(-0.1, 0.1);
  m.fw_w = ad::Parameter(4 * H, E + H);
  m.bw_w = ad::Parameter(4 * H, E + H);
  m.tag_w = ad::Parameter(D, 2 * H);
  m.out_w = ad::Parameter(K, D);
  for (auto* p : {&m.fw_w, &m.bw_w, &m.tag_w, &m.out_w}) detail::xavier(*p, rng);
  m.fw_b = ad::Parameter(4 * H, 1);
  m.bw_b = ad::Parameter(4 * H, 1);
  m.tag_b = ad::Parameter(D, 1);
  m.out_b = ad::Parameter(K, 1);
  return m;
}

/// Per-token log-probabilities, T x K.
inline Eigen::MatrixXd neural_log_probs(const NeuralModel& model, const std::vector<std::string>& words) {
  if (words.empty()) throw EmptySentence("cannot tag an empty sentence");
  auto& m = const_cast<NeuralModel&>(model);  // the tape only reads values on the forward pass
  ad::Tape t;
  const auto lp = detail::build_network(t, m, detail::encode(m, words));
  Eigen::MatrixXd out(static_cast<Eigen::Index>(words.size()), m.num_tags());
  for (std::size_t i = 0; i < lp.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = t.value(lp[i]).transpose();
  return out;
}

/// Argmax tags (lowest index on ties) and their probabilities.
inline std::pair<std::vector<Tag>, std::vector<double>> neural_tag(const NeuralModel& m,
                                                                   const std::vector<std::string>& words) {
  if (words.empty()) return {};
  const auto lp = neural_log_probs(m, words);
  std::vector<Tag> tags;
  std::vector<double> conf;
  for (Eigen::Index i = 0; i < lp.rows(); ++i) {
    Eigen::Index k = 0;
    for (Eigen::Index j = 1; j < lp.cols(); ++j)
      if (lp(i, j) > lp(i, k)) k = j;
    tags.push_back(m.tagset[static_cast<std::size_t>(k)]);
    conf.push_back(std::exp(lp(i, k)));
  }
  return {tags, conf};
}

/// Mean token negative log-likelihood over tagged sentences.
inline double neural_loss(const NeuralModel& m, const std::vector<Sentence>& data) {
  double total = 0;
  std::size_t n = 0;
  for (const auto& s : data) {
    if (s.empty()) continue;
    const auto lp = neural_log_probs(m, s.norms());
    const auto gold = detail::gold_ids(m, s);
    for (std::size_t i = 0; i < gold.size(); ++i) total -= lp(static_cast<Eigen::Index>(i), gold[i]);
    n += gold.size();
  }
  return n ? total / static_cast<double>(n) : 0.0;
}

inline double neural_accuracy(const NeuralModel& m, const std::vector<Sentence>& data) {
  std::size_t ok = 0, n = 0;
  for (const auto& s : data) {
    if (s.empty()) continue;
    const auto tags = neural_tag(m, s.norms()).first;
    for (std::size_t i = 0; i < tags.size(); ++i) ok += tags[i] == (*s.tags)[i];
    n += tags.size();
  }
  return n ? static_cast<double>(ok) / static_cast<double>(n) : 0.0;
}

/// Analytic vs central-difference gradients of the summed loss over `batch`
/// on a random sample of the parameters the batch touches. Returns the
/// largest relative error |a - n| / max(|a|, |n|), ignoring pairs where
/// both are below 1e-7.
inline double gradient_check(NeuralModel& m, const std::vector<Sentence>& batch, Rng& rng,
                             double fraction = 0.01, std::size_t min_samples = 200, double h = 1e-4,
                             bool corrupt_tanh = false) {
  auto loss_and_grad = [&](bool with_grad) {
    double loss = 0;
    for (auto* p : m.params()) p->zero_grad();
    for (const auto& s : batch) {
      ad::Tape t;
      t.corrupt_tanh_backward = corrupt_tanh;
      const auto root = detail::build_loss(t, m, detail::encode(m, s.norms()), detail::gold_ids(m, s));
      loss += t.value(root)(0);
      if (with_grad) t.backward(root);
    }
    return loss;
  };
  loss_and_grad(true);
  std::vector<Eigen::MatrixXd> analytic;
  for (auto* p : m.params()) analytic.push_back(p->grad);

  std::set<int> used;
  for (const auto& s : batch)
    for (int id : detail::encode(m, s.norms())) used.insert(id);
  std::vector<std::tuple<std::size_t, Eigen::Index, Eigen::Index>> candidates;
  const auto params = m.params();
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    const auto& v = params[pi]->value;
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      if (pi == 0 && !used.count(static_cast<int>(j))) continue;
      for (Eigen::Index i = 0; i < v.rows(); ++i) candidates.emplace_back(pi, i, j);
    }
  }
  const auto want = std::max(min_samples, static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(candidates.size()))));
  rng.shuffle(candidates);
  candidates.resize(std::min(want, candidates.size()));

  double worst = 0;
  for (const auto& [pi, i, j] : candidates) {
    double& x = params[pi]->value(i, j);
    const double keep = x;
    x = keep + h;
    const double up = loss_and_grad(false);
    x = keep - h;
    const double down = loss_and_grad(false);
    x = keep;
    const double num = (up - down) / (2 * h);
    const double ana = analytic[pi](i, j);
    const double scale = std::max(std::abs(num), std::abs(ana));
    if (scale < 1e-7) continue;
    worst = std::max(worst, std::abs(num - ana) / scale);
  }
  for (std::size_t pi = 0; pi < params.size(); ++pi) params[pi]->grad = analytic[pi];
  return worst;
}

struct NeuralTrainReport {
  std::vector<double> train_loss;  // mean token NLL on the training split after each epoch
  std::vector<double> dev_accuracy;
  int best_epoch = 0;  // 1-based; the returned snapshot
  std::vector<std::size_t> dev_indices;  // into the non-excluded training sentences
};

/// Adam, one step per sentence. Holds out `dev_size` random sentences and
/// returns the snapshot with the best dev accuracy (earliest on ties); with
/// dev_size 0, the last epoch.
inline NeuralModel train_neural(const std::vector<Sentence>& train, const NeuralConfig& cfg = {},
                                NeuralTrainReport* report = nullptr) {
  cfg.validate();
  std::vector<Sentence> data;
  for (const auto& s : train) {
    if (s.excluded || s.empty()) continue;
    if (!s.tags) throw NoTrainingData("training sentence without tags");
    data.push_back(s);
  }
  if (data.size() <= static_cast<std::size_t>(cfg.dev_size))
    throw InsufficientData("neural training needs more than " + std::to_string(cfg.dev_size) + " sentences, got " +
                           std::to_string(data.size()));
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);
  std::vector<Sentence> dev, fit;
  NeuralTrainReport rep;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const bool held_out = i < static_cast<std::size_t>(cfg.dev_size);
    (held_out ? dev : fit).push_back(data[order[i]]);
    if (held_out) rep.dev_indices.push_back(order[i]);
  }

  std::vector<std::string> words;
  std::vector<Tag> tags;
  std::unordered_map<std::string, int> freq;
  for (const auto& s : fit)
    for (std::size_t i = 0; i < s.size(); ++i) {
      words.push_back(s.tokens[i].norm);
      tags.push_back((*s.tags)[i]);
      ++freq[s.tokens[i].norm];
    }
  for (const auto& s : dev)
    for (const auto& t : *s.tags) tags.push_back(t);
  NeuralModel m = init_neural(words, tags, cfg);

  ad::AdamOptions adam;
  adam.lr = cfg.lr;
  long step = 0;
  NeuralModel best = m;
  double best_acc = -1;
  std::vector<std::size_t> idx(fit.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    rng.shuffle(idx);
    for (std::size_t n : idx) {
      const auto& s = fit[n];
      auto ids = detail::encode(m, s.norms());
      for (std::size_t i = 0; i < ids.size(); ++i)
        if (freq[s.tokens[i].norm] == 1 && rng.bernoulli(cfg.unk_replace)) ids[i] = 0;
      for (auto* p : m.params()) p->zero_grad();
      ad::Tape t;
      t.backward(detail::build_loss(t, m, ids, detail::gold_ids(m, s)));
      ad::adam_step(m.params(), adam, ++step);
    }
    rep.train_loss.push_back(neural_loss(m, fit));
    if (!dev.empty()) {
      const double acc = neural_accuracy(m, dev);
      rep.dev_accuracy.push_back(acc);
      if (acc > best_acc) {
        best_acc = acc;
        best = m;
        rep.best_epoch = epoch;
      }
    }
  }
  if (dev.empty()) {
    best = std::move(m);
    rep.best_epoch = cfg.max_epochs;
  }
  if (report) *report = std::move(rep);
  return best;
}

// ---------------------------------------------------------------------------
// Checkpoints

/// Format:
///   glossa-neural 1
///   config <E> <H> <D> <lr> <max_epochs> <dev_size> <seed> <unk_replace>
///   tags <tag>...
///   vocab <n>, then n words, one per line
///   P <rows> <cols>, then one line of values per column
inline void save_neural(std::ostream& out, const NeuralModel& m) {
  const auto& c = m.cfg;
  out << "glossa-neural\t1\nconfig\t" << c.embed_dim << '\t' << c.hidden_dim << '\t' << c.tag_dim << '\t'
      << detail::format_double(c.lr) << '\t' << c.max_epochs << '\t' << c.dev_size << '\t' << c.seed << '\t'
      << detail::format_double(c.unk_replace) << "\ntags";
  for (const auto& t : m.tagset) out << '\t' << t.str();
  out << "\nvocab\t" << m.vocab.size() << '\n';
  for (const auto& w : m.vocab) out << w << '\n';
  for (const auto* p : m.params()) {
    out << "P\t" << p->value.rows() << '\t' << p->value.cols() << '\n';
    for (Eigen::Index j = 0; j < p->value.cols(); ++j) {
      for (Eigen::Index i = 0; i < p->value.rows(); ++i) out << (i ? "\t" : "") << detail::format_double(p->value(i, j));
      out << '\n';
    }
  }
}

inline NeuralModel load_neural(std::istream& in) {
  std::string line;
  auto next = [&] {
    if (!std::getline(in, line)) throw ParseError("neural checkpoint truncated");
    return detail::split_tabs(line);
  };
  if (!std::getline(in, line) || line != "glossa-neural\t1") throw ParseError("not a glossa neural checkpoint");
  NeuralModel m;
  auto cols = next();
  if (cols.size() != 9 || cols[0] != "config") throw ParseError("neural checkpoint: bad config line");
  m.cfg.embed_dim = std::stoi(cols[1]);
  m.cfg.hidden_dim = std::stoi(cols[2]);
  m.cfg.tag_dim = std::stoi(cols[3]);
  m.cfg.lr = detail::parse_double(cols[4]);
  m.cfg.max_epochs = std::stoi(cols[5]);
  m.cfg.dev_size = std::stoi(cols[6]);
  m.cfg.seed = std::stoull(cols[7]);
  m.cfg.unk_replace = detail::parse_double(cols[8]);
  cols = next();
  if (cols.empty() || cols[0] != "tags") throw ParseError("neural checkpoint: bad tags line");
  for (std::size_t i = 1; i < cols.size(); ++i) m.tagset.push_back(parse_tag(cols[i]));
  cols = next();
  if (cols.size() != 2 || cols[0] != "vocab") throw ParseError("neural checkpoint: bad vocab line");
  const auto n = std::stoul(cols[1]);
  for (std::size_t i = 0; i < n; ++i) {
    next();
    m.word_index[line] = static_cast<int>(m.vocab.size());
    m.vocab.push_back(line);
  }
  for (auto* p : m.params()) {
    cols = next();
    if (cols.size() != 3 || cols[0] != "P") throw ParseError("neural checkpoint: bad parameter header");
    *p = ad::Parameter(std::stol(cols[1]), std::stol(cols[2]));
    for (Eigen::Index j = 0; j < p->value.cols(); ++j) {
      cols = next();
      if (static_cast<Eigen::Index>(cols.size()) != p->value.rows()) throw ParseError("neural checkpoint: bad row");
      for (Eigen::Index i = 0; i < p->value.rows(); ++i) p->value(i, j) = detail::parse_double(cols[static_cast<std::size_t>(i)]);
    }
  }
  return m;
}

inline void save_neural(const std::filesystem::path& path, const NeuralModel& m) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  save_neural(out, m);
}

inline NeuralModel load_neural(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return load_neural(in);
}

}  // namespace glossa
