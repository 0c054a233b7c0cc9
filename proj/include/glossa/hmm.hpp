#pragma once

// First-order HMM tagger with emissions constrained by a tag dictionary:
// smoothed supervised estimates, EM on raw text, interpolation.

#include <Eigen/Dense>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "glossa/corpus.hpp"
#include "glossa/dictionary.hpp"
#include "glossa/errors.hpp"
#include "glossa/serialize.hpp"
#include "glossa/tag.hpp"

namespace glossa {

inline constexpr std::string_view kUnkWord = "<unk>";

struct HmmConfig {
  double smoothing = 0.1;
  double lambda = 0.7;  // weight of the supervised model after EM
  int em_iters = 10;

  void validate() const {
    if (!(smoothing > 0)) throw InvalidConfig("HMM smoothing must be positive");
    if (!(lambda >= 0 && lambda <= 1)) throw InvalidConfig("HMM lambda must lie in [0, 1]");
    if (em_iters < 0) throw InvalidConfig("HMM em_iters must be >= 0");
  }
};

struct HmmModel {
  std::vector<Tag> tagset;
  /// vocab[0] is the unknown word.
  std::vector<std::string> vocab;
  std::unordered_map<std::string, int> word_index;
  /// (K+1) x (K+1); row K is START, column K is STOP.
  Eigen::MatrixXd trans;
  /// K x |vocab|.
  Eigen::MatrixXd emit;
  TagDictionary dictionary;

  int num_tags() const { return static_cast<int>(tagset.size()); }
  int start() const { return num_tags(); }
  int stop() const { return num_tags(); }

  int word_id(const std::string& w) const {
    auto it = word_index.find(w);
    return it == word_index.end() ? 0 : it->second;
  }

  std::vector<int> word_ids(const std::vector<std::string>& words) const {
    std::vector<int> ids;
    ids.reserve(words.size());
    for (const auto& w : words) ids.push_back(word_id(w));
    return ids;
  }

  int tag_index(const Tag& t) const {
    auto it = std::lower_bound(tagset.begin(), tagset.end(), t);
    return it != tagset.end() && *it == t ? static_cast<int>(it - tagset.begin()) : -1;
  }
};

namespace detail {

inline void add_word(HmmModel& m, const std::string& w) {
  if (m.word_index.emplace(w, static_cast<int>(m.vocab.size())).second) m.vocab.push_back(w);
}

/// Emission support: dictionary tags for dictionary words, every tag for
/// other known words; open-class tags and composites seen in the annotated
/// data for the unknown word.
inline Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> emission_support(const HmmModel& m,
                                                                         const std::set<Tag>& seen_composites) {
  const int K = m.num_tags();
  const auto V = static_cast<Eigen::Index>(m.vocab.size());
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> ok(K, V);
  ok.setConstant(true);
  bool any_unk = false;
  for (int k = 0; k < K; ++k) {
    const Tag& t = m.tagset[static_cast<std::size_t>(k)];
    ok(k, 0) = is_open_class(t) || seen_composites.count(t) > 0;
    any_unk = any_unk || ok(k, 0);
  }
  if (!any_unk) ok.col(0).setConstant(true);
  for (Eigen::Index w = 1; w < V; ++w) {
    const auto& word = m.vocab[static_cast<std::size_t>(w)];
    if (!m.dictionary.contains(word)) continue;
    for (int k = 0; k < K; ++k) ok(k, w) = m.dictionary.allows(word, m.tagset[static_cast<std::size_t>(k)]);
  }
  return ok;
}

struct ScaledPass {
  Eigen::MatrixXd alpha, beta;  // T x K, scaled
  std::vector<double> scale;    // per position, plus the STOP factor last
  double log_prob = -std::numeric_limits<double>::infinity();
};

inline ScaledPass forward_backward(const HmmModel& m, const std::vector<int>& ids, bool with_beta) {
  const int K = m.num_tags();
  const auto T = static_cast<Eigen::Index>(ids.size());
  ScaledPass p;
  p.alpha.resize(T, K);
  for (Eigen::Index t = 0; t < T; ++t) {
    for (int k = 0; k < K; ++k) {
      double prev = 0;
      if (t == 0) {
        prev = m.trans(m.start(), k);
      } else {
        for (int j = 0; j < K; ++j) prev += p.alpha(t - 1, j) * m.trans(j, k);
      }
      p.alpha(t, k) = prev * m.emit(k, ids[static_cast<std::size_t>(t)]);
    }
    const double c = p.alpha.row(t).sum();
    if (!(c > 0)) return p;
    p.alpha.row(t) /= c;
    p.scale.push_back(c);
  }
  double fin = 0;
  for (int k = 0; k < K; ++k) fin += p.alpha(T - 1, k) * m.trans(k, m.stop());
  if (!(fin > 0)) return p;
  p.scale.push_back(fin);
  p.log_prob = 0;
  for (double c : p.scale) p.log_prob += std::log(c);
  if (!with_beta) return p;
  p.beta.resize(T, K);
  for (int k = 0; k < K; ++k) p.beta(T - 1, k) = m.trans(k, m.stop()) / fin;
  for (Eigen::Index t = T - 2; t >= 0; --t)
    for (int j = 0; j < K; ++j) {
      double s = 0;
      for (int k = 0; k < K; ++k) s += m.trans(j, k) * m.emit(k, ids[static_cast<std::size_t>(t + 1)]) * p.beta(t + 1, k);
      p.beta(t, j) = s / p.scale[static_cast<std::size_t>(t + 1)];
    }
  return p;
}

}  // namespace detail

/// log P(words) under the model (forward algorithm); 0 for an empty input.
inline double hmm_log_likelihood(const HmmModel& m, const std::vector<std::string>& words) {
  if (words.empty()) return 0.0;
  return detail::forward_backward(m, m.word_ids(words), false).log_prob;
}

/// Posterior tag marginals, T x K.
inline Eigen::MatrixXd hmm_posteriors(const HmmModel& m, const std::vector<std::string>& words) {
  if (words.empty()) return Eigen::MatrixXd(0, m.num_tags());
  const auto p = detail::forward_backward(m, m.word_ids(words), true);
  if (!std::isfinite(p.log_prob)) return Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(words.size()), m.num_tags());
  return p.alpha.cwiseProduct(p.beta);
}

/// Viterbi indices; ties go to the lowest tag index.
inline std::vector<int> viterbi_hmm(const HmmModel& m, const std::vector<std::string>& words) {
  const int K = m.num_tags();
  const auto T = words.size();
  if (T == 0) return {};
  const auto ids = m.word_ids(words);
  const double ninf = -std::numeric_limits<double>::infinity();
  auto lg = [](double x) { return x > 0 ? std::log(x) : -std::numeric_limits<double>::infinity(); };
  std::vector<std::vector<double>> delta(T, std::vector<double>(static_cast<std::size_t>(K), ninf));
  std::vector<std::vector<int>> back(T, std::vector<int>(static_cast<std::size_t>(K), 0));
  for (int k = 0; k < K; ++k) delta[0][static_cast<std::size_t>(k)] = lg(m.trans(m.start(), k)) + lg(m.emit(k, ids[0]));
  for (std::size_t t = 1; t < T; ++t)
    for (int k = 0; k < K; ++k) {
      double best = ninf;
      int arg = 0;
      for (int j = 0; j < K; ++j) {
        const double s = delta[t - 1][static_cast<std::size_t>(j)] + lg(m.trans(j, k));
        if (s > best) {
          best = s;
          arg = j;
        }
      }
      delta[t][static_cast<std::size_t>(k)] = best + lg(m.emit(k, ids[t]));
      back[t][static_cast<std::size_t>(k)] = arg;
    }
  double best = ninf;
  int arg = 0;
  for (int k = 0; k < K; ++k) {
    const double s = delta[T - 1][static_cast<std::size_t>(k)] + lg(m.trans(k, m.stop()));
    if (s > best) {
      best = s;
      arg = k;
    }
  }
  std::vector<int> path(T);
  path[T - 1] = arg;
  for (std::size_t t = T - 1; t > 0; --t) path[t - 1] = back[t][static_cast<std::size_t>(path[t])];
  return path;
}

inline std::vector<Tag> decode_hmm(const HmmModel& m, const std::vector<std::string>& words) {
  std::vector<Tag> out;
  for (int k : viterbi_hmm(m, words)) out.push_back(m.tagset[static_cast<std::size_t>(k)]);
  return out;
}

inline std::vector<Tag> decode_hmm(const HmmModel& m, const Sentence& s) { return decode_hmm(m, s.norms()); }

// ---------------------------------------------------------------------------
// Training

/// Add-`smoothing` estimates from the annotated sentences over the
/// dictionary-constrained support.
inline HmmModel supervised_hmm(const std::vector<Sentence>& annotated, const TagDictionary& dict,
                               const std::vector<std::vector<std::string>>& mono = {}, const HmmConfig& cfg = {}) {
  cfg.validate();
  std::vector<const Sentence*> data;
  for (const auto& s : annotated)
    if (!s.excluded && !s.empty() && s.tagged()) data.push_back(&s);
  if (data.empty()) throw NoAnnotatedData("HMM needs tagged sentences");

  HmmModel m;
  m.dictionary = dict;
  std::set<Tag> tags;
  std::set<Tag> composites;
  std::unordered_map<std::string, long> freq;
  for (const auto* s : data)
    for (std::size_t i = 0; i < s->size(); ++i) {
      const Tag& t = (*s->tags)[i];
      tags.insert(t);
      if (!t.is_atomic()) composites.insert(t);
      m.dictionary.add(s->tokens[i].norm, t, Provenance::gold, 0);
      ++freq[s->tokens[i].norm];
    }
  for (const auto& t : dict.tagset()) tags.insert(t);
  m.tagset.assign(tags.begin(), tags.end());
  const int K = m.num_tags();

  std::set<std::string> words;
  for (const auto& [w, _] : freq) words.insert(w);
  for (const auto& s : mono) words.insert(s.begin(), s.end());
  for (const auto& [w, _] : dict.all()) words.insert(w);
  words.erase(std::string(kUnkWord));
  detail::add_word(m, std::string(kUnkWord));
  for (const auto& w : words) detail::add_word(m, w);
  const auto V = static_cast<Eigen::Index>(m.vocab.size());

  const auto ok = detail::emission_support(m, composites);
  Eigen::MatrixXd tc = Eigen::MatrixXd::Zero(K + 1, K + 1);
  Eigen::MatrixXd ec = Eigen::MatrixXd::Zero(K, V);
  for (const auto* s : data) {
    int prev = m.start();
    for (std::size_t i = 0; i < s->size(); ++i) {
      const int k = m.tag_index((*s->tags)[i]);
      tc(prev, k) += 1;
      const auto& w = s->tokens[i].norm;
      ec(k, m.word_id(w)) += 1;
      if (freq[w] == 1 && ok(k, 0)) ec(k, 0) += 1;  // hapaxes stand in for unknown words
      prev = k;
    }
    tc(prev, m.stop()) += 1;
  }

  m.trans = Eigen::MatrixXd::Zero(K + 1, K + 1);
  for (int i = 0; i <= K; ++i) {
    double z = 0;
    for (int j = 0; j <= K; ++j) {
      if (i == m.start() && j == m.stop()) continue;
      z += m.trans(i, j) = tc(i, j) + cfg.smoothing;
    }
    m.trans.row(i) /= z;
  }
  m.emit = Eigen::MatrixXd::Zero(K, V);
  for (int k = 0; k < K; ++k) {
    double z = 0;
    for (Eigen::Index w = 0; w < V; ++w)
      if (ok(k, w)) z += m.emit(k, w) = ec(k, w) + cfg.smoothing;
    m.emit.row(k) /= z;
  }
  return m;
}

struct HmmTrainReport {
  /// Log-likelihood of the raw text before each EM iteration and after the
  /// last one.
  std::vector<double> ll_history;
};

/// One EM iteration over `ids` (pure maximum likelihood; the unknown-word
/// column keeps its mass). Returns the log-likelihood before the update.
inline double em_step(HmmModel& m, const std::vector<std::vector<int>>& ids) {
  const int K = m.num_tags();
  Eigen::MatrixXd tc = Eigen::MatrixXd::Zero(K + 1, K + 1);
  Eigen::MatrixXd ec = Eigen::MatrixXd::Zero(K, m.emit.cols());
  double ll = 0;
  for (const auto& s : ids) {
    const auto p = detail::forward_backward(m, s, true);
    if (!std::isfinite(p.log_prob)) continue;
    ll += p.log_prob;
    const auto T = static_cast<Eigen::Index>(s.size());
    for (Eigen::Index t = 0; t < T; ++t) {
      for (int k = 0; k < K; ++k) ec(k, s[static_cast<std::size_t>(t)]) += p.alpha(t, k) * p.beta(t, k);
      if (t + 1 == T) continue;
      const int w = s[static_cast<std::size_t>(t + 1)];
      const double c = p.scale[static_cast<std::size_t>(t + 1)];
      for (int j = 0; j < K; ++j)
        for (int k = 0; k < K; ++k) tc(j, k) += p.alpha(t, j) * m.trans(j, k) * m.emit(k, w) * p.beta(t + 1, k) / c;
    }
    for (int k = 0; k < K; ++k) {
      tc(m.start(), k) += p.alpha(0, k) * p.beta(0, k);
      tc(k, m.stop()) += p.alpha(T - 1, k) * p.beta(T - 1, k);
    }
  }
  for (int i = 0; i <= K; ++i) {
    const double z = tc.row(i).sum();
    if (z > 0) m.trans.row(i) = tc.row(i) / z;
  }
  for (int k = 0; k < K; ++k) {
    const double z = ec.row(k).sum() - ec(k, 0);
    if (!(z > 0)) continue;
    const double keep = m.emit(k, 0);
    m.emit.row(k) = ec.row(k) * ((1.0 - keep) / z);
    m.emit(k, 0) = keep;
  }
  return ll;
}

/// Supervised start, EM on `mono`, then interpolation with the supervised
/// model.
inline HmmModel train_semisup_hmm(const std::vector<std::vector<std::string>>& mono,
                                  const std::vector<Sentence>& annotated, const TagDictionary& dict,
                                  const HmmConfig& cfg = {}, HmmTrainReport* report = nullptr) {
  if (dict.empty()) throw EmptyDictionary("constrained EM needs a tag dictionary");
  const HmmModel sup = supervised_hmm(annotated, dict, mono, cfg);
  if (cfg.em_iters == 0) return sup;
  std::vector<std::vector<int>> ids;
  for (const auto& s : mono)
    if (!s.empty()) ids.push_back(sup.word_ids(s));
  HmmModel em = sup;
  std::vector<double> history;
  for (int it = 0; it < cfg.em_iters; ++it) history.push_back(em_step(em, ids));
  double ll = 0;
  for (const auto& s : ids) {
    const auto p = detail::forward_backward(em, s, false);
    if (std::isfinite(p.log_prob)) ll += p.log_prob;
  }
  history.push_back(ll);
  if (report) report->ll_history = std::move(history);

  HmmModel out = sup;
  out.trans = cfg.lambda * sup.trans + (1.0 - cfg.lambda) * em.trans;
  out.emit = cfg.lambda * sup.emit + (1.0 - cfg.lambda) * em.emit;
  return out;
}

// ---------------------------------------------------------------------------
// Serialization

/// Format:
///   glossa-hmm 1
///   tags <tag>...
///   vocab <n>, then n words, one per line (first is the unknown word)
///   T <row of K+1 values>            (K+1 rows)
///   E <tag index> <word index> <p>   (non-zero emissions)
///   D <type> <tag> <provenance> <votes>
inline void save_hmm(std::ostream& out, const HmmModel& m) {
  out << "glossa-hmm\t1\ntags";
  for (const auto& t : m.tagset) out << '\t' << t.str();
  out << "\nvocab\t" << m.vocab.size() << '\n';
  for (const auto& w : m.vocab) out << w << '\n';
  for (Eigen::Index i = 0; i < m.trans.rows(); ++i) {
    out << 'T';
    for (Eigen::Index j = 0; j < m.trans.cols(); ++j) out << '\t' << detail::format_double(m.trans(i, j));
    out << '\n';
  }
  for (Eigen::Index k = 0; k < m.emit.rows(); ++k)
    for (Eigen::Index w = 0; w < m.emit.cols(); ++w)
      if (m.emit(k, w) != 0.0) out << "E\t" << k << '\t' << w << '\t' << detail::format_double(m.emit(k, w)) << '\n';
  for (const auto& [type, entries] : m.dictionary.all())
    for (const auto& e : entries)
      out << "D\t" << type << '\t' << e.tag.str() << '\t' << to_string(e.provenance) << '\t' << e.votes << '\n';
}

inline HmmModel load_hmm(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "glossa-hmm\t1") throw ParseError("not a glossa HMM file");
  HmmModel m;
  std::getline(in, line);
  auto cols = detail::split_tabs(line);
  if (cols.empty() || cols[0] != "tags") throw ParseError("HMM file: expected tags line");
  for (std::size_t i = 1; i < cols.size(); ++i) m.tagset.push_back(parse_tag(cols[i]));
  std::getline(in, line);
  cols = detail::split_tabs(line);
  if (cols.size() != 2 || cols[0] != "vocab") throw ParseError("HMM file: expected vocab line");
  const auto n = std::stoul(cols[1]);
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line)) throw ParseError("HMM file: truncated vocabulary");
    detail::add_word(m, line);
  }
  const int K = m.num_tags();
  m.trans = Eigen::MatrixXd::Zero(K + 1, K + 1);
  m.emit = Eigen::MatrixXd::Zero(K, static_cast<Eigen::Index>(m.vocab.size()));
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    cols = detail::split_tabs(line);
    if (cols[0] == "T") {
      if (row > K || static_cast<int>(cols.size()) != K + 2) throw ParseError("HMM file: bad transition row");
      for (int j = 0; j <= K; ++j) m.trans(row, j) = detail::parse_double(cols[static_cast<std::size_t>(j + 1)]);
      ++row;
    } else if (cols[0] == "E" && cols.size() == 4) {
      m.emit(std::stol(cols[1]), std::stol(cols[2])) = detail::parse_double(cols[3]);
    } else if (cols[0] == "D" && cols.size() == 5) {
      m.dictionary.add(cols[1], parse_tag(cols[2]), parse_provenance(cols[3]), std::stoi(cols[4]));
    } else {
      throw ParseError("HMM file: unexpected line '" + line + "'");
    }
  }
  if (row != K + 1) throw ParseError("HMM file: missing transition rows");
  return m;
}

inline void save_hmm(const std::filesystem::path& path, const HmmModel& m) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  save_hmm(out, m);
}

inline HmmModel load_hmm(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return load_hmm(in);
}

}  // namespace glossa
