#pragma once

// IBM Model 1 word alignment (Griko given Italian, with an Italian NULL
// word) and per-token link extraction.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "glossa/corpus.hpp"
#include "glossa/errors.hpp"
#include "glossa/serialize.hpp"

namespace glossa {

struct SentencePair {
  std::vector<std::string> griko;
  std::vector<std::string> italian;
};

inline constexpr std::string_view kNullWord = "<null>";

class AlignmentModel {
 public:
  /// t(griko | italian); 0 for pairs that never co-occurred.
  double prob(const std::string& griko, const std::string& italian) const {
    auto f = griko_index_.find(griko);
    auto e = italian_index_.find(italian);
    if (f == griko_index_.end() || e == italian_index_.end()) return 0.0;
    return prob(e->second, f->second);
  }

  double prob_null(const std::string& griko) const { return prob(griko, std::string(kNullWord)); }

  long griko_frequency(const std::string& w) const {
    auto it = griko_index_.find(w);
    return it == griko_index_.end() ? 0 : griko_freq_[static_cast<std::size_t>(it->second)];
  }
  long italian_frequency(const std::string& w) const {
    auto it = italian_index_.find(w);
    return it == italian_index_.end() || it->second == 0 ? 0 : italian_freq_[static_cast<std::size_t>(it->second)];
  }

  const std::vector<std::string>& griko_vocab() const { return griko_vocab_; }
  /// Index 0 is the NULL word.
  const std::vector<std::string>& italian_vocab() const { return italian_vocab_; }

  /// sum_f t(f | e) for Italian word `e` (1 after training for every seen e).
  double row_sum(const std::string& italian) const {
    auto e = italian_index_.find(italian);
    if (e == italian_index_.end()) return 0.0;
    double s = 0.0;
    for (const auto& [key, p] : t_)
      if (static_cast<int>(key >> 32) == e->second) s += p;
    return s;
  }

 private:
  friend class Ibm1Trainer;

  static std::uint64_t key(int e, int f) {
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(e)) << 32) | static_cast<std::uint32_t>(f);
  }
  double prob(int e, int f) const {
    auto it = t_.find(key(e, f));
    return it == t_.end() ? 0.0 : it->second;
  }

  std::vector<std::string> griko_vocab_, italian_vocab_;
  std::unordered_map<std::string, int> griko_index_, italian_index_;
  std::vector<long> griko_freq_, italian_freq_;
  std::unordered_map<std::uint64_t, double> t_;
};

class Ibm1Trainer {
 public:
  /// EM from a uniform start. `log_likelihood`, when given, receives
  /// iters + 1 values: the corpus log-likelihood before each iteration and
  /// after the last one.
  static AlignmentModel train(const std::vector<SentencePair>& pairs, int iters,
                              std::vector<double>* log_likelihood = nullptr) {
    if (pairs.empty()) throw EmptyCorpus("IBM1 needs at least one sentence pair");
    if (iters < 1) throw InvalidConfig("IBM1 needs at least one iteration");
    AlignmentModel m;
    m.italian_vocab_.emplace_back(kNullWord);
    m.italian_index_.emplace(std::string(kNullWord), 0);
    m.italian_freq_.push_back(0);

    std::vector<std::pair<std::vector<int>, std::vector<int>>> data;  // (f ids, e ids incl. NULL)
    data.reserve(pairs.size());
    for (const auto& p : pairs) {
      std::vector<int> fs, es{0};
      for (const auto& w : p.griko) {
        auto [it, inserted] = m.griko_index_.emplace(w, static_cast<int>(m.griko_vocab_.size()));
        if (inserted) {
          m.griko_vocab_.push_back(w);
          m.griko_freq_.push_back(0);
        }
        ++m.griko_freq_[static_cast<std::size_t>(it->second)];
        fs.push_back(it->second);
      }
      for (const auto& w : p.italian) {
        auto [it, inserted] = m.italian_index_.emplace(w, static_cast<int>(m.italian_vocab_.size()));
        if (inserted) {
          m.italian_vocab_.push_back(w);
          m.italian_freq_.push_back(0);
        }
        ++m.italian_freq_[static_cast<std::size_t>(it->second)];
        es.push_back(it->second);
      }
      data.emplace_back(std::move(fs), std::move(es));
    }
    if (m.griko_vocab_.empty()) throw EmptyCorpus("IBM1 corpus has no Griko tokens");

    const double uniform = 1.0 / static_cast<double>(m.griko_vocab_.size());
    for (const auto& [fs, es] : data)
      for (int f : fs)
        for (int e : es) m.t_[AlignmentModel::key(e, f)] = uniform;

    std::vector<double> total(m.italian_vocab_.size());
    std::unordered_map<std::uint64_t, double> counts;
    counts.reserve(m.t_.size());
    for (int it = 0; it <= iters; ++it) {
      const bool final_pass = it == iters;
      double ll = 0.0;
      counts.clear();
      std::fill(total.begin(), total.end(), 0.0);
      for (const auto& [fs, es] : data) {
        const double log_len = std::log(static_cast<double>(es.size()));
        for (int f : fs) {
          double denom = 0.0;
          for (int e : es) denom += m.prob(e, f);
          ll += std::log(denom) - log_len;
          if (final_pass) continue;
          for (int e : es) {
            const double c = m.prob(e, f) / denom;
            counts[AlignmentModel::key(e, f)] += c;
            total[static_cast<std::size_t>(e)] += c;
          }
        }
      }
      if (log_likelihood) log_likelihood->push_back(ll);
      if (final_pass) break;
      for (auto& [k, p] : m.t_) {
        const auto c = counts.find(k);
        const double tot = total[static_cast<std::size_t>(k >> 32)];
        p = (c == counts.end() || tot <= 0.0) ? 0.0 : c->second / tot;
      }
    }
    return m;
  }
};

inline AlignmentModel train_ibm1(const std::vector<SentencePair>& pairs, int iters,
                                 std::vector<double>* log_likelihood = nullptr) {
  return Ibm1Trainer::train(pairs, iters, log_likelihood);
}

// ---------------------------------------------------------------------------
// Links

enum class ProbSource { posterior, lexical };

inline ProbSource parse_prob_source(std::string_view s) {
  if (s == "posterior") return ProbSource::posterior;
  if (s == "lexical") return ProbSource::lexical;
  throw InvalidConfig("prob_source must be posterior or lexical, got '" + std::string(s) + "'");
}

struct Link {
  std::size_t griko_pos = 0;
  std::size_t italian_pos = 0;
  double prob = 0.0;
  friend bool operator==(const Link&, const Link&) = default;
};

/// Posterior over the Italian positions for Griko token `j`:
/// t(f_j | e_i) normalized over the sentence's Italian tokens. All zero when
/// the token never co-occurred with any of them.
inline std::vector<double> link_posteriors(const AlignmentModel& m, const SentencePair& pair, std::size_t j) {
  std::vector<double> post(pair.italian.size());
  double z = 0.0;
  for (std::size_t i = 0; i < pair.italian.size(); ++i) z += post[i] = m.prob(pair.griko.at(j), pair.italian[i]);
  if (z > 0.0)
    for (auto& p : post) p /= z;
  return post;
}

/// Best Italian counterpart of each Griko token (ties: leftmost).
inline std::vector<Link> extract_links(const AlignmentModel& m, const SentencePair& pair,
                                       ProbSource source = ProbSource::posterior) {
  std::vector<Link> links;
  for (std::size_t j = 0; j < pair.griko.size(); ++j) {
    const auto post = link_posteriors(m, pair, j);
    std::size_t best = 0;
    for (std::size_t i = 1; i < post.size(); ++i)
      if (post[i] > post[best]) best = i;
    if (post.empty() || post[best] <= 0.0) continue;
    const double p = source == ProbSource::posterior ? post[best] : m.prob(pair.griko[j], pair.italian[best]);
    links.push_back({j, best, p});
  }
  return links;
}

// ---------------------------------------------------------------------------
// External alignments: one `i-j p` link per line (i = Griko position,
// j = Italian position, both 0-based); each sentence block is terminated by
// a blank line.

inline std::vector<std::vector<Link>> read_alignments(std::istream& in) {
  std::vector<std::vector<Link>> blocks;
  std::vector<Link> current;
  bool open = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) {
      blocks.push_back(std::move(current));
      current.clear();
      open = false;
      continue;
    }
    std::istringstream fields(line);
    std::string ij;
    double p = 0.0;
    const auto dash = [&] { return ij.find('-'); };
    if (!(fields >> ij >> p) || dash() == std::string::npos)
      throw ParseError("alignment line " + std::to_string(lineno) + ": expected `i-j p`");
    Link l;
    l.griko_pos = std::stoul(ij.substr(0, dash()));
    l.italian_pos = std::stoul(ij.substr(dash() + 1));
    l.prob = p;
    current.push_back(l);
    open = true;
  }
  if (open) blocks.push_back(std::move(current));
  return blocks;
}

inline void write_alignments(std::ostream& out, const std::vector<std::vector<Link>>& blocks) {
  for (const auto& block : blocks) {
    for (const auto& l : block)
      out << l.griko_pos << '-' << l.italian_pos << ' ' << detail::format_double(l.prob) << '\n';
    out << '\n';
  }
}

}  // namespace glossa
