#pragma once

// Tag-dictionary expansion: a type/context graph over monolingual text and
// Modified Adsorption label propagation from seeded types.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "glossa/dictionary.hpp"
#include "glossa/errors.hpp"
#include "glossa/text.hpp"

namespace glossa {

struct PropagationConfig {
  double mu1 = 1.0;   // injection
  double mu2 = 0.01;  // continuation
  double mu3 = 0.01;  // abandonment
  int max_iters = 50;
  double tol = 1e-6;
  int min_type_freq = 2;
  std::size_t max_suffix = 3;
  /// Seed strength (scales the injection probability) by provenance.
  double gold_confidence = 1.0;
  double projected_confidence = 1.0;
  double propagated_confidence = 1.0;

  void validate() const {
    if (!(mu1 > 0 && mu2 > 0 && mu3 > 0)) throw InvalidConfig("propagation needs mu1, mu2, mu3 > 0");
    if (max_iters < 1 || !(tol > 0)) throw InvalidConfig("propagation needs max_iters >= 1 and tol > 0");
    for (double c : {gold_confidence, projected_confidence, propagated_confidence})
      if (!(c > 0 && c <= 1)) throw InvalidConfig("seed confidence must lie in (0, 1]");
  }
};

class LabelGraph {
 public:
  enum class Kind { type, feature };

  explicit LabelGraph(std::vector<Tag> labels = {}) : labels_(std::move(labels)) {}

  std::size_t add_node(const std::string& name, Kind kind) {
    auto& idx = kind == Kind::type ? types_ : features_;
    auto [it, inserted] = idx.emplace(name, names_.size());
    if (inserted) {
      names_.push_back(name);
      kinds_.push_back(kind);
      adj_.emplace_back();
    }
    return it->second;
  }

  /// Undirected edge; weights of repeated edges add up.
  void add_edge(std::size_t a, std::size_t b, double w) {
    if (a == b) throw InvalidConfig("label graph has no self-loops");
    if (!(w > 0)) throw InvalidConfig("label graph edge weights must be positive");
    auto bump = [&](std::size_t from, std::size_t to) {
      for (auto& [n, x] : adj_[from])
        if (n == to) {
          x += w;
          return;
        }
      adj_[from].emplace_back(to, w);
    };
    bump(a, b);
    bump(b, a);
  }

  /// Seed over `labels()`; must sum to 1.
  void set_seed(std::size_t node, std::vector<double> dist, double confidence = 1.0) {
    if (dist.size() != labels_.size()) throw LengthMismatch("seed distribution size differs from label count");
    double s = 0;
    for (double p : dist) s += p;
    if (std::abs(s - 1.0) > 1e-9) throw InvalidConfig("seed distribution must sum to 1");
    seeds_[node] = {std::move(dist), confidence};
  }

  std::optional<std::size_t> type_node(const std::string& w) const {
    auto it = types_.find(w);
    return it == types_.end() ? std::nullopt : std::optional(it->second);
  }
  std::optional<std::size_t> feature_node(const std::string& f) const {
    auto it = features_.find(f);
    return it == features_.end() ? std::nullopt : std::optional(it->second);
  }

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t v) const { return names_[v]; }
  Kind kind(std::size_t v) const { return kinds_[v]; }
  const std::vector<std::pair<std::size_t, double>>& neighbors(std::size_t v) const { return adj_[v]; }
  const std::vector<Tag>& labels() const { return labels_; }

  struct Seed {
    std::vector<double> dist;
    double confidence = 1.0;
  };
  const std::map<std::size_t, Seed>& seeds() const { return seeds_; }
  bool seeded(std::size_t v) const { return seeds_.count(v) > 0; }

  /// Nodes reachable from `v` (including v).
  std::set<std::size_t> component(std::size_t v) const {
    std::set<std::size_t> seen{v};
    std::vector<std::size_t> stack{v};
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (const auto& [n, _] : adj_[u])
        if (seen.insert(n).second) stack.push_back(n);
    }
    return seen;
  }

 private:
  std::vector<Tag> labels_;
  std::vector<std::string> names_;
  std::vector<Kind> kinds_;
  std::vector<std::vector<std::pair<std::size_t, double>>> adj_;
  std::unordered_map<std::string, std::size_t> types_, features_;
  std::map<std::size_t, Seed> seeds_;
};

inline double seed_confidence(const std::vector<DictEntry>& entries, const PropagationConfig& cfg) {
  double c = 0.0;
  for (const auto& e : entries)
    c = std::max(c, e.provenance == Provenance::gold        ? cfg.gold_confidence
                    : e.provenance == Provenance::projected ? cfg.projected_confidence
                                                            : cfg.propagated_confidence);
  return c;
}

/// Context features of position i: neighbouring words and suffixes.
inline std::vector<std::string> context_features(const std::vector<std::string>& words, std::size_t i,
                                                 std::size_t max_suffix = 3) {
  std::vector<std::string> out;
  out.push_back("prev=" + (i == 0 ? std::string("<s>") : words[i - 1]));
  out.push_back("next=" + (i + 1 == words.size() ? std::string("</s>") : words[i + 1]));
  const auto cps = utf8::decode(words[i]);
  for (std::size_t k = 1; k <= std::min(max_suffix, cps.size()); ++k)
    out.push_back("suf" + std::to_string(k) + "=" + utf8::encode(cps.substr(cps.size() - k)));
  return out;
}

/// Type nodes for frequent (or seeded) types, context-feature nodes, and
/// PMI-weighted type-feature edges (PMI clipped at 0; zero edges dropped).
inline LabelGraph build_label_graph(const std::vector<std::vector<std::string>>& mono, const TagDictionary& seeds,
                                    const PropagationConfig& cfg = {}) {
  cfg.validate();
  std::size_t tokens = 0;
  std::unordered_map<std::string, long> freq;
  for (const auto& s : mono)
    for (const auto& w : s) {
      ++freq[w];
      ++tokens;
    }
  if (tokens == 0) throw EmptyCorpus("label graph needs monolingual text");

  auto is_node = [&](const std::string& w) {
    const auto it = freq.find(w);
    const long f = it == freq.end() ? 0 : it->second;
    return f >= cfg.min_type_freq || (f >= 1 && seeds.contains(w));
  };
  std::map<std::pair<std::string, std::string>, double> joint;
  std::unordered_map<std::string, double> type_mass, feat_mass;
  double total = 0;
  for (const auto& s : mono)
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (!is_node(s[i])) continue;
      for (auto& f : context_features(s, i, cfg.max_suffix)) {
        joint[{s[i], f}] += 1;
        type_mass[s[i]] += 1;
        feat_mass[f] += 1;
        total += 1;
      }
    }

  LabelGraph g(seeds.tagset());
  std::set<std::string> node_types;
  for (const auto& [w, f] : freq)
    if (is_node(w)) node_types.insert(w);
  for (const auto& w : node_types) g.add_node(w, LabelGraph::Kind::type);
  for (const auto& [key, c] : joint) {
    const double pmi = std::log(c * total / (type_mass[key.first] * feat_mass[key.second]));
    if (pmi <= 0) continue;
    const auto f = g.add_node(key.second, LabelGraph::Kind::feature);
    g.add_edge(*g.type_node(key.first), f, pmi);
  }

  const auto& labels = g.labels();
  for (const auto& w : node_types) {
    if (!seeds.contains(w)) continue;
    std::vector<double> dist(labels.size(), 0.0);
    const auto& entries = seeds.entries(w);
    for (const auto& e : entries) {
      const auto k = static_cast<std::size_t>(std::lower_bound(labels.begin(), labels.end(), e.tag) - labels.begin());
      dist[k] = 1.0 / static_cast<double>(entries.size());
    }
    g.set_seed(*g.type_node(w), std::move(dist), seed_confidence(entries, cfg));
  }
  return g;
}

struct PropagationResult {
  /// Per node, a distribution over graph.labels(); empty when no label mass
  /// reached the node.
  std::vector<std::vector<double>> dist;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Synchronous Modified Adsorption. Abandonment mass goes to a dummy label
/// that is dropped before the outputs are renormalized.
inline PropagationResult propagate(const LabelGraph& g, const PropagationConfig& cfg = {}) {
  cfg.validate();
  if (g.seeds().empty()) throw NoSeeds("label propagation needs at least one seeded node");
  const std::size_t L = g.labels().size();
  const std::size_t n = g.size();
  std::vector<std::vector<double>> cur(n, std::vector<double>(L + 1, 0.0)), next = cur;
  std::vector<double> p_inj(n, 0.0), degree(n, 0.0);
  for (const auto& [v, s] : g.seeds()) {
    p_inj[v] = s.confidence;
    std::copy(s.dist.begin(), s.dist.end(), cur[v].begin());
  }
  for (std::size_t v = 0; v < n; ++v)
    for (const auto& [_, w] : g.neighbors(v)) degree[v] += w;

  PropagationResult res;
  for (res.iterations = 1; res.iterations <= cfg.max_iters; ++res.iterations) {
    res.residual = 0.0;
    for (std::size_t v = 0; v < n; ++v) {
      auto& out = next[v];
      std::fill(out.begin(), out.end(), 0.0);
      if (p_inj[v] > 0) {
        const auto& y = g.seeds().at(v).dist;
        for (std::size_t l = 0; l < L; ++l) out[l] += cfg.mu1 * p_inj[v] * y[l];
      }
      for (const auto& [u, w] : g.neighbors(v))
        for (std::size_t l = 0; l <= L; ++l) out[l] += cfg.mu2 * w * cur[u][l];
      out[L] += cfg.mu3 * (1.0 - 0.9 * p_inj[v]);
      const double den = cfg.mu1 * p_inj[v] + cfg.mu2 * degree[v] + cfg.mu3;
      double change = 0.0;
      for (std::size_t l = 0; l <= L; ++l) {
        out[l] /= den;
        change += std::abs(out[l] - cur[v][l]);
      }
      res.residual = std::max(res.residual, change);
    }
    cur.swap(next);
    if (res.residual < cfg.tol) {
      res.converged = true;
      break;
    }
  }
  res.iterations = std::min(res.iterations, cfg.max_iters);

  res.dist.resize(n);
  for (std::size_t v = 0; v < n; ++v) {
    double z = 0;
    for (std::size_t l = 0; l < L; ++l) z += cur[v][l];
    if (z <= 0) continue;
    res.dist[v].resize(L);
    for (std::size_t l = 0; l < L; ++l) res.dist[v][l] = cur[v][l] / z;
  }
  return res;
}

/// `existing` plus, for each unseeded type node, every label with
/// probability >= keep_threshold (provenance propagated).
inline TagDictionary expand_dictionary(const LabelGraph& g, const PropagationResult& r, double keep_threshold,
                                       const TagDictionary& existing) {
  TagDictionary out = existing;
  for (std::size_t v = 0; v < g.size(); ++v) {
    if (g.kind(v) != LabelGraph::Kind::type || g.seeded(v) || existing.contains(g.name(v))) continue;
    for (std::size_t l = 0; l < r.dist[v].size(); ++l)
      if (r.dist[v][l] >= keep_threshold) out.add(g.name(v), g.labels()[l], Provenance::propagated);
  }
  return out;
}

/// Seeds for propagation: gold entries, plus projected entries for types
/// without gold tags.
inline TagDictionary combine_seeds(const TagDictionary& gold, const TagDictionary& projected) {
  TagDictionary out = gold;
  for (const auto& [type, entries] : projected.all())
    if (!gold.contains(type))
      for (const auto& e : entries) out.add(type, e.tag, e.provenance, e.votes);
  return out;
}

struct ExpansionReport {
  std::size_t nodes = 0;
  std::size_t seeded = 0;
  std::size_t added_types = 0;
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
};

/// Graph construction, propagation and expansion in one step.
inline TagDictionary expand_with_propagation(const std::vector<std::vector<std::string>>& mono,
                                             const TagDictionary& seeds, const PropagationConfig& cfg = {},
                                             double keep_threshold = 0.1, ExpansionReport* report = nullptr) {
  if (seeds.empty()) throw NoSeeds("dictionary expansion needs seed types");
  const auto g = build_label_graph(mono, seeds, cfg);
  if (g.seeds().empty()) return seeds;
  const auto r = propagate(g, cfg);
  auto out = expand_dictionary(g, r, keep_threshold, seeds);
  if (report) {
    report->nodes = g.size();
    report->seeded = g.seeds().size();
    report->added_types = out.size() - seeds.size();
    report->iterations = r.iterations;
    report->residual = r.residual;
    report->converged = r.converged;
  }
  return out;
}

}  // namespace glossa
