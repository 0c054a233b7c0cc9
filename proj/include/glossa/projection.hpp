#pragma once

// Cross-lingual projection of Italian tags onto Griko types through
// high-confidence word alignments.

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "glossa/alignment.hpp"
#include "glossa/corpus.hpp"
#include "glossa/dictionary.hpp"

namespace glossa {

/// A link survives iff p >= p_exact, or p > p_high and both tokens occur
/// more than min_freq times in the corpus.
struct ProjectionFilter {
  double p_exact = 1.0;
  double p_high = 0.9;
  long min_freq = 5;
  ProbSource prob_source = ProbSource::posterior;

  void validate() const {
    if (!(0.0 < p_high && p_high < p_exact && p_exact <= 1.0))
      throw InvalidConfig("projection filter needs 0 < p_high < p_exact <= 1");
    if (min_freq < 0) throw InvalidConfig("projection filter needs min_freq >= 0");
  }

  bool keep(double p, long griko_freq, long italian_freq) const {
    return p >= p_exact || (p > p_high && griko_freq > min_freq && italian_freq > min_freq);
  }
};

struct ProjectionPair {
  std::vector<std::string> griko;
  std::vector<std::string> italian;
  std::vector<Tag> italian_tags;
  std::vector<Link> links;
};

struct KeptLink {
  std::size_t pair = 0;
  Link link;
  friend bool operator==(const KeptLink&, const KeptLink&) = default;
};

/// Links that pass the filter, in corpus order. Frequencies are counted over
/// `pairs`.
inline std::vector<KeptLink> filter_links(const std::vector<ProjectionPair>& pairs, const ProjectionFilter& filter) {
  filter.validate();
  std::unordered_map<std::string, long> gf, itf;
  for (const auto& p : pairs) {
    for (const auto& w : p.griko) ++gf[w];
    for (const auto& w : p.italian) ++itf[w];
  }
  std::vector<KeptLink> kept;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto& p = pairs[k];
    for (const auto& l : p.links) {
      if (l.griko_pos >= p.griko.size() || l.italian_pos >= p.italian.size())
        throw OutOfRange("link " + std::to_string(l.griko_pos) + "-" + std::to_string(l.italian_pos) +
                         " outside sentence pair " + std::to_string(k));
      if (filter.keep(l.prob, gf[p.griko[l.griko_pos]], itf[p.italian[l.italian_pos]])) kept.push_back({k, l});
    }
  }
  return kept;
}

/// Majority projected tag per Griko type; types whose top vote is tied are
/// dropped.
inline TagDictionary project_type_dictionary(const std::vector<ProjectionPair>& pairs,
                                             const ProjectionFilter& filter) {
  for (std::size_t k = 0; k < pairs.size(); ++k)
    if (pairs[k].italian_tags.size() != pairs[k].italian.size())
      throw MissingItalianTags("sentence pair " + std::to_string(k) + " lacks Italian tags");
  std::map<std::string, std::map<Tag, int>> votes;
  for (const auto& kl : filter_links(pairs, filter)) {
    const auto& p = pairs[kl.pair];
    ++votes[p.griko[kl.link.griko_pos]][p.italian_tags[kl.link.italian_pos]];
  }
  TagDictionary dict;
  for (const auto& [type, counts] : votes) {
    const Tag* best = nullptr;
    int top = 0;
    bool tied = false;
    for (const auto& [tag, n] : counts) {
      if (n > top) {
        best = &tag;
        top = n;
        tied = false;
      } else if (n == top) {
        tied = true;
      }
    }
    if (!tied) dict.add(type, *best, Provenance::projected, top);
  }
  return dict;
}

// ---------------------------------------------------------------------------
// Corpus-level pipeline

enum class ProjectionMode { train_only, transductive };

inline ProjectionMode parse_projection_mode(std::string_view s) {
  if (s == "train_only" || s == "train-only" || s == "clp") return ProjectionMode::train_only;
  if (s == "transductive" || s == "clpa") return ProjectionMode::transductive;
  throw InvalidConfig("unknown projection mode '" + std::string(s) + "'");
}

struct ProjectionOptions {
  ProjectionFilter filter;
  ProjectionMode mode = ProjectionMode::train_only;
  int ibm1_iters = 10;
};

struct ProjectionReport {
  std::size_t pairs = 0;
  std::size_t links = 0;
  std::size_t kept_links = 0;
  std::size_t types = 0;
};

/// Sentence pairs (norms and Italian tags) of the non-excluded sentences.
inline std::vector<ProjectionPair> projection_pairs(const std::vector<ParallelNarrative>& narratives) {
  std::vector<ProjectionPair> out;
  for (const auto& pn : narratives) {
    if (pn.griko.sentences.size() != pn.italian.sentences.size())
      throw LengthMismatch("narrative " + pn.griko.id + ": Griko and Italian sentence counts differ");
    if (!pn.has_italian_tags()) throw MissingItalianTags("narrative " + pn.griko.id + " has untagged Italian");
    for (std::size_t i = 0; i < pn.griko.sentences.size(); ++i) {
      const auto& g = pn.griko.sentences[i];
      const auto& it = pn.italian.sentences[i];
      if (g.excluded || it.excluded || g.empty() || it.empty()) continue;
      out.push_back({g.norms(), it.norms(), *it.tags, {}});
    }
  }
  return out;
}

/// Aligns `pairs` with IBM1 and fills in their links.
inline void align_pairs(std::vector<ProjectionPair>& pairs, int iters, ProbSource source) {
  std::vector<SentencePair> sp;
  sp.reserve(pairs.size());
  for (const auto& p : pairs) sp.push_back({p.griko, p.italian});
  const auto model = train_ibm1(sp, iters);
  for (std::size_t k = 0; k < pairs.size(); ++k) pairs[k].links = extract_links(model, sp[k], source);
}

/// Projected dictionary from the training narratives, plus the test
/// narratives' translations in transductive mode.
inline TagDictionary build_projected_dictionary(const std::vector<ParallelNarrative>& train,
                                                const std::vector<ParallelNarrative>& test,
                                                const ProjectionOptions& opts = {},
                                                ProjectionReport* report = nullptr) {
  opts.filter.validate();
  auto pairs = projection_pairs(train);
  if (opts.mode == ProjectionMode::transductive) {
    auto extra = projection_pairs(test);
    pairs.insert(pairs.end(), std::make_move_iterator(extra.begin()), std::make_move_iterator(extra.end()));
  }
  if (pairs.empty()) throw EmptyCorpus("no parallel sentences to project from");
  align_pairs(pairs, opts.ibm1_iters, opts.filter.prob_source);
  auto dict = project_type_dictionary(pairs, opts.filter);
  if (report) {
    report->pairs = pairs.size();
    report->links = 0;
    for (const auto& p : pairs) report->links += p.links.size();
    report->kept_links = filter_links(pairs, opts.filter).size();
    report->types = dict.size();
  }
  return dict;
}

}  // namespace glossa
