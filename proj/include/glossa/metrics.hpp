#pragma once

// Evaluation: token accuracy over non-excluded tokens, per-tag
// precision/recall, OOV rate, vocabulary coverage and fold summaries.

#include <algorithm>
#include <cmath>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include "glossa/corpus.hpp"
#include "glossa/errors.hpp"
#include "glossa/tag.hpp"

namespace glossa {

struct TagScore {
  std::size_t true_pos = 0;
  std::size_t false_pos = 0;
  std::size_t false_neg = 0;

  /// 0 when the tag was never predicted.
  double precision() const {
    const auto d = true_pos + false_pos;
    return d ? static_cast<double>(true_pos) / static_cast<double>(d) : 0.0;
  }
  /// 0 when the tag never occurs in the gold data.
  double recall() const {
    const auto d = true_pos + false_neg;
    return d ? static_cast<double>(true_pos) / static_cast<double>(d) : 0.0;
  }
};

struct EvalReport {
  std::size_t tokens = 0;
  std::size_t correct = 0;
  std::size_t oov_tokens = 0;
  std::size_t oov_correct = 0;
  std::map<Tag, TagScore> per_tag;

  double accuracy() const { return tokens ? static_cast<double>(correct) / static_cast<double>(tokens) : 0.0; }
  double oov_rate() const { return tokens ? static_cast<double>(oov_tokens) / static_cast<double>(tokens) : 0.0; }
  double oov_accuracy() const {
    return oov_tokens ? static_cast<double>(oov_correct) / static_cast<double>(oov_tokens) : 0.0;
  }
};

/// Scores `predicted` against the gold tags of `gold`, sentence by sentence.
/// Excluded sentences are skipped; `predicted` has one entry per sentence of
/// `gold` (entries for excluded sentences are ignored). With `train_vocab`,
/// tokens outside it count as OOV.
inline EvalReport evaluate(const std::vector<Sentence>& gold, const std::vector<std::vector<Tag>>& predicted,
                           const std::unordered_set<std::string>* train_vocab = nullptr) {
  if (gold.size() != predicted.size())
    throw LengthMismatch("evaluating " + std::to_string(predicted.size()) + " predictions against " +
                         std::to_string(gold.size()) + " sentences");
  EvalReport r;
  for (std::size_t n = 0; n < gold.size(); ++n) {
    const auto& s = gold[n];
    if (s.excluded) continue;
    if (!s.tags) throw NoAnnotatedData("evaluation sentence without gold tags");
    const auto& p = predicted[n];
    if (p.size() != s.size()) throw LengthMismatch("prediction length differs from sentence length");
    for (std::size_t i = 0; i < s.size(); ++i) {
      const Tag& g = (*s.tags)[i];
      const bool ok = p[i] == g;
      const bool oov = train_vocab && !train_vocab->count(s.tokens[i].norm);
      ++r.tokens;
      r.correct += ok;
      r.oov_tokens += oov;
      r.oov_correct += oov && ok;
      if (ok) {
        ++r.per_tag[g].true_pos;
      } else {
        ++r.per_tag[g].false_neg;
        ++r.per_tag[p[i]].false_pos;
      }
    }
  }
  return r;
}

inline double token_accuracy(const std::vector<Sentence>& gold, const std::vector<std::vector<Tag>>& predicted) {
  return evaluate(gold, predicted).accuracy();
}

inline std::unordered_set<std::string> vocabulary(const std::vector<Sentence>& sentences) {
  std::unordered_set<std::string> v;
  for (const auto& s : sentences)
    if (!s.excluded)
      for (const auto& t : s.tokens) v.insert(t.norm);
  return v;
}

struct Coverage {
  double token_fraction = 0.0;  // test tokens whose type occurs in training
  double type_fraction = 0.0;   // test types that occur in training
};

inline Coverage vocabulary_coverage(const std::vector<Sentence>& train, const std::vector<Sentence>& test) {
  const auto known = vocabulary(train);
  std::unordered_set<std::string> types, covered_types;
  std::size_t tokens = 0, covered = 0;
  for (const auto& s : test) {
    if (s.excluded) continue;
    for (const auto& t : s.tokens) {
      ++tokens;
      types.insert(t.norm);
      if (known.count(t.norm)) {
        ++covered;
        covered_types.insert(t.norm);
      }
    }
  }
  Coverage c;
  if (tokens) c.token_fraction = static_cast<double>(covered) / static_cast<double>(tokens);
  if (!types.empty()) c.type_fraction = static_cast<double>(covered_types.size()) / static_cast<double>(types.size());
  return c;
}

/// Mean, sample standard deviation and extremes of labelled values.
struct Summary {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // n - 1 denominator; 0 for a single value
  double min = 0.0;
  double max = 0.0;
  std::string argmin;  // first label attaining the extreme
  std::string argmax;
};

inline Summary summarize(const std::vector<double>& values, const std::vector<std::string>& labels = {}) {
  if (values.empty()) throw InsufficientData("cannot summarize zero values");
  if (!labels.empty() && labels.size() != values.size()) throw LengthMismatch("one label per value required");
  Summary s;
  s.n = values.size();
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  const auto lo = std::min_element(values.begin(), values.end()) - values.begin();
  const auto hi = std::max_element(values.begin(), values.end()) - values.begin();
  s.min = values[static_cast<std::size_t>(lo)];
  s.max = values[static_cast<std::size_t>(hi)];
  if (!labels.empty()) {
    s.argmin = labels[static_cast<std::size_t>(lo)];
    s.argmax = labels[static_cast<std::size_t>(hi)];
  }
  return s;
}

}  // namespace glossa
