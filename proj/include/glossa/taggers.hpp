#pragma once

// The tagger family behind one interface: crf, crf-mod, neural and gdb, each
// optionally with projected type-level supervision (+clp).

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "glossa/corpus.hpp"
#include "glossa/crf.hpp"
#include "glossa/dictionary.hpp"
#include "glossa/errors.hpp"
#include "glossa/hmm.hpp"
#include "glossa/neural.hpp"
#include "glossa/propagation.hpp"

namespace glossa {

enum class TaggerKind { crf, crf_mod, neural, gdb };

struct TaggerSpec {
  TaggerKind kind = TaggerKind::crf_mod;
  bool projection = false;

  std::string name() const {
    static const char* names[] = {"crf", "crf-mod", "neural", "gdb"};
    return std::string(names[static_cast<int>(kind)]) + (projection ? "+clp" : "");
  }

  static TaggerSpec parse(std::string_view s) {
    TaggerSpec spec;
    constexpr std::string_view suffix = "+clp";
    if (s.size() > suffix.size() && s.substr(s.size() - suffix.size()) == suffix) {
      spec.projection = true;
      s.remove_suffix(suffix.size());
    }
    if (s == "crf") spec.kind = TaggerKind::crf;
    else if (s == "crf-mod") spec.kind = TaggerKind::crf_mod;
    else if (s == "neural") spec.kind = TaggerKind::neural;
    else if (s == "gdb") spec.kind = TaggerKind::gdb;
    else throw InvalidConfig("unknown tagger '" + std::string(s) + "'");
    return spec;
  }

  friend bool operator==(const TaggerSpec&, const TaggerSpec&) = default;
};

inline std::vector<TaggerSpec> parse_tagger_list(std::string_view csv) {
  std::vector<TaggerSpec> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const auto end = csv.find(',', start);
    const auto piece = csv.substr(start, end == std::string_view::npos ? csv.size() - start : end - start);
    if (!piece.empty()) out.push_back(TaggerSpec::parse(piece));
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  if (out.empty()) throw InvalidConfig("empty tagger list");
  return out;
}

/// Predicted tags with the model's confidence in each.
struct Tagged {
  std::vector<Tag> tags;
  std::vector<double> confidence;
};

class Tagger {
 public:
  virtual ~Tagger() = default;
  virtual TaggerSpec spec() const = 0;
  virtual Tagged tag(const std::vector<std::string>& words) const = 0;
  virtual void save(std::ostream& out) const = 0;

  std::string name() const { return spec().name(); }

  /// One prediction per sentence; excluded sentences get empty output.
  std::vector<std::vector<Tag>> tag_all(const std::vector<Sentence>& sentences) const {
    std::vector<std::vector<Tag>> out;
    out.reserve(sentences.size());
    for (const auto& s : sentences) out.push_back(s.excluded ? std::vector<Tag>{} : tag(s.norms()).tags);
    return out;
  }
};

using TaggerPtr = std::shared_ptr<const Tagger>;

class CrfTagger final : public Tagger {
 public:
  CrfTagger(TaggerSpec spec, CrfModel model) : spec_(spec), model_(std::move(model)) {}
  TaggerSpec spec() const override { return spec_; }
  const CrfModel& model() const { return model_; }

  Tagged tag(const std::vector<std::string>& words) const override {
    Tagged out;
    if (words.empty()) return out;
    const auto unary = model_.unary(model_.compile(words));
    const auto trans = model_.transitions();
    const auto path = chain::viterbi(unary, trans);
    const auto node = chain::marginals(unary, trans).node;
    for (std::size_t i = 0; i < path.size(); ++i) {
      out.tags.push_back(model_.tagset[static_cast<std::size_t>(path[i])]);
      out.confidence.push_back(std::clamp(node(static_cast<Eigen::Index>(i), path[i]), 0.0, 1.0));
    }
    return out;
  }

  void save(std::ostream& out) const override { save_crf(out, model_); }

 private:
  TaggerSpec spec_;
  CrfModel model_;
};

class HmmTagger final : public Tagger {
 public:
  HmmTagger(TaggerSpec spec, HmmModel model) : spec_(spec), model_(std::move(model)) {}
  TaggerSpec spec() const override { return spec_; }
  const HmmModel& model() const { return model_; }

  Tagged tag(const std::vector<std::string>& words) const override {
    Tagged out;
    if (words.empty()) return out;
    const auto path = viterbi_hmm(model_, words);
    const auto post = hmm_posteriors(model_, words);
    for (std::size_t i = 0; i < path.size(); ++i) {
      out.tags.push_back(model_.tagset[static_cast<std::size_t>(path[i])]);
      out.confidence.push_back(std::clamp(post(static_cast<Eigen::Index>(i), path[i]), 0.0, 1.0));
    }
    return out;
  }

  void save(std::ostream& out) const override { save_hmm(out, model_); }

 private:
  TaggerSpec spec_;
  HmmModel model_;
};

class NeuralTagger final : public Tagger {
 public:
  NeuralTagger(TaggerSpec spec, NeuralModel model) : spec_(spec), model_(std::move(model)) {}
  TaggerSpec spec() const override { return spec_; }
  const NeuralModel& model() const { return model_; }

  Tagged tag(const std::vector<std::string>& words) const override {
    auto [tags, conf] = neural_tag(model_, words);
    return {std::move(tags), std::move(conf)};
  }

  void save(std::ostream& out) const override { save_neural(out, model_); }

 private:
  TaggerSpec spec_;
  NeuralModel model_;
};

struct TaggerOptions {
  CrfTrainOptions crf;  // templates are chosen by the tagger kind
  NeuralConfig neural;
  HmmConfig hmm;
  PropagationConfig propagation;
  double expansion_threshold = 0.1;
};

/// Everything a tagger may learn from. `projected` is used only by +clp
/// taggers; `mono` only by gdb.
struct TrainingData {
  std::vector<Sentence> annotated;
  TagDictionary projected;
  std::vector<std::vector<std::string>> mono;
};

/// Tag dictionary the gdb tagger constrains EM with: gold types from the
/// annotated data (plus projected types for +clp), expanded by propagation
/// over the annotated and monolingual text.
inline TagDictionary gdb_dictionary(const TrainingData& data, bool projection, const TaggerOptions& opts,
                                    ExpansionReport* report = nullptr) {
  const auto gold = gold_dictionary(data.annotated);
  const auto seeds = projection ? combine_seeds(gold, data.projected) : gold;
  auto text = data.mono;
  for (const auto& s : data.annotated)
    if (!s.excluded && !s.empty()) text.push_back(s.norms());
  return expand_with_propagation(text, seeds, opts.propagation, opts.expansion_threshold, report);
}

inline TaggerPtr train_tagger(const TaggerSpec& spec, const TrainingData& data, const TaggerOptions& opts = {}) {
  const TagDictionary* sup = spec.projection && !data.projected.empty() ? &data.projected : nullptr;
  switch (spec.kind) {
    case TaggerKind::crf:
    case TaggerKind::crf_mod: {
      auto o = opts.crf;
      o.templates = spec.kind == TaggerKind::crf ? FeatureTemplateConfig::basic() : FeatureTemplateConfig::extended();
      return std::make_shared<CrfTagger>(spec, train_crf(data.annotated, sup, o));
    }
    case TaggerKind::neural: {
      auto train = data.annotated;
      if (sup)
        for (auto& s : dictionary_sentences(*sup)) train.push_back(std::move(s));
      return std::make_shared<NeuralTagger>(spec, train_neural(train, opts.neural));
    }
    case TaggerKind::gdb: {
      const auto dict = gdb_dictionary(data, spec.projection, opts);
      return std::make_shared<HmmTagger>(spec, train_semisup_hmm(data.mono, data.annotated, dict, opts.hmm));
    }
  }
  throw InvalidConfig("unknown tagger kind");
}

// ---------------------------------------------------------------------------
// Files: a `glossa-tagger 1 <name>` line followed by the model itself.

inline void save_tagger(std::ostream& out, const Tagger& t) {
  out << "glossa-tagger\t1\t" << t.name() << '\n';
  t.save(out);
}

inline TaggerPtr load_tagger(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty tagger file");
  const auto cols = detail::split_tabs(line);
  if (cols.size() != 3 || cols[0] != "glossa-tagger" || cols[1] != "1") throw ParseError("not a glossa tagger file");
  const auto spec = TaggerSpec::parse(cols[2]);
  switch (spec.kind) {
    case TaggerKind::crf:
    case TaggerKind::crf_mod:
      return std::make_shared<CrfTagger>(spec, load_crf(in));
    case TaggerKind::neural:
      return std::make_shared<NeuralTagger>(spec, load_neural(in));
    case TaggerKind::gdb:
      return std::make_shared<HmmTagger>(spec, load_hmm(in));
  }
  throw ParseError("unknown tagger kind");
}

inline void save_tagger(const std::filesystem::path& path, const Tagger& t) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  save_tagger(out, t);
}

inline TaggerPtr load_tagger(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string());
  return load_tagger(in);
}

}  // namespace glossa
