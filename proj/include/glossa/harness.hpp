#pragma once

// Experiment orchestration: the tagger x data-condition grid, the
// narrative-level active-learning loop and leave-one-narrative-out
// cross-validation.

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

#include "glossa/corpus.hpp"
#include "glossa/errors.hpp"
#include "glossa/metrics.hpp"
#include "glossa/projection.hpp"
#include "glossa/random.hpp"
#include "glossa/taggers.hpp"

namespace glossa {

/// All inputs of an experiment. Test narratives carry gold tags on the
/// Griko side; their translations are optional (empty Italian narratives).
struct ExperimentData {
  std::vector<Narrative> base;
  std::vector<ParallelNarrative> parallel;
  std::vector<ParallelNarrative> test;

  std::vector<Narrative> test_griko() const {
    std::vector<Narrative> out;
    for (const auto& p : test) out.push_back(p.griko);
    return out;
  }

  bool test_parallel() const {
    return !test.empty() && std::all_of(test.begin(), test.end(), [](const ParallelNarrative& p) {
      return !p.italian.sentences.empty() && p.has_italian_tags();
    });
  }

  /// Raw text of the parallel Griko side, plus the test text if asked.
  std::vector<std::vector<std::string>> mono(bool with_test = false) const {
    std::vector<std::vector<std::string>> out;
    auto add = [&](const Narrative& n) {
      for (const auto& s : n.sentences)
        if (!s.excluded && !s.empty()) out.push_back(s.norms());
    };
    for (const auto& p : parallel) add(p.griko);
    if (with_test)
      for (const auto& p : test) add(p.griko);
    return out;
  }
};

/// Reads the three corpus directories. `parallel` may be empty; the test
/// corpus may lack translations.
inline ExperimentData load_experiment(const std::filesystem::path& base, const std::filesystem::path& parallel,
                                      const std::filesystem::path& test) {
  ExperimentData d;
  d.base = read_corpus(base).narratives;
  if (!parallel.empty()) {
    const auto c = read_corpus(parallel);
    if (!c.parallel()) throw ParseError(parallel.string() + " has no .ita translations");
    d.parallel = c.parallel_narratives();
  }
  const auto t = read_corpus(test);
  for (std::size_t i = 0; i < t.narratives.size(); ++i) {
    ParallelNarrative p;
    p.griko = t.narratives[i];
    if (t.parallel()) p.italian = t.translations[i];
    else p.italian.id = p.griko.id;
    d.test.push_back(std::move(p));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Grid

enum class ProjectionSource { none, clp, clpa };

inline std::string_view to_string(ProjectionSource p) {
  return p == ProjectionSource::none ? "none" : p == ProjectionSource::clp ? "clp" : "clpa";
}

inline ProjectionSource parse_projection_source(std::string_view s) {
  if (s == "none") return ProjectionSource::none;
  if (s == "clp") return ProjectionSource::clp;
  if (s == "clpa") return ProjectionSource::clpa;
  throw InvalidConfig("unknown projection source '" + std::string(s) + "'");
}

struct DataCondition {
  ProjectionSource projection = ProjectionSource::none;
  bool add_monolingual = true;  // gdb only
  bool transductive_mono = false;  // gdb only: the test text joins the monolingual data

  std::string name() const {
    std::string n(to_string(projection));
    if (!add_monolingual) n += "-mono";
    if (transductive_mono) n += "+tmono";
    return n;
  }

  /// Inverse of name(): "clp", "none-mono", "clpa+tmono", ...
  static DataCondition parse(std::string_view s) {
    DataCondition c;
    std::string rest(s);
    auto strip = [&rest](std::string_view flag) {
      const auto pos = rest.find(flag);
      if (pos == std::string::npos) return false;
      rest.erase(pos, flag.size());
      return true;
    };
    c.transductive_mono = strip("+tmono");
    c.add_monolingual = !strip("-mono");
    c.projection = parse_projection_source(rest);
    return c;
  }
};

struct GridCell {
  std::string tagger;  // effective tagger name, e.g. gdb+clp
  std::string condition;
  double accuracy = 0.0;
  std::size_t tokens = 0;
  double oov_rate = 0.0;
};

struct GridOptions {
  TaggerOptions taggers;
  ProjectionOptions projection;
};

/// Trains every tagger kind under every condition and scores it on the
/// non-excluded test tokens. The +clp part of a tagger spec is ignored: the
/// condition decides projection.
inline std::vector<GridCell> run_grid(const std::vector<TaggerSpec>& taggers, const std::vector<DataCondition>& conditions,
                                      const ExperimentData& data, const GridOptions& opts = {}) {
  if (taggers.empty() || conditions.empty()) throw InvalidConfig("grid needs at least one tagger and one condition");
  const auto annotated = tagged_sentences(data.base);
  const auto test = usable_sentences(data.test_griko());
  const auto train_vocab = vocabulary(annotated);
  std::map<ProjectionSource, TagDictionary> dicts;
  auto dictionary = [&](ProjectionSource p) -> const TagDictionary& {
    auto it = dicts.find(p);
    if (it != dicts.end()) return it->second;
    auto po = opts.projection;
    po.mode = p == ProjectionSource::clpa ? ProjectionMode::transductive : ProjectionMode::train_only;
    if (p == ProjectionSource::clpa && !data.test_parallel())
      throw InvalidConfig("clpa needs tagged translations of the test narratives");
    return dicts[p] = p == ProjectionSource::none ? TagDictionary{}
                                                  : build_projected_dictionary(data.parallel, data.test, po);
  };

  std::vector<GridCell> out;
  for (const auto& cond : conditions)
    for (const auto& t : taggers) {
      TaggerSpec spec{t.kind, cond.projection != ProjectionSource::none};
      TrainingData td;
      td.annotated = annotated;
      td.projected = dictionary(cond.projection);
      if (spec.kind == TaggerKind::gdb && cond.add_monolingual) td.mono = data.mono(cond.transductive_mono);
      const auto tagger = train_tagger(spec, td, opts.taggers);
      const auto r = evaluate(test, tagger->tag_all(test), &train_vocab);
      std::string label = spec.name();
      if (cond.projection == ProjectionSource::clpa) label += 'a';
      out.push_back({label, cond.name(), r.accuracy(), r.tokens, r.oov_rate()});
    }
  return out;
}

inline void write_grid_tsv(std::ostream& out, const std::vector<GridCell>& cells) {
  out << "tagger\tcondition\taccuracy\ttokens\toov_rate\n";
  for (const auto& c : cells)
    out << c.tagger << '\t' << c.condition << '\t' << detail::format_double(c.accuracy) << '\t' << c.tokens << '\t'
        << detail::format_double(c.oov_rate) << '\n';
}

// ---------------------------------------------------------------------------
// Active learning

struct AlConfig {
  std::vector<TaggerSpec> taggers = {TaggerSpec{TaggerKind::crf, false}, TaggerSpec{TaggerKind::crf_mod, false},
                                     TaggerSpec{TaggerKind::crf_mod, true}, TaggerSpec{TaggerKind::gdb, false},
                                     TaggerSpec{TaggerKind::gdb, true}};
  TaggerOptions options;
  ProjectionOptions projection;
  std::uint64_t seed = 1;  // starter-selection split
  double holdout_fraction = 0.1;

  void validate() const {
    if (taggers.empty()) throw InvalidConfig("active learning needs at least one tagger");
    if (!(holdout_fraction > 0 && holdout_fraction < 1)) throw InvalidConfig("holdout_fraction must lie in (0, 1)");
  }
};

/// What every retraining sees besides the pool.
struct AlResources {
  std::vector<Sentence> base;
  TagDictionary projected;
  std::vector<std::vector<std::string>> mono;
};

inline AlResources prepare_resources(const ExperimentData& data, const AlConfig& cfg) {
  AlResources r;
  r.base = tagged_sentences(data.base);
  const bool wants_projection = std::any_of(cfg.taggers.begin(), cfg.taggers.end(), [](const TaggerSpec& s) { return s.projection; });
  if (wants_projection && !data.parallel.empty()) {
    auto po = cfg.projection;
    po.mode = ProjectionMode::train_only;
    r.projected = build_projected_dictionary(data.parallel, {}, po);
  }
  r.mono = data.mono(false);
  return r;
}

/// One trained model per configured tagger, in configuration order.
struct Ensemble {
  std::vector<TaggerPtr> taggers;
};

inline Ensemble train_ensemble(const AlConfig& cfg, const AlResources& res, const std::vector<Sentence>& pool) {
  TrainingData td{pool, res.projected, res.mono};
  Ensemble e;
  for (const auto& spec : cfg.taggers) e.taggers.push_back(train_tagger(spec, td, cfg.options));
  return e;
}

namespace detail {

inline std::size_t argmax_first(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

}  // namespace detail

/// Starter tagger: trains on a seeded 90% of the base pool and picks the
/// best on the held-out rest (configuration order breaks ties).
inline std::size_t select_starter(const AlConfig& cfg, const AlResources& res, std::vector<double>* scores = nullptr) {
  cfg.validate();
  if (cfg.taggers.size() == 1) return 0;
  std::vector<std::size_t> idx(res.base.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng rng(cfg.seed);
  rng.shuffle(idx);
  const auto n_hold = std::max<std::size_t>(1, static_cast<std::size_t>(cfg.holdout_fraction * static_cast<double>(idx.size())));
  if (idx.size() <= n_hold) throw InsufficientData("base pool too small for a held-out split");
  std::vector<Sentence> hold, fit;
  for (std::size_t i = 0; i < idx.size(); ++i) (i < n_hold ? hold : fit).push_back(res.base[idx[i]]);
  const auto ens = train_ensemble(cfg, res, fit);
  std::vector<double> acc;
  for (const auto& t : ens.taggers) acc.push_back(token_accuracy(hold, t->tag_all(hold)));
  if (scores) *scores = acc;
  return detail::argmax_first(acc);
}

struct IterationRecord {
  int iteration = 0;  // 1-based
  std::string narrative_id;
  std::size_t narrative_tokens = 0;
  std::string shown_method;  // tagger whose output was corrected
  double shown_accuracy = 0.0;  // its predictions against the corrections
  std::string best_method;  // best on this narrative; shown next iteration
  double accuracy_with_al = 0.0;
  double accuracy_without_al = 0.0;  // starter tagger trained on the base pool only
  double best_static = 0.0;  // best base-only tagger on this narrative
  std::map<std::string, double> narrative_accuracy;
  /// Every tagger on the narratives not yet annotated (this one included),
  /// when their gold tags are known.
  std::map<std::string, double> remaining_accuracy;
  /// Every tagger on the final (longest) narrative, when its gold is known.
  std::map<std::string, double> final_story_accuracy;
  std::size_t changed_count = 0;
  std::size_t pool_sentences = 0;  // after adding this narrative
  bool noisy_pool = false;  // corrections were the predictions themselves

  friend bool operator==(const IterationRecord&, const IterationRecord&) = default;
};

inline void to_json(nlohmann::json& j, const IterationRecord& r) {
  j = nlohmann::json{{"iteration", r.iteration},
                     {"narrative_id", r.narrative_id},
                     {"narrative_tokens", r.narrative_tokens},
                     {"shown_method", r.shown_method},
                     {"shown_accuracy", r.shown_accuracy},
                     {"best_method", r.best_method},
                     {"accuracy_with_al", r.accuracy_with_al},
                     {"accuracy_without_al", r.accuracy_without_al},
                     {"best_static", r.best_static},
                     {"narrative_accuracy", r.narrative_accuracy},
                     {"remaining_accuracy", r.remaining_accuracy},
                     {"final_story_accuracy", r.final_story_accuracy},
                     {"changed_count", r.changed_count},
                     {"pool_sentences", r.pool_sentences},
                     {"noisy_pool", r.noisy_pool}};
}

inline void from_json(const nlohmann::json& j, IterationRecord& r) {
  j.at("iteration").get_to(r.iteration);
  j.at("narrative_id").get_to(r.narrative_id);
  j.at("narrative_tokens").get_to(r.narrative_tokens);
  j.at("shown_method").get_to(r.shown_method);
  j.at("shown_accuracy").get_to(r.shown_accuracy);
  j.at("best_method").get_to(r.best_method);
  j.at("accuracy_with_al").get_to(r.accuracy_with_al);
  j.at("accuracy_without_al").get_to(r.accuracy_without_al);
  j.at("best_static").get_to(r.best_static);
  j.at("narrative_accuracy").get_to(r.narrative_accuracy);
  j.at("remaining_accuracy").get_to(r.remaining_accuracy);
  j.at("final_story_accuracy").get_to(r.final_story_accuracy);
  j.at("changed_count").get_to(r.changed_count);
  j.at("pool_sentences").get_to(r.pool_sentences);
  j.at("noisy_pool").get_to(r.noisy_pool);
}

/// Predictions shown to the annotator for one narrative.
struct Proposal {
  std::string narrative_id;
  std::string method;
  std::vector<Tagged> sentences;  // excluded sentences are empty
};

/// Narratives ascending by non-excluded token count, ties by id.
inline void sort_queue(std::vector<Narrative>& q) {
  std::sort(q.begin(), q.end(), [](const Narrative& a, const Narrative& b) {
    const auto la = a.token_length(), lb = b.token_length();
    return la != lb ? la < lb : a.id < b.id;
  });
}

/// The narrative-level loop as a state machine. Training is kept outside
/// (`train_ensemble`), so a caller can train off to the side and hand the
/// result in.
class ActiveLearning {
 public:
  ActiveLearning(AlConfig cfg, AlResources res, std::vector<Narrative> queue)
      : cfg_(std::move(cfg)), res_(std::move(res)), queue_(std::move(queue)) {
    cfg_.validate();
    if (queue_.empty()) throw QueueEmpty("active learning needs at least one narrative");
    sort_queue(queue_);
    final_id_ = queue_.back().id;
    for (const auto& n : queue_)
      if (n.id == final_id_) final_gold_ = n.fully_tagged() ? usable_sentences(n) : std::vector<Sentence>{};
  }

  const AlConfig& config() const { return cfg_; }
  const AlResources& resources() const { return res_; }
  bool done() const { return next_ >= queue_.size(); }
  int iteration() const { return static_cast<int>(next_); }
  const std::vector<Narrative>& queue() const { return queue_; }
  const Narrative& current() const {
    if (done()) throw QueueEmpty("every narrative has been annotated");
    return queue_[next_];
  }
  const std::string& final_story_id() const { return final_id_; }
  const std::vector<IterationRecord>& log() const { return log_; }
  bool started() const { return static_ != nullptr; }
  std::size_t selected() const { return selected_; }
  std::string selected_name() const { return cfg_.taggers[selected_].name(); }

  /// Base pool plus the accepted narratives, in acceptance order.
  std::vector<Sentence> pool() const {
    auto out = res_.base;
    for (std::size_t i = 0; i < next_; ++i)
      for (auto& s : usable_sentences(queue_[i])) out.push_back(std::move(s));
    return out;
  }

  /// Installs the base-only ensemble and the starter choice. A restored
  /// log keeps its own starter and selection.
  void start(std::shared_ptr<const Ensemble> base_models, std::size_t starter) {
    if (starter >= cfg_.taggers.size()) throw OutOfRange("starter index out of range");
    check(*base_models);
    static_ = std::move(base_models);
    if (log_.empty()) selected_ = starter;
  }

  Proposal propose(const Ensemble& models) const {
    check(models);
    const auto& n = current();
    Proposal p{n.id, selected_name(), {}};
    for (const auto& s : n.sentences) p.sentences.push_back(s.excluded ? Tagged{} : models.taggers[selected_]->tag(s.norms()));
    return p;
  }

  /// Checks corrections for the current narrative: one tag per token of
  /// every non-excluded sentence.
  void validate_corrections(const std::vector<std::vector<Tag>>& corrected) const {
    const auto& n = current();
    if (corrected.size() != n.sentences.size())
      throw LengthMismatch("narrative " + n.id + " has " + std::to_string(n.sentences.size()) + " sentences, got " +
                           std::to_string(corrected.size()));
    for (std::size_t i = 0; i < corrected.size(); ++i)
      if (!n.sentences[i].excluded && corrected[i].size() != n.sentences[i].size())
        throw LengthMismatch("sentence " + std::to_string(i + 1) + " of " + n.id + " has " +
                             std::to_string(n.sentences[i].size()) + " tokens, got " +
                             std::to_string(corrected[i].size()) + " tags");
  }

  /// Scores `models` on the current narrative against the corrections,
  /// logs the iteration and moves the corrected narrative into the pool.
  const IterationRecord& accept(const Ensemble& models, const std::vector<std::vector<Tag>>& corrected,
                                bool noisy = false) {
    if (!started()) throw ModelNotReady("active learning has not been started");
    check(models);
    validate_corrections(corrected);
    Narrative annotated = current();
    for (std::size_t i = 0; i < annotated.sentences.size(); ++i)
      if (!annotated.sentences[i].excluded) annotated.sentences[i].tags = corrected[i];
    const auto gold = usable_sentences(annotated);

    IterationRecord r;
    r.iteration = static_cast<int>(next_) + 1;
    r.narrative_id = annotated.id;
    r.narrative_tokens = annotated.token_length();
    r.shown_method = selected_name();
    r.noisy_pool = noisy;

    std::vector<double> acc, static_acc;
    for (std::size_t k = 0; k < models.taggers.size(); ++k) {
      const auto name = cfg_.taggers[k].name();
      const auto pred = models.taggers[k]->tag_all(gold);
      acc.push_back(token_accuracy(gold, pred));
      r.narrative_accuracy[name] = acc.back();
      static_acc.push_back(token_accuracy(gold, static_->taggers[k]->tag_all(gold)));
      if (k == selected_)
        for (std::size_t s = 0; s < gold.size(); ++s)
          for (std::size_t i = 0; i < gold[s].size(); ++i) r.changed_count += pred[s][i] != (*gold[s].tags)[i];
    }
    r.shown_accuracy = acc[selected_];
    const auto best = detail::argmax_first(acc);
    r.best_method = cfg_.taggers[best].name();
    r.accuracy_with_al = acc[best];
    r.accuracy_without_al = static_acc[starter()];
    r.best_static = *std::max_element(static_acc.begin(), static_acc.end());

    std::vector<Sentence> remaining;
    bool remaining_known = true;
    for (std::size_t i = next_; i < queue_.size(); ++i) {
      if (!queue_[i].fully_tagged()) remaining_known = false;
      for (auto& s : usable_sentences(i == next_ ? annotated : queue_[i])) remaining.push_back(std::move(s));
    }
    for (std::size_t k = 0; k < models.taggers.size(); ++k) {
      const auto name = cfg_.taggers[k].name();
      if (remaining_known) r.remaining_accuracy[name] = token_accuracy(remaining, models.taggers[k]->tag_all(remaining));
      if (!final_gold_.empty())
        r.final_story_accuracy[name] = token_accuracy(final_gold_, models.taggers[k]->tag_all(final_gold_));
    }

    queue_[next_] = std::move(annotated);
    ++next_;
    r.pool_sentences = res_.base.size();
    for (std::size_t i = 0; i < next_; ++i) r.pool_sentences += usable_sentences(queue_[i]).size();
    if (starter_ == kNone) starter_ = selected_;
    selected_ = best;
    log_.push_back(std::move(r));
    return log_.back();
  }

  /// Moves the current narrative into the pool with `corrected` tags and no
  /// log entry; rebuilds state from stored annotations.
  void replay(const std::vector<std::vector<Tag>>& corrected) {
    validate_corrections(corrected);
    auto& n = queue_[next_];
    for (std::size_t i = 0; i < n.sentences.size(); ++i)
      if (!n.sentences[i].excluded) n.sentences[i].tags = corrected[i];
    ++next_;
  }

  /// Replaces the tags of an already accepted narrative (a second review).
  /// The pool keeps one copy of it; the log is unchanged.
  void revise(const std::string& narrative_id, const std::vector<std::vector<Tag>>& corrected) {
    for (std::size_t i = 0; i < next_; ++i) {
      auto& n = queue_[i];
      if (n.id != narrative_id) continue;
      if (corrected.size() != n.sentences.size()) throw LengthMismatch("sentence count differs from narrative " + n.id);
      for (std::size_t s = 0; s < n.sentences.size(); ++s) {
        if (n.sentences[s].excluded) continue;
        if (corrected[s].size() != n.sentences[s].size()) throw LengthMismatch("tag count differs in " + n.id);
      }
      for (std::size_t s = 0; s < n.sentences.size(); ++s)
        if (!n.sentences[s].excluded) n.sentences[s].tags = corrected[s];
      return;
    }
    throw TaskNotFound("narrative " + narrative_id + " has not been accepted");
  }

  /// Restores the starter index and log after a restart.
  void restore_log(std::vector<IterationRecord> log) {
    log_ = std::move(log);
    if (!log_.empty()) {
      starter_ = index_of(log_.front().shown_method);
      selected_ = index_of(log_.back().best_method);
    }
  }

  std::size_t starter() const { return starter_ == kNone ? selected_ : starter_; }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);

  void check(const Ensemble& e) const {
    if (e.taggers.size() != cfg_.taggers.size()) throw InvalidConfig("ensemble does not match the tagger configuration");
  }

  std::size_t index_of(const std::string& name) const {
    for (std::size_t k = 0; k < cfg_.taggers.size(); ++k)
      if (cfg_.taggers[k].name() == name) return k;
    throw InvalidConfig("log names tagger '" + name + "', which is not configured");
  }

  AlConfig cfg_;
  AlResources res_;
  std::vector<Narrative> queue_;  // accepted narratives first, with their corrected tags
  std::size_t next_ = 0;
  std::string final_id_;
  std::vector<Sentence> final_gold_;
  std::shared_ptr<const Ensemble> static_;
  std::size_t selected_ = 0;
  std::size_t starter_ = kNone;
  std::vector<IterationRecord> log_;
};

/// Returns the corrected tags for a narrative given the shown proposal.
using Annotator = std::function<std::vector<std::vector<Tag>>(const Narrative&, const Proposal&)>;

/// Corrections are the narrative's own gold tags.
inline std::vector<std::vector<Tag>> oracle_corrections(const Narrative& n) {
  std::vector<std::vector<Tag>> out;
  for (const auto& s : n.sentences) {
    if (s.excluded) {
      out.emplace_back();
      continue;
    }
    if (!s.tags) throw NoAnnotatedData("oracle annotator needs gold tags for narrative " + n.id);
    out.push_back(*s.tags);
  }
  return out;
}

inline Annotator oracle_annotator() {
  return [](const Narrative& n, const Proposal&) { return oracle_corrections(n); };
}

/// Accepts every prediction unchanged: the pool fills with model output.
inline Annotator identity_annotator() {
  return [](const Narrative&, const Proposal& p) {
    std::vector<std::vector<Tag>> out;
    for (const auto& s : p.sentences) out.push_back(s.tags);
    return out;
  };
}

struct AlRun {
  std::vector<IterationRecord> log;
  std::vector<Sentence> pool;
  std::vector<double> starter_scores;
};

/// Runs the loop to the end of the queue. `noisy` marks runs whose
/// annotator does not correct anything.
inline AlRun run_active_learning(const AlConfig& cfg, const AlResources& res, std::vector<Narrative> queue,
                                 const Annotator& annotator, bool noisy = false) {
  ActiveLearning al(cfg, res, std::move(queue));
  AlRun run;
  auto models = std::make_shared<const Ensemble>(train_ensemble(cfg, res, al.pool()));
  al.start(models, select_starter(cfg, res, &run.starter_scores));
  while (!al.done()) {
    const auto proposal = al.propose(*models);
    al.accept(*models, annotator(al.current(), proposal), noisy);
    if (!al.done()) models = std::make_shared<const Ensemble>(train_ensemble(cfg, res, al.pool()));
  }
  run.log = al.log();
  run.pool = al.pool();
  return run;
}

inline nlohmann::json log_to_json(const std::vector<IterationRecord>& log) { return nlohmann::json(log); }

/// Per-iteration curve data, one row per tagger and iteration.
inline void write_curve_tsv(std::ostream& out, const std::vector<IterationRecord>& log) {
  out << "iteration\tnarrative\ttagger\tremaining_accuracy\tfinal_story_accuracy\n";
  for (const auto& r : log)
    for (const auto& [name, acc] : r.narrative_accuracy) {
      auto rem = r.remaining_accuracy.find(name);
      auto fin = r.final_story_accuracy.find(name);
      out << r.iteration << '\t' << r.narrative_id << '\t' << name << '\t'
          << (rem == r.remaining_accuracy.end() ? "" : detail::format_double(rem->second)) << '\t'
          << (fin == r.final_story_accuracy.end() ? "" : detail::format_double(fin->second)) << '\n';
    }
}

// ---------------------------------------------------------------------------
// Cross-validation

struct CvFold {
  std::string narrative_id;
  double accuracy = 0.0;
  std::size_t tokens = 0;
};

struct CvResult {
  std::vector<CvFold> folds;
  Summary summary;
};

/// Leave one narrative out: each fold trains on `extra.annotated` plus the
/// other narratives and tests on the held-out one.
inline CvResult cross_validate(const std::vector<Narrative>& narratives, const TaggerSpec& spec,
                               const TrainingData& extra = {}, const TaggerOptions& opts = {}) {
  if (narratives.size() < 2)
    throw TooFewNarratives("cross-validation needs at least 2 narratives, got " + std::to_string(narratives.size()));
  CvResult out;
  std::vector<double> acc;
  std::vector<std::string> ids;
  for (std::size_t f = 0; f < narratives.size(); ++f) {
    TrainingData td = extra;
    for (std::size_t i = 0; i < narratives.size(); ++i)
      if (i != f)
        for (auto& s : tagged_sentences({narratives[i]})) td.annotated.push_back(std::move(s));
    const auto test = usable_sentences(narratives[f]);
    const auto r = evaluate(test, train_tagger(spec, td, opts)->tag_all(test));
    out.folds.push_back({narratives[f].id, r.accuracy(), r.tokens});
    acc.push_back(r.accuracy());
    ids.push_back(narratives[f].id);
  }
  out.summary = summarize(acc, ids);
  return out;
}

}  // namespace glossa
