#pragma once

// The active-learning loop as a long-running service: tasks for the next
// narrative, validated submissions into an append-only record log, and a
// single background worker that retrains and swaps the serving ensemble.

#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <ctime>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "glossa/errors.hpp"
#include "glossa/harness.hpp"

namespace glossa {

// ---------------------------------------------------------------------------
// Configuration

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path store = "glossa-store";
  std::filesystem::path base, parallel, test;  // corpus directories
  std::vector<TaggerSpec> taggers = AlConfig{}.taggers;
  std::uint64_t seed = 1;
  std::string token;  // shared secret; empty disables the check

  AlConfig al_config() const {
    AlConfig c;
    c.taggers = taggers;
    c.seed = seed;
    return c;
  }

  /// Fields present in `j` override the current values.
  void merge_json(const nlohmann::json& j) {
    if (j.contains("host")) host = j.at("host").get<std::string>();
    if (j.contains("port")) port = j.at("port").get<int>();
    if (j.contains("store")) store = j.at("store").get<std::string>();
    if (j.contains("base")) base = j.at("base").get<std::string>();
    if (j.contains("parallel")) parallel = j.at("parallel").get<std::string>();
    if (j.contains("test")) test = j.at("test").get<std::string>();
    if (j.contains("taggers")) {
      taggers.clear();
      for (const auto& t : j.at("taggers")) taggers.push_back(TaggerSpec::parse(t.get<std::string>()));
    }
    if (j.contains("seed")) seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("token")) token = j.at("token").get<std::string>();
  }

  /// GLOSSA_PORT, GLOSSA_STORE, GLOSSA_SEED, GLOSSA_TOKEN, GLOSSA_TAGGERS,
  /// GLOSSA_BASE, GLOSSA_PARALLEL and GLOSSA_TEST.
  void merge_env() {
    auto env = [](const char* name) -> std::optional<std::string> {
      const char* v = std::getenv(name);
      return v ? std::optional<std::string>(v) : std::nullopt;
    };
    try {
      if (auto v = env("GLOSSA_PORT")) port = std::stoi(*v);
      if (auto v = env("GLOSSA_SEED")) seed = std::stoull(*v);
    } catch (const std::logic_error&) {
      throw InvalidConfig("GLOSSA_PORT and GLOSSA_SEED must be integers");
    }
    if (auto v = env("GLOSSA_STORE")) store = *v;
    if (auto v = env("GLOSSA_TOKEN")) token = *v;
    if (auto v = env("GLOSSA_TAGGERS")) taggers = parse_tagger_list(*v);
    if (auto v = env("GLOSSA_BASE")) base = *v;
    if (auto v = env("GLOSSA_PARALLEL")) parallel = *v;
    if (auto v = env("GLOSSA_TEST")) test = *v;
  }

  void validate() const {
    if (port < 0 || port > 65535) throw InvalidConfig("port out of range");
    if (taggers.empty()) throw InvalidConfig("no taggers configured");
    if (base.empty() || test.empty()) throw InvalidConfig("base and test corpus directories are required");
  }
};

/// Defaults, then the JSON file (if any), then the environment.
inline ServiceConfig load_service_config(const std::filesystem::path& file = {}) {
  ServiceConfig c;
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw InvalidConfig("cannot open config " + file.string());
    try {
      c.merge_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::exception& e) {
      throw InvalidConfig("bad config " + file.string() + ": " + e.what());
    }
  }
  c.merge_env();
  return c;
}

// ---------------------------------------------------------------------------
// Service types

enum class TaskStatus { pending, in_review, accepted };

inline std::string_view to_string(TaskStatus s) {
  return s == TaskStatus::pending ? "pending" : s == TaskStatus::in_review ? "in_review" : "accepted";
}

struct TaskSentence {
  std::vector<std::string> tokens;
  bool excluded = false;
  std::vector<Tag> tags;  // predicted, or the accepted tags for a review
  std::vector<double> confidence;
};

struct AnnotationTask {
  std::string task_id;
  std::string narrative_id;
  std::string method;
  int model_version = 0;  // 0 for review tasks
  TaskStatus status = TaskStatus::pending;
  std::string supersedes;  // record a review task replaces
  std::vector<TaskSentence> sentences;
};

/// One line of the record log.
struct AnnotationRecord {
  std::string record_id;
  std::string task_id;
  std::string narrative_id;
  std::string kind;  // "accept" or "review"
  std::string supersedes;
  std::string annotator_id;
  std::string timestamp;
  std::vector<std::vector<Tag>> tags;
  std::size_t changed_count = 0;
  std::optional<IterationRecord> iteration;  // accepts only
};

inline void to_json(nlohmann::json& j, const AnnotationRecord& r) {
  nlohmann::json tags = nlohmann::json::array();
  for (const auto& s : r.tags) {
    nlohmann::json row = nlohmann::json::array();
    for (const auto& t : s) row.push_back(t.str());
    tags.push_back(std::move(row));
  }
  j = nlohmann::json{{"record_id", r.record_id},   {"task_id", r.task_id},     {"narrative_id", r.narrative_id},
                     {"kind", r.kind},             {"supersedes", r.supersedes}, {"annotator_id", r.annotator_id},
                     {"timestamp", r.timestamp},   {"tags", std::move(tags)},  {"changed_count", r.changed_count}};
  if (r.iteration) j["iteration"] = *r.iteration;
}

inline void from_json(const nlohmann::json& j, AnnotationRecord& r) {
  j.at("record_id").get_to(r.record_id);
  j.at("task_id").get_to(r.task_id);
  j.at("narrative_id").get_to(r.narrative_id);
  j.at("kind").get_to(r.kind);
  j.at("supersedes").get_to(r.supersedes);
  j.at("annotator_id").get_to(r.annotator_id);
  j.at("timestamp").get_to(r.timestamp);
  j.at("changed_count").get_to(r.changed_count);
  r.tags.clear();
  for (const auto& row : j.at("tags")) {
    std::vector<Tag> s;
    for (const auto& t : row) s.push_back(parse_tag(t.get<std::string>()));
    r.tags.push_back(std::move(s));
  }
  if (j.contains("iteration")) r.iteration = j.at("iteration").get<IterationRecord>();
}

enum class TicketState { queued, running, done, failed };

inline std::string_view to_string(TicketState s) {
  static const char* names[] = {"queued", "running", "done", "failed"};
  return names[static_cast<int>(s)];
}

struct RetrainTicket {
  std::string ticket;
  TicketState state = TicketState::queued;
  int model_version = 0;  // version this ticket produced, once done
  std::size_t records = 0;  // records covered by the retrain
  std::string error;
};

struct SubmitResult {
  std::string task_id;
  std::string record_id;
  std::size_t changed_count = 0;
  std::string ticket;
  bool duplicate = false;  // a retry of an already accepted submission
};

namespace detail {

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline void write_file_atomically(const std::filesystem::path& path, const std::string& content) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw ParseError("cannot write " + tmp.string());
    out << content;
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// The service

/// Thread-safe. Construction replays the store; a worker thread then trains
/// the first ensemble, and next_task() reports ModelNotReady until it lands.
class AnnotationService {
 public:
  AnnotationService(AlConfig cfg, const ExperimentData& data, std::filesystem::path store)
      : cfg_(std::move(cfg)),
        res_(prepare_resources(data, cfg_)),
        al_(cfg_, res_, data.test_griko()),
        store_(std::move(store)) {
    std::filesystem::create_directories(store_ / "checkpoints");
    replay_store();
    worker_ = std::thread([this] { work(); });
  }

  ~AnnotationService() {
    {
      std::lock_guard lock(mu_);
      stop_ = true;
    }
    cv_.notify_all();
    worker_.join();
  }

  AnnotationService(const AnnotationService&) = delete;
  AnnotationService& operator=(const AnnotationService&) = delete;

  /// The task for the shortest remaining narrative; the same task until it
  /// is accepted or a newer model replaces it.
  AnnotationTask next_task() {
    std::lock_guard lock(mu_);
    if (al_.done()) throw QueueEmpty("every narrative has been annotated");
    if (!models_) throw ModelNotReady(init_error_.empty() ? "initial training in progress" : init_error_);
    if (current_ && tasks_.at(*current_).task.model_version == version_) return tasks_.at(*current_).task;
    if (current_) {  // superseded by the newer model
      tasks_.erase(*current_);
      superseded_.insert(*current_);
    }
    const auto proposal = al_.propose(*models_);
    const auto& n = al_.current();
    AnnotationTask t;
    t.task_id = n.id + "@" + std::to_string(version_);
    t.narrative_id = n.id;
    t.method = proposal.method;
    t.model_version = version_;
    t.status = TaskStatus::in_review;
    for (std::size_t i = 0; i < n.sentences.size(); ++i)
      t.sentences.push_back({surfaces(n.sentences[i]), n.sentences[i].excluded, proposal.sentences[i].tags,
                             proposal.sentences[i].confidence});
    tasks_[t.task_id] = {t, models_, {}, {}};
    current_ = t.task_id;
    return t;
  }

  /// Validates and persists one submission, then queues a retrain.
  /// `tags` holds one list per sentence (empty for excluded sentences).
  SubmitResult submit(const std::string& task_id, const std::vector<std::vector<std::string>>& tags,
                      const std::string& annotator_id = "annotator") {
    std::lock_guard lock(mu_);
    auto it = tasks_.find(task_id);
    if (it == tasks_.end()) {
      if (superseded_.count(task_id)) throw StaleTask("task " + task_id + " was superseded");
      throw TaskNotFound("no task " + task_id);
    }
    auto& entry = it->second;
    const auto parsed = parse_submission(entry.task, tags);
    if (entry.task.status == TaskStatus::accepted) {
      if (parsed == entry.accepted_tags) return entry.result_with(true);
      throw StaleTask("task " + task_id + " was already accepted with different tags");
    }

    AnnotationRecord rec;
    rec.record_id = "rec-" + std::to_string(records_.size() + 1);
    rec.task_id = task_id;
    rec.narrative_id = entry.task.narrative_id;
    rec.annotator_id = annotator_id;
    rec.timestamp = detail::utc_timestamp();
    rec.tags = parsed;
    rec.changed_count = changed(entry.task, parsed);
    if (entry.task.supersedes.empty()) {
      rec.kind = "accept";
      rec.iteration = al_.accept(*entry.models, parsed);
      current_.reset();
    } else {
      rec.kind = "review";
      rec.supersedes = entry.task.supersedes;
      al_.revise(rec.narrative_id, parsed);
    }
    append(rec);
    latest_record_[rec.narrative_id] = rec.record_id;
    entry.task.status = TaskStatus::accepted;
    entry.accepted_tags = parsed;
    entry.result = {task_id, rec.record_id, rec.changed_count, enqueue_retrain(), false};
    cv_.notify_all();
    return entry.result;
  }

  /// A review task over an accepted narrative, prefilled with its current
  /// tags. Submitting it writes a record superseding the latest one.
  AnnotationTask reopen(const std::string& task_id) {
    std::lock_guard lock(mu_);
    auto it = tasks_.find(task_id);
    if (it == tasks_.end()) throw TaskNotFound("no task " + task_id);
    if (it->second.task.status != TaskStatus::accepted) throw StaleTask("task " + task_id + " is not accepted yet");
    const auto narrative_id = it->second.task.narrative_id;
    const auto* n = accepted_narrative(narrative_id);
    AnnotationTask t;
    t.task_id = narrative_id + "@review-" + std::to_string(++reviews_);
    t.narrative_id = narrative_id;
    t.method = "review";
    t.status = TaskStatus::in_review;
    t.supersedes = latest_record_.at(narrative_id);
    for (const auto& s : n->sentences)
      t.sentences.push_back({surfaces(s), s.excluded, s.excluded ? std::vector<Tag>{} : *s.tags,
                             std::vector<double>(s.excluded ? 0 : s.size(), 1.0)});
    tasks_[t.task_id] = {t, nullptr, {}, {}};
    return t;
  }

  /// Queues a retrain over every record not yet in a trained model.
  RetrainTicket trigger_retrain() {
    std::lock_guard lock(mu_);
    if (!pending_.empty()) return tickets_.at(pending_.back());
    if (records_.size() <= (running_ ? running_records_ : trained_records_))
      throw NothingToRetrain("no accepted records since the last retrain");
    const auto id = enqueue_retrain();
    cv_.notify_all();
    return tickets_.at(id);
  }

  RetrainTicket ticket(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = tickets_.find(id);
    if (it == tickets_.end()) throw TaskNotFound("no retrain ticket " + id);
    return it->second;
  }

  /// Blocks until the ticket is done or failed, or the timeout passes.
  RetrainTicket wait(const std::string& id, std::chrono::milliseconds timeout = std::chrono::minutes(10)) const {
    std::unique_lock lock(mu_);
    if (!tickets_.count(id)) throw TaskNotFound("no retrain ticket " + id);
    done_cv_.wait_for(lock, timeout, [&] {
      const auto s = tickets_.at(id).state;
      return s == TicketState::done || s == TicketState::failed;
    });
    return tickets_.at(id);
  }

  /// Blocks until the first ensemble is live (or failed to train).
  bool wait_ready(std::chrono::milliseconds timeout = std::chrono::minutes(10)) const {
    std::unique_lock lock(mu_);
    return done_cv_.wait_for(lock, timeout, [&] { return models_ != nullptr || !init_error_.empty(); }) &&
           models_ != nullptr;
  }

  int model_version() const {
    std::lock_guard lock(mu_);
    return version_;
  }

  std::vector<IterationRecord> log() const {
    std::lock_guard lock(mu_);
    return al_.log();
  }

  std::vector<Sentence> pool() const {
    std::lock_guard lock(mu_);
    return al_.pool();
  }

  nlohmann::json metrics() const {
    std::lock_guard lock(mu_);
    nlohmann::json j;
    j["model_version"] = version_;
    j["iteration"] = al_.iteration();
    j["remaining"] = al_.queue().size() - static_cast<std::size_t>(al_.iteration());
    j["final_story"] = al_.final_story_id();
    j["selected_method"] = models_ ? al_.selected_name() : "";
    j["records"] = records_.size();
    j["log"] = log_to_json(al_.log());
    return j;
  }

  /// Atomic tags plus every tag seen in the annotated data or dictionaries.
  /// Any '+'-composite of atomic tags is also accepted on submission.
  std::vector<Tag> tagset() const {
    std::lock_guard lock(mu_);
    std::set<Tag> tags(kAtomicTags.begin(), kAtomicTags.end());
    for (const auto& s : al_.pool())
      for (const auto& t : *s.tags) tags.insert(t);
    for (const auto& t : res_.projected.tagset()) tags.insert(t);
    return {tags.begin(), tags.end()};
  }

  const std::filesystem::path& store() const { return store_; }

 private:
  struct TaskEntry {
    AnnotationTask task;
    std::shared_ptr<const Ensemble> models;  // the ensemble that made the predictions
    std::vector<std::vector<Tag>> accepted_tags;
    SubmitResult result;

    SubmitResult result_with(bool duplicate) const {
      auto r = result;
      r.duplicate = duplicate;
      return r;
    }
  };

  static std::vector<std::string> surfaces(const Sentence& s) {
    std::vector<std::string> out;
    for (const auto& t : s.tokens) out.push_back(t.surface);
    return out;
  }

  static std::vector<std::vector<Tag>> parse_submission(const AnnotationTask& t,
                                                        const std::vector<std::vector<std::string>>& tags) {
    if (tags.size() != t.sentences.size())
      throw LengthMismatch("task " + t.task_id + " has " + std::to_string(t.sentences.size()) + " sentences, got " +
                           std::to_string(tags.size()));
    std::vector<std::vector<Tag>> out;
    for (std::size_t i = 0; i < tags.size(); ++i) {
      const auto& s = t.sentences[i];
      out.emplace_back();
      if (s.excluded) continue;
      if (tags[i].size() != s.tokens.size())
        throw LengthMismatch("sentence " + std::to_string(i + 1) + " has " + std::to_string(s.tokens.size()) +
                             " tokens, got " + std::to_string(tags[i].size()) + " tags");
      for (const auto& str : tags[i]) {
        auto tag = try_parse_tag(str);
        if (!tag) throw UnknownTag("'" + str + "' in sentence " + std::to_string(i + 1) + " is not a tag");
        out.back().push_back(*tag);
      }
    }
    return out;
  }

  static std::size_t changed(const AnnotationTask& t, const std::vector<std::vector<Tag>>& final_tags) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < t.sentences.size(); ++i)
      for (std::size_t k = 0; k < final_tags[i].size(); ++k) n += final_tags[i][k] != t.sentences[i].tags[k];
    return n;
  }

  const Narrative* accepted_narrative(const std::string& id) const {
    for (int i = 0; i < al_.iteration(); ++i)
      if (al_.queue()[static_cast<std::size_t>(i)].id == id) return &al_.queue()[static_cast<std::size_t>(i)];
    throw TaskNotFound("narrative " + id + " has not been accepted");
  }

  /// Records join the queued ticket if there is one, else a new ticket.
  std::string enqueue_retrain() {
    if (pending_.empty()) {
      const auto id = "retrain-" + std::to_string(tickets_.size() + 1);
      tickets_[id] = {id, TicketState::queued, 0, records_.size(), {}};
      pending_.push_back(id);
    }
    auto& t = tickets_.at(pending_.back());
    t.records = records_.size();
    return t.ticket;
  }

  void append(const AnnotationRecord& rec) {
    {
      std::ofstream out(store_ / "records.ndjson", std::ios::app);
      out << nlohmann::json(rec).dump() << '\n';
      out.flush();
      if (!out) throw ParseError("cannot append to " + (store_ / "records.ndjson").string());
    }
    records_.push_back(rec);
    detail::write_file_atomically(store_ / "checkpoints" / "al_log.json", log_to_json(al_.log()).dump(2) + "\n");
  }

  void replay_store() {
    const auto path = store_ / "records.ndjson";
    if (!std::filesystem::exists(path)) return;
    std::ifstream in(path);
    std::string line;
    std::vector<IterationRecord> log;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      AnnotationRecord rec;
      try {
        rec = nlohmann::json::parse(line).get<AnnotationRecord>();
      } catch (const std::exception& e) {
        if (in.peek() == std::char_traits<char>::eof()) break;  // torn final write
        throw ParseError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
      }
      if (rec.kind == "accept") {
        if (al_.done() || al_.current().id != rec.narrative_id)
          throw ParseError(path.string() + ":" + std::to_string(line_no) + ": record for " + rec.narrative_id +
                           " is out of queue order");
        al_.replay(rec.tags);
        if (rec.iteration) log.push_back(*rec.iteration);
      } else {
        al_.revise(rec.narrative_id, rec.tags);
        ++reviews_;
      }
      AnnotationTask t;
      t.task_id = rec.task_id;
      t.narrative_id = rec.narrative_id;
      t.status = TaskStatus::accepted;
      t.supersedes = rec.supersedes;
      const auto* n = accepted_narrative(rec.narrative_id);
      for (const auto& s : n->sentences) t.sentences.push_back({surfaces(s), s.excluded, {}, {}});
      tasks_[rec.task_id] = {t, nullptr, rec.tags, {rec.task_id, rec.record_id, rec.changed_count, "", false}};
      latest_record_[rec.narrative_id] = rec.record_id;
      records_.push_back(std::move(rec));
    }
    al_.restore_log(std::move(log));
    trained_records_ = records_.size();
  }

  /// Background worker: first the initial ensemble, then queued tickets in
  /// order. Training runs outside the lock; the swap happens under it.
  void work() {
    try {
      const auto base_models = std::make_shared<const Ensemble>(train_ensemble(cfg_, res_, res_.base));
      std::vector<Sentence> pool;
      bool has_log;
      {
        std::lock_guard lock(mu_);
        pool = al_.pool();
        has_log = !al_.log().empty();
      }
      const auto starter = has_log ? 0 : select_starter(cfg_, res_);
      auto current = pool.size() == res_.base.size() ? base_models
                                                     : std::make_shared<const Ensemble>(train_ensemble(cfg_, res_, pool));
      std::lock_guard lock(mu_);
      al_.start(base_models, starter);
      models_ = std::move(current);
      version_ = 1;
    } catch (const std::exception& e) {
      std::lock_guard lock(mu_);
      init_error_ = std::string("initial training failed: ") + e.what();
    }
    done_cv_.notify_all();

    while (true) {
      std::string id;
      std::vector<Sentence> pool;
      std::size_t covered = 0;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stop_ || (!pending_.empty() && models_); });
        if (stop_) return;
        id = pending_.front();
        pending_.pop_front();
        auto& t = tickets_.at(id);
        t.state = TicketState::running;
        pool = al_.pool();
        covered = records_.size();
        t.records = covered;
        running_ = true;
        running_records_ = covered;
      }
      std::shared_ptr<const Ensemble> fresh;
      std::string error;
      try {
        fresh = std::make_shared<const Ensemble>(train_ensemble(cfg_, res_, pool));
      } catch (const std::exception& e) {
        error = e.what();
      }
      {
        std::lock_guard lock(mu_);
        auto& t = tickets_.at(id);
        running_ = false;
        if (fresh) {
          models_ = std::move(fresh);
          ++version_;
          trained_records_ = covered;
          t.state = TicketState::done;
          t.model_version = version_;
        } else {
          t.state = TicketState::failed;
          t.error = RetrainFailed(error).what();
        }
      }
      done_cv_.notify_all();
    }
  }

  AlConfig cfg_;
  AlResources res_;
  ActiveLearning al_;
  std::filesystem::path store_;

  mutable std::mutex mu_;
  std::condition_variable cv_;  // wakes the worker
  mutable std::condition_variable done_cv_;  // ticket and model changes
  std::thread worker_;
  bool stop_ = false;

  std::shared_ptr<const Ensemble> models_;
  int version_ = 0;
  std::string init_error_;
  std::map<std::string, TaskEntry> tasks_;
  std::set<std::string> superseded_;
  std::optional<std::string> current_;
  int reviews_ = 0;
  std::vector<AnnotationRecord> records_;
  std::map<std::string, std::string> latest_record_;  // narrative -> newest record id
  std::map<std::string, RetrainTicket> tickets_;
  std::deque<std::string> pending_;  // at most one queued ticket
  bool running_ = false;
  std::size_t running_records_ = 0;
  std::size_t trained_records_ = 0;
};

}  // namespace glossa
