// glossa: command-line front end for corpus tools, training, tagging,
// projection, experiments and the annotation service.

#include <atomic>
#include <chrono>
#include <fstream>
#include <iostream>
#include <thread>

#include "glossa/glossa.hpp"
#include "glossa/http.hpp"

#include "CLI11.hpp"

using namespace glossa;
namespace fs = std::filesystem;

namespace {

std::ostream& open_out(const std::string& path, std::ofstream& file) {
  if (path.empty() || path == "-") return std::cout;
  file.open(path);
  if (!file) throw ParseError("cannot write " + path);
  return file;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write " + path.string());
  out << text;
}

struct DataPaths {
  std::string base, parallel, test;

  void add(CLI::App* cmd, bool need_test = true) {
    cmd->add_option("--base", base, "annotated corpus directory")->required();
    cmd->add_option("--parallel", parallel, "parallel corpus directory (.grk + tagged .ita)");
    auto* t = cmd->add_option("--test", test, "test corpus directory");
    if (need_test) t->required();
  }

  ExperimentData load() const {
    if (test.empty()) {
      ExperimentData d;
      d.base = read_corpus(base).narratives;
      if (!parallel.empty()) d.parallel = read_corpus(parallel).parallel_narratives();
      return d;
    }
    return load_experiment(base, parallel, test);
  }
};

void corpus_commands(CLI::App& app) {
  auto* corpus = app.add_subcommand("corpus", "inspect and prepare corpora")->require_subcommand(1);

  static std::string stats_dir;
  static bool stats_json = false;
  auto* stats = corpus->add_subcommand("stats", "story, sentence, type and token counts");
  stats->add_option("dir", stats_dir)->required();
  stats->add_flag("--json", stats_json);
  stats->callback([] {
    const auto r = corpus_stats(read_corpus(stats_dir));
    if (stats_json) {
      std::cout << nlohmann::json{{"stories", r.stories},
                                  {"sentences", r.sentences},
                                  {"excluded_sentences", r.excluded_sentences},
                                  {"griko", {{"types", r.griko.types}, {"tokens", r.griko.tokens}}},
                                  {"italian", {{"types", r.italian.types}, {"tokens", r.italian.tokens}}}}
                       .dump(2)
                << '\n';
      return;
    }
    std::cout << "stories\t" << r.stories << "\nsentences\t" << r.sentences << "\nexcluded\t" << r.excluded_sentences
              << "\ngriko_types\t" << r.griko.types << "\ngriko_tokens\t" << r.griko.tokens << "\nitalian_types\t"
              << r.italian.types << "\nitalian_tokens\t" << r.italian.tokens << '\n';
  });

  static std::string validate_dir;
  auto* validate = corpus->add_subcommand("validate", "check corpus invariants; exit 1 on problems");
  validate->add_option("dir", validate_dir)->required();
  validate->callback([] {
    const auto problems = validate_corpus(read_corpus(validate_dir));
    for (const auto& p : problems) std::cout << p << '\n';
    if (!problems.empty()) throw CLI::RuntimeError(1);
    std::cout << "ok\n";
  });

  static std::string elisions;
  auto* tokenize_cmd = corpus->add_subcommand("tokenize", "normalize and tokenize raw lines from stdin");
  tokenize_cmd->add_option("--elisions", elisions, "file with one elision per line");
  tokenize_cmd->callback([] {
    const auto tok = elisions.empty() ? Tokenizer() : Tokenizer::from_file(elisions);
    std::string line;
    while (std::getline(std::cin, line)) {
      const auto words = tok(normalize(line));
      for (std::size_t i = 0; i < words.size(); ++i) std::cout << (i ? " " : "") << words[i];
      std::cout << '\n';
    }
  });
}

void train_command(CLI::App& app) {
  static DataPaths paths;
  static std::string tagger = "crf-mod", model_out;
  auto* cmd = app.add_subcommand("train", "train one tagger on the annotated corpus");
  paths.add(cmd, false);
  cmd->add_option("--tagger", tagger, "crf, crf-mod, neural or gdb, optionally +clp")->capture_default_str();
  cmd->add_option("-o,--output", model_out, "model file")->required();
  cmd->callback([] {
    const auto spec = TaggerSpec::parse(tagger);
    const auto data = paths.load();
    TrainingData td;
    td.annotated = tagged_sentences(data.base);
    if (spec.projection) {
      if (data.parallel.empty()) throw InvalidConfig(spec.name() + " needs --parallel");
      td.projected = build_projected_dictionary(data.parallel, {});
    }
    if (spec.kind == TaggerKind::gdb) td.mono = data.mono();
    const auto model = train_tagger(spec, td);
    save_tagger(fs::path(model_out), *model);
    std::cerr << "trained " << model->name() << " on " << td.annotated.size() << " sentences\n";
  });
}

void tag_command(CLI::App& app) {
  static std::string model_path, input, output;
  auto* cmd = app.add_subcommand("tag", "tag every narrative of a corpus directory");
  cmd->add_option("-m,--model", model_path)->required();
  cmd->add_option("input", input, "corpus directory")->required();
  cmd->add_option("-o,--output", output, "output corpus directory")->required();
  cmd->callback([] {
    const auto tagger = load_tagger(fs::path(model_path));
    auto corpus = read_corpus(input);
    std::size_t tokens = 0;
    for (auto& n : corpus.narratives)
      for (auto& s : n.sentences) {
        if (s.excluded || s.empty()) continue;
        s.tags = tagger->tag(s.norms()).tags;
        tokens += s.size();
      }
    write_corpus(output, corpus);
    std::cerr << "tagged " << tokens << " tokens with " << tagger->name() << '\n';
  });
}

void project_command(CLI::App& app) {
  static std::string parallel, test, mode = "train_only", output;
  static double threshold = 0.9;
  static int min_freq = 5;
  auto* cmd = app.add_subcommand("project", "build a projected tag dictionary from parallel text");
  cmd->add_option("--parallel", parallel)->required();
  cmd->add_option("--test", test, "test corpus with tagged translations (transductive mode)");
  cmd->add_option("--mode", mode, "train_only or transductive")->capture_default_str();
  cmd->add_option("--threshold", threshold, "probability threshold for frequent links")->capture_default_str();
  cmd->add_option("--min-freq", min_freq, "link frequency threshold")->capture_default_str();
  cmd->add_option("-o,--output", output, "dictionary TSV (default stdout)");
  cmd->callback([] {
    ProjectionOptions po;
    po.mode = parse_projection_mode(mode);
    po.filter.p_high = threshold;
    po.filter.min_freq = min_freq;
    std::vector<ParallelNarrative> test_pairs;
    if (!test.empty()) test_pairs = read_corpus(test).parallel_narratives();
    ProjectionReport report;
    const auto dict = build_projected_dictionary(read_corpus(parallel).parallel_narratives(), test_pairs, po, &report);
    std::ofstream file;
    dict.write_tsv(open_out(output, file));
    std::cerr << "pairs " << report.pairs << ", links " << report.links << ", kept " << report.kept_links << ", types "
              << report.types << '\n';
  });
}

void grid_command(CLI::App& app) {
  static DataPaths paths;
  static std::string taggers = "crf,crf-mod,neural,gdb", conditions = "none,clp", output, json_out;
  auto* cmd = app.add_subcommand("grid", "tagger x data-condition accuracy table");
  paths.add(cmd);
  cmd->add_option("--taggers", taggers)->capture_default_str();
  cmd->add_option("--conditions", conditions, "none, clp, clpa with optional -mono / +tmono")->capture_default_str();
  cmd->add_option("-o,--output", output, "TSV table (default stdout)");
  cmd->add_option("--json", json_out, "also write the table as JSON");
  cmd->callback([] {
    std::vector<DataCondition> conds;
    std::stringstream ss(conditions);
    for (std::string c; std::getline(ss, c, ',');)
      if (!c.empty()) conds.push_back(DataCondition::parse(c));
    const auto cells = run_grid(parse_tagger_list(taggers), conds, paths.load());
    std::ofstream file;
    write_grid_tsv(open_out(output, file), cells);
    if (!json_out.empty()) {
      nlohmann::json j = nlohmann::json::array();
      for (const auto& c : cells)
        j.push_back({{"tagger", c.tagger},
                     {"condition", c.condition},
                     {"accuracy", c.accuracy},
                     {"tokens", c.tokens},
                     {"oov_rate", c.oov_rate}});
      write_text(json_out, j.dump(2) + "\n");
    }
  });
}

/// Serves the loop over HTTP until the queue is exhausted and the client has
/// seen the empty queue (or gone quiet); a service that sees no submission
/// for `idle` seconds gives up.
std::vector<IterationRecord> serve_until_done(AnnotationService& service, const std::string& host, int port,
                                              const std::string& token, int idle) {
  using clock = std::chrono::steady_clock;
  httplib::Server server;
  mount_api(server, service, token);
  std::atomic<bool> client_saw_end{false};
  std::atomic<clock::rep> last_request{clock::now().time_since_epoch().count()};
  server.set_logger([&](const httplib::Request& req, const httplib::Response& res) {
    last_request = clock::now().time_since_epoch().count();
    if (req.path == "/api/tasks/next" && res.status == 404) client_saw_end = true;
  });
  if (!server.bind_to_port(host, port)) throw InvalidConfig("cannot bind " + host + ":" + std::to_string(port));
  std::thread t([&] { server.listen_after_bind(); });
  std::cerr << "annotation service on http://" << host << ':' << port << '\n';
  auto shutdown = [&] {
    server.stop();
    t.join();
  };
  auto last_change = clock::now();
  std::size_t records = 0;
  while (true) {
    const auto m = service.metrics();
    const auto now = clock::now();
    if (m.at("records").get<std::size_t>() != records) {
      records = m.at("records").get<std::size_t>();
      last_change = now;
    }
    const auto quiet = now - clock::time_point(clock::duration(last_request.load()));
    if (m.at("remaining").get<std::size_t>() == 0 && (client_saw_end || quiet > std::chrono::seconds(10))) break;
    if (idle > 0 && now - last_change > std::chrono::seconds(idle)) {
      shutdown();
      throw AnnotatorUnavailable("no submission for " + std::to_string(idle) + " s");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
  }
  shutdown();
  return service.log();
}

void al_command(CLI::App& app) {
  static DataPaths paths;
  static std::string taggers, annotator = "oracle", out = "al-out", host = "127.0.0.1", token;
  static std::uint64_t seed = 1;
  static int port = 8080, idle = 3600;
  auto* cmd = app.add_subcommand("al", "narrative-level active learning over the test narratives");
  paths.add(cmd);
  cmd->add_option("--taggers", taggers, "default crf,crf-mod,crf-mod+clp,gdb,gdb+clp");
  cmd->add_option("--seed", seed, "starter-selection split seed")->capture_default_str();
  cmd->add_option("--annotator", annotator, "oracle, identity or service")
      ->check(CLI::IsMember({"oracle", "identity", "service"}))
      ->capture_default_str();
  cmd->add_option("--out", out, "output directory")->capture_default_str();
  cmd->add_option("--host", host, "service mode bind address")->capture_default_str();
  cmd->add_option("--port", port, "service mode port")->capture_default_str();
  cmd->add_option("--token", token, "service mode shared token");
  cmd->add_option("--idle-timeout", idle, "service mode: seconds without a submission before giving up")
      ->capture_default_str();
  cmd->callback([] {
    AlConfig cfg;
    if (!taggers.empty()) cfg.taggers = parse_tagger_list(taggers);
    cfg.seed = seed;
    const auto data = paths.load();
    std::vector<IterationRecord> log;
    if (annotator == "service") {
      AnnotationService service(cfg, data, fs::path(out) / "store");
      log = serve_until_done(service, host, port, token, idle);
    } else {
      const auto res = prepare_resources(data, cfg);
      const bool noisy = annotator == "identity";
      const auto run = run_active_learning(cfg, res, data.test_griko(),
                                           noisy ? identity_annotator() : oracle_annotator(), noisy);
      log = run.log;
    }
    write_text(fs::path(out) / "al_log.json", log_to_json(log).dump(2) + "\n");
    std::ostringstream curve;
    write_curve_tsv(curve, log);
    write_text(fs::path(out) / "curve.tsv", curve.str());
    std::cout << "iteration\tnarrative\tshown\tshown_acc\tbest\twith_al\twithout_al\n";
    for (const auto& r : log)
      std::cout << r.iteration << '\t' << r.narrative_id << '\t' << r.shown_method << '\t'
                << detail::format_double(r.shown_accuracy) << '\t' << r.best_method << '\t'
                << detail::format_double(r.accuracy_with_al) << '\t' << detail::format_double(r.accuracy_without_al)
                << '\n';
  });
}

void cv_command(CLI::App& app) {
  static std::string narratives, base, tagger = "crf-mod", output;
  auto* cmd = app.add_subcommand("cv", "leave-one-narrative-out cross-validation");
  cmd->add_option("narratives", narratives, "annotated corpus directory")->required();
  cmd->add_option("--base", base, "extra annotated corpus added to every fold");
  cmd->add_option("--tagger", tagger)->capture_default_str();
  cmd->add_option("-o,--output", output, "TSV (default stdout)");
  cmd->callback([] {
    TrainingData extra;
    if (!base.empty()) extra.annotated = tagged_sentences(read_corpus(base).narratives);
    const auto r = cross_validate(read_corpus(narratives).narratives, TaggerSpec::parse(tagger), extra);
    std::ofstream file;
    auto& out = open_out(output, file);
    out << "narrative\taccuracy\ttokens\n";
    for (const auto& f : r.folds) out << f.narrative_id << '\t' << detail::format_double(f.accuracy) << '\t' << f.tokens << '\n';
    out << "# mean " << detail::format_double(r.summary.mean) << " sd " << detail::format_double(r.summary.sd) << " min "
        << detail::format_double(r.summary.min) << " (" << r.summary.argmin << ") max "
        << detail::format_double(r.summary.max) << " (" << r.summary.argmax << ")\n";
  });
}

void serve_command(CLI::App& app) {
  static std::string config;
  auto* cmd = app.add_subcommand("serve", "run the annotation service");
  cmd->add_option("-c,--config", config, "JSON config; GLOSSA_* environment variables override it");
  cmd->callback([] {
    const auto cfg = load_service_config(config);
    cfg.validate();
    AnnotationService service(cfg.al_config(), load_experiment(cfg.base, cfg.parallel, cfg.test), cfg.store);
    httplib::Server server;
    mount_api(server, service, cfg.token);
    std::cerr << "annotation service on http://" << cfg.host << ':' << cfg.port << ", store " << fs::path(cfg.store).string() << '\n';
    if (!server.listen(cfg.host, cfg.port)) throw InvalidConfig("cannot listen on " + cfg.host + ":" + std::to_string(cfg.port));
  });
}

void client_command(CLI::App& app) {
  static std::string url = "http://127.0.0.1:8080", test, token, annotator = "oracle";
  static int max_tasks = -1, timeout = 300;
  auto* cmd = app.add_subcommand("client", "scripted annotator driving a running service");
  cmd->add_option("--url", url)->capture_default_str();
  cmd->add_option("--test", test, "test corpus directory (gold tags for the oracle)");
  cmd->add_option("--annotator", annotator, "oracle or identity")
      ->check(CLI::IsMember({"oracle", "identity"}))
      ->capture_default_str();
  cmd->add_option("--token", token);
  cmd->add_option("--max-tasks", max_tasks, "stop after this many submissions (-1: until the queue is empty)");
  cmd->add_option("--timeout", timeout, "seconds to wait for the service")->capture_default_str();
  cmd->callback([] {
    std::map<std::string, std::vector<std::vector<std::string>>> gold;
    if (annotator == "oracle") {
      if (test.empty()) throw InvalidConfig("the oracle client needs --test");
      for (const auto& n : read_corpus(test).narratives)
        for (const auto& tags : oracle_corrections(n)) {
          auto& rows = gold[n.id];
          rows.emplace_back();
          for (const auto& t : tags) rows.back().push_back(t.str());
        }
    }
    httplib::Client client(url);
    if (!token.empty()) client.set_default_headers({{"Authorization", "Bearer " + token}});
    const int n = drive_service(
        client,
        [&gold](const nlohmann::json& task) {
          if (annotator == "oracle") {
            const auto it = gold.find(task.at("narrative_id").get<std::string>());
            if (it == gold.end()) throw TaskNotFound("no gold tags for " + task.at("narrative_id").get<std::string>());
            return it->second;
          }
          std::vector<std::vector<std::string>> tags;
          for (const auto& s : task.at("sentences")) tags.push_back(s.at("tags").get<std::vector<std::string>>());
          return tags;
        },
        std::chrono::seconds(timeout), max_tasks);
    std::cerr << "submitted " << n << " tasks\n";
  });
}

void synth_command(CLI::App& app) {
  static DiglotConfig cfg;
  static std::string out;
  auto* cmd = app.add_subcommand("synth", "write a seeded synthetic diglot corpus (base/, parallel/, test/)");
  cmd->add_option("--seed", cfg.seed)->capture_default_str();
  cmd->add_option("--test-narratives", cfg.test_narratives)->capture_default_str();
  cmd->add_option("--parallel-narratives", cfg.parallel_narratives)->capture_default_str();
  cmd->add_option("-o,--output", out, "output directory")->required();
  cmd->callback([] {
    write_diglot(out, generate_diglot(cfg));
    std::cerr << "wrote " << out << "/{base,parallel,test}\n";
  });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"glossa: POS tagging for a low-resource language with projection and active learning"};
  app.require_subcommand(1);
  corpus_commands(app);
  train_command(app);
  tag_command(app);
  project_command(app);
  grid_command(app);
  al_command(app);
  cv_command(app);
  serve_command(app);
  client_command(app);
  synth_command(app);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.kind() << ": " << e.what() << '\n';
    return 2;
  }
  return 0;
}
