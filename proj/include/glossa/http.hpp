#pragma once

// HTTP+JSON front end of the annotation service.
//
//   GET  /api/tasks/next           current task
//   POST /api/tasks/{id}/submit    {"tags": [[...], ...], "annotator_id": "..."}
//   POST /api/tasks/{id}/reopen    review task over an accepted narrative
//   POST /api/retrain              queue a retrain, returns its ticket
//   GET  /api/retrain/{ticket}     ticket status
//   GET  /api/metrics              model version, progress and the log
//   GET  /api/tagset               tags offered to annotators
//
// Errors are {"error": kind, "message": text} with 400 (bad input),
// 401 (token), 404 (unknown or exhausted), 409 (stale or nothing to do) or
// 503 (model not ready).

#include <chrono>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "glossa/service.hpp"

// After Eigen: resolv.h, pulled in by httplib, defines a `_res` macro that
// clashes with Eigen parameter names.
#include "httplib.h"
#include "json.hpp"

namespace glossa {

inline nlohmann::json task_json(const AnnotationTask& t) {
  nlohmann::json sentences = nlohmann::json::array();
  for (const auto& s : t.sentences) {
    nlohmann::json tags = nlohmann::json::array();
    for (const auto& tag : s.tags) tags.push_back(tag.str());
    sentences.push_back({{"tokens", s.tokens}, {"excluded", s.excluded}, {"tags", tags}, {"confidence", s.confidence}});
  }
  return {{"task_id", t.task_id},
          {"narrative_id", t.narrative_id},
          {"method", t.method},
          {"model_version", t.model_version},
          {"status", to_string(t.status)},
          {"supersedes", t.supersedes},
          {"sentences", std::move(sentences)}};
}

inline nlohmann::json ticket_json(const RetrainTicket& t) {
  nlohmann::json j = {{"ticket", t.ticket}, {"status", to_string(t.state)}, {"records", t.records}};
  if (t.state == TicketState::done) j["model_version"] = t.model_version;
  if (t.state == TicketState::failed) j["error"] = t.error;
  return j;
}

inline int http_status(const Error& e) {
  const auto& k = e.kind();
  if (k == "QueueEmpty" || k == "TaskNotFound") return 404;
  if (k == "ModelNotReady") return 503;
  if (k == "StaleTask" || k == "NothingToRetrain") return 409;
  if (k == "RetrainFailed") return 500;
  return 400;
}

namespace detail {

inline void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

inline void send_error(httplib::Response& res, int status, const std::string& kind, const std::string& message) {
  send_json(res, status, {{"error", kind}, {"message", message}});
}

/// Runs `f`, mapping library errors and malformed JSON to error responses.
template <class F>
httplib::Server::Handler guarded(const std::string& token, F f) {
  return [token, f](const httplib::Request& req, httplib::Response& res) {
    if (!token.empty()) {
      const auto auth = req.get_header_value("Authorization");
      if (auth != "Bearer " + token && req.get_header_value("X-Glossa-Token") != token)
        return send_error(res, 401, "Unauthorized", "missing or wrong token");
    }
    try {
      f(req, res);
    } catch (const Error& e) {
      send_error(res, http_status(e), e.kind(), e.what());
    } catch (const nlohmann::json::exception& e) {
      send_error(res, 400, "ParseError", e.what());
    }
  };
}

}  // namespace detail

/// Registers the API routes on `server`. `service` must outlive it.
inline void mount_api(httplib::Server& server, AnnotationService& service, const std::string& token = {}) {
  using detail::guarded;
  using detail::send_json;
  using Req = httplib::Request;
  using Res = httplib::Response;

  server.Get("/api/tasks/next",
             guarded(token, [&service](const Req&, Res& res) { send_json(res, 200, task_json(service.next_task())); }));

  server.Post("/api/tasks/:id/submit", guarded(token, [&service](const Req& req, Res& res) {
                const auto body = nlohmann::json::parse(req.body);
                const auto tags = body.at("tags").get<std::vector<std::vector<std::string>>>();
                const auto annotator = body.value("annotator_id", std::string("annotator"));
                const auto r = service.submit(req.path_params.at("id"), tags, annotator);
                send_json(res, 200,
                          {{"task_id", r.task_id},
                           {"record_id", r.record_id},
                           {"status", "accepted"},
                           {"changed_count", r.changed_count},
                           {"ticket", r.ticket},
                           {"duplicate", r.duplicate}});
              }));

  server.Post("/api/tasks/:id/reopen", guarded(token, [&service](const Req& req, Res& res) {
                send_json(res, 200, task_json(service.reopen(req.path_params.at("id"))));
              }));

  server.Post("/api/retrain", guarded(token, [&service](const Req&, Res& res) {
                send_json(res, 202, ticket_json(service.trigger_retrain()));
              }));

  server.Get("/api/retrain/:ticket", guarded(token, [&service](const Req& req, Res& res) {
               send_json(res, 200, ticket_json(service.ticket(req.path_params.at("ticket"))));
             }));

  server.Get("/api/metrics", guarded(token, [&service](const Req&, Res& res) { send_json(res, 200, service.metrics()); }));

  server.Get("/api/tagset", guarded(token, [&service](const Req&, Res& res) {
               nlohmann::json tags = nlohmann::json::array();
               for (const auto& t : service.tagset()) tags.push_back(t.str());
               nlohmann::json atomic = nlohmann::json::array();
               for (auto name : kAtomicTagNames) atomic.push_back(std::string(name));
               send_json(res, 200, {{"tags", tags}, {"atomic", atomic}, {"composite_separator", "+"}});
             }));
}

/// Client side of the loop: fetches tasks, submits what `annotate` returns
/// and waits for each retrain before asking for the next task, so every
/// task comes from a model trained on all accepted narratives. Returns the
/// number of submitted tasks; throws AnnotatorUnavailable when the service
/// stops answering within `timeout`.
using TaskAnnotator = std::function<std::vector<std::vector<std::string>>(const nlohmann::json& task)>;

inline int drive_service(httplib::Client& client, const TaskAnnotator& annotate,
                         std::chrono::milliseconds timeout = std::chrono::minutes(5), int max_tasks = -1) {
  using clock = std::chrono::steady_clock;
  auto call = [&](auto&& request) {
    const auto deadline = clock::now() + timeout;
    while (true) {
      auto res = request();
      if (res && res->status != 503) return res;
      if (clock::now() > deadline) throw AnnotatorUnavailable("annotation service did not answer in time");
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  };
  int done = 0;
  while (max_tasks < 0 || done < max_tasks) {
    auto next = call([&] { return client.Get("/api/tasks/next"); });
    if (next->status == 404) break;
    if (next->status != 200) throw AnnotatorUnavailable("GET /api/tasks/next returned " + std::to_string(next->status));
    const auto task = nlohmann::json::parse(next->body);
    const nlohmann::json body = {{"tags", annotate(task)}, {"annotator_id", "scripted"}};
    const auto path = "/api/tasks/" + task.at("task_id").get<std::string>() + "/submit";
    auto sub = call([&] { return client.Post(path, body.dump(), "application/json"); });
    if (sub->status != 200) throw AnnotatorUnavailable("submit returned " + std::to_string(sub->status) + ": " + sub->body);
    ++done;
    const auto ticket = nlohmann::json::parse(sub->body).at("ticket").get<std::string>();
    const auto deadline = clock::now() + timeout;
    while (true) {
      auto st = call([&] { return client.Get("/api/retrain/" + ticket); });
      const auto status = nlohmann::json::parse(st->body).value("status", "");
      if (status == "done") break;
      if (status == "failed") throw RetrainFailed(st->body);
      if (clock::now() > deadline) throw AnnotatorUnavailable("retrain " + ticket + " did not finish in time");
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
  }
  return done;
}

}  // namespace glossa
