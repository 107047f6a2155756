/*
 * Copyright 2026 The Debias Workbench Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "debias/service.hpp"

#include <httplib.h>

#include <atomic>
#include <map>
#include <mutex>
#include <shared_mutex>

#include "debias/error.hpp"

namespace debias {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kJson = "application/json";

struct SessionSlot {
  std::unique_ptr<Session> session;
  std::mutex writer;  // serializes command + persist
};

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded()) throw Error(ErrorCode::kInvalidRequest, "request body is not valid JSON");
  return body;
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, const Error& e) {
  res.status = http_status(e.code());
  res.set_content(e.to_json().dump(), kJson);
}

std::string session_of(const std::string& resource_id) { return resource_id.substr(0, resource_id.find('-')); }

bool query_flag(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return false;
  const std::string v = req.get_param_value(key);
  if (v == "true" || v == "1" || v.empty()) return true;
  if (v == "false" || v == "0") return false;
  throw Error(ErrorCode::kInvalidRequest, std::string("query parameter '") + key + "' must be a boolean");
}

}  // namespace

struct Service::Impl {
  ServiceConfig config;
  httplib::Server server;
  mutable std::shared_mutex sessions_mutex;
  std::map<std::string, std::unique_ptr<SessionSlot>> sessions;
  std::atomic<size_t> next_session{1};

  Clock clock() const { return config.logical_clock ? logical_clock() : wall_clock(); }

  SessionSlot& slot(const std::string& resource_id, ErrorCode missing) {
    std::shared_lock lock(sessions_mutex);
    auto it = sessions.find(session_of(resource_id));
    if (it == sessions.end()) {
      throw Error(missing, "no resource '" + resource_id + "'", {{"id", resource_id}});
    }
    return *it->second;
  }

  void persist(const SessionSlot& s) const {
    if (!config.data_dir.empty()) s.session->persist(config.data_dir / s.session->id());
  }

  // Runs a mutating command under the session's single writer.
  json command(const std::string& resource_id, ErrorCode missing, const json& cmd) {
    SessionSlot& s = slot(resource_id, missing);
    std::lock_guard lock(s.writer);
    json result = s.session->execute(cmd);
    persist(s);
    return result;
  }

  void check_dataset(const std::string& dataset_id) {
    SessionSlot& s = slot(dataset_id, ErrorCode::kDatasetNotFound);
    if (!s.session->loaded() || s.session->dataset_id() != dataset_id) {
      throw Error(ErrorCode::kDatasetNotFound, "no dataset '" + dataset_id + "'", {{"dataset_id", dataset_id}});
    }
  }

  void restore() {
    if (config.data_dir.empty()) return;
    std::error_code ec;
    fs::create_directories(config.data_dir, ec);
    if (ec || !fs::is_directory(config.data_dir)) {
      throw Error(ErrorCode::kStorageFailure, "data directory " + config.data_dir.string() + " is not usable");
    }
    size_t max_index = 0;
    for (const auto& entry : fs::directory_iterator(config.data_dir)) {
      if (!entry.is_directory() || !fs::exists(entry.path() / "session.json")) continue;
      try {
        auto session = Session::restore(entry.path(), clock());
        const std::string id = session->id();
        if (id.size() > 1 && id[0] == 's') max_index = std::max(max_index, std::stoul(id.substr(1)));
        auto s = std::make_unique<SessionSlot>();
        s->session = std::move(session);
        sessions.emplace(id, std::move(s));
      } catch (const Error& e) {
        throw Error(ErrorCode::kStorageFailure,
                    "cannot restore " + entry.path().string() + ": " + e.what());
      }
    }
    next_session = max_index + 1;
  }

  void routes();

  template <typename F>
  auto guarded(F&& f) {
    return [f = std::forward<F>(f)](const httplib::Request& req, httplib::Response& res) {
      try {
        f(req, res);
      } catch (const Error& e) {
        send_error(res, e);
      } catch (const json::exception& e) {
        send_error(res, Error(ErrorCode::kInvalidRequest, e.what()));
      } catch (const std::invalid_argument& e) {
        send_error(res, Error(ErrorCode::kInvalidRequest, e.what()));
      } catch (const std::out_of_range& e) {
        send_error(res, Error(ErrorCode::kInvalidRequest, e.what()));
      } catch (const std::filesystem::filesystem_error& e) {
        send_error(res, Error(ErrorCode::kStorageFailure, e.what()));
      }
    };
  }
};

void Service::Impl::routes() {
  using Req = httplib::Request;
  using Res = httplib::Response;

  server.Post("/datasets", guarded([this](const Req& req, Res& res) {
    std::string csv_text;
    json schema_doc;
    if (req.is_multipart_form_data()) {
      if (!req.has_file("csv") || !req.has_file("schema")) {
        throw Error(ErrorCode::kInvalidRequest, "multipart upload needs 'csv' and 'schema' parts");
      }
      csv_text = req.get_file_value("csv").content;
      schema_doc = json::parse(req.get_file_value("schema").content, nullptr, false);
      if (schema_doc.is_discarded()) throw Error(ErrorCode::kInvalidSchema, "schema part is not valid JSON");
    } else {
      const json body = parse_body(req);
      if (!body.contains("csv") || !body.contains("schema")) {
        throw Error(ErrorCode::kInvalidRequest, "body needs 'csv' and 'schema'");
      }
      csv_text = body.at("csv").get<std::string>();
      schema_doc = body.at("schema");
    }
    const std::string id = "s" + std::to_string(next_session++);
    auto s = std::make_unique<SessionSlot>();
    s->session = std::make_unique<Session>(id, clock());
    const json result = s->session->execute({{"action", "load"}, {"csv", csv_text}, {"schema", schema_doc}});
    persist(*s);
    {
      std::unique_lock lock(sessions_mutex);
      sessions.emplace(id, std::move(s));
    }
    send_json(res, result, 201);
  }));

  server.Get(R"(/datasets/([^/]+))", guarded([this](const Req& req, Res& res) {
    const std::string id = req.matches[1];
    check_dataset(id);
    SessionSlot& s = slot(id, ErrorCode::kDatasetNotFound);
    const Dataset ds = s.session->working_dataset();
    send_json(res, {{"dataset_id", id},
                    {"session_id", s.session->id()},
                    {"version", s.session->dataset_version()},
                    {"row_count", ds.size()},
                    {"schema", schema_to_json(ds.schema())}});
  }));

  server.Get(R"(/datasets/([^/]+)/bias)", guarded([this](const Req& req, Res& res) {
    const std::string id = req.matches[1];
    check_dataset(id);
    json cmd = {{"action", "audit"}};
    if (req.has_param("threshold")) {
      const long long t = std::stoll(req.get_param_value("threshold"));
      if (t < 0) throw Error(ErrorCode::kInvalidRequest, "threshold must be >= 0");
      cmd["threshold"] = t;
    }
    send_json(res, slot(id, ErrorCode::kDatasetNotFound).session->execute(cmd));
  }));

  server.Get(R"(/datasets/([^/]+)/variables/([^/]+)/subgroups)", guarded([this](const Req& req, Res& res) {
    const std::string id = req.matches[1];
    check_dataset(id);
    send_json(res, slot(id, ErrorCode::kDatasetNotFound)
                       .session->execute({{"action", "subgroups"}, {"variable", std::string(req.matches[2])}}));
  }));

  server.Post(R"(/datasets/([^/]+)/models)", guarded([this](const Req& req, Res& res) {
    const std::string id = req.matches[1];
    check_dataset(id);
    json body = parse_body(req);
    json cmd = {{"action", "train"}};
    cmd["folds"] = body.contains("folds") ? body.at("folds") : json(5);
    cmd["scope"] = body.contains("scope") ? body.at("scope") : json("original");
    body.erase("folds");
    body.erase("scope");
    cmd["config"] = body.contains("config") ? body.at("config") : body;
    send_json(res, command(id, ErrorCode::kDatasetNotFound, cmd), 201);
  }));

  server.Get(R"(/models/([^/]+))", guarded([this](const Req& req, Res& res) {
    const std::string id = req.matches[1];
    send_json(res, slot(id, ErrorCode::kModelNotFound).session->model_json(id));
  }));

  server.Post(R"(/datasets/([^/]+)/plans)", guarded([this](const Req& req, Res& res) {
    const std::string id = req.matches[1];
    check_dataset(id);
    json body = parse_body(req);
    send_json(res, command(id, ErrorCode::kDatasetNotFound,
                           {{"action", "plan"}, {"plan", body.contains("plan") ? body.at("plan") : body}}),
              201);
  }));

  server.Get(R"(/plans/([^/]+))", guarded([this](const Req& req, Res& res) {
    const std::string id = req.matches[1];
    send_json(res, slot(id, ErrorCode::kPlanNotFound).session->plan_json(id));
  }));

  server.Post(R"(/plans/([^/]+)/generate)", guarded([this](const Req& req, Res& res) {
    const std::string id = req.matches[1];
    send_json(res, command(id, ErrorCode::kPlanNotFound, {{"action", "generate"}, {"plan_id", id}}), 201);
  }));

  server.Get(R"(/batches/([^/]+))", guarded([this](const Req& req, Res& res) {
    const std::string id = req.matches[1];
    send_json(res, slot(id, ErrorCode::kBatchNotFound).session->batch_json(id));
  }));

  server.Get(R"(/batches/([^/]+)/export)", guarded([this](const Req& req, Res& res) {
    const std::string id = req.matches[1];
    res.set_content(slot(id, ErrorCode::kBatchNotFound).session->batch_csv(id), "text/csv; charset=utf-8");
  }));

  // Batch mutations: the body may carry expected_version, or If-Match.
  auto batch_command = [this](const Req& req, json cmd) {
    const std::string id = req.matches[1];
    cmd["batch_id"] = id;
    if (!cmd.contains("expected_version") && req.has_header("If-Match")) {
      cmd["expected_version"] = std::stoull(req.get_header_value("If-Match"));
    }
    return command(id, ErrorCode::kBatchNotFound, cmd);
  };

  server.Post(R"(/batches/([^/]+)/annotate)", guarded([batch_command](const Req& req, Res& res) {
    json body = parse_body(req);
    json cmd = {{"action", "annotate"},
                {"model_id", body.value("model_id", std::string())},
                {"confidence_threshold", body.value("confidence_threshold", kDefaultConfidenceThreshold)}};
    if (body.contains("expected_version")) cmd["expected_version"] = body.at("expected_version");
    send_json(res, batch_command(req, cmd));
  }));

  server.Post(R"(/batches/([^/]+)/filter)", guarded([batch_command](const Req& req, Res& res) {
    json body = parse_body(req);
    send_json(res, batch_command(req, {{"action", "filter"},
                                        {"predicate", body.contains("predicate") ? body.at("predicate") : body}}));
  }));

  server.Post(R"(/batches/([^/]+)/remove)", guarded([batch_command](const Req& req, Res& res) {
    json body = parse_body(req);
    json cmd = {{"action", "remove"}, {"ids", body.value("ids", json::array())}};
    if (body.contains("expected_version")) cmd["expected_version"] = body.at("expected_version");
    send_json(res, batch_command(req, cmd));
  }));

  server.Post(R"(/batches/([^/]+)/samples/([^/]+)/whatif)", guarded([batch_command](const Req& req, Res& res) {
    json body = parse_body(req);
    json cmd = {{"action", "what_if"}, {"sample_id", std::string(req.matches[2])},
                {"edits", body.value("edits", json::array())}};
    if (body.contains("model_id")) cmd["model_id"] = body.at("model_id");
    send_json(res, batch_command(req, cmd));
  }));

  server.Post(R"(/batches/([^/]+)/samples/([^/]+)/edit)", guarded([batch_command](const Req& req, Res& res) {
    json body = parse_body(req);
    json cmd = {{"action", "edit"}, {"sample_id", std::string(req.matches[2])},
                {"edits", body.value("edits", json::array())}};
    if (body.contains("expected_version")) cmd["expected_version"] = body.at("expected_version");
    send_json(res, batch_command(req, cmd));
  }));

  server.Post(R"(/batches/([^/]+)/accept)", guarded([batch_command](const Req& req, Res& res) {
    json body = parse_body(req);
    json cmd = {{"action", "accept"}};
    if (body.contains("ids")) cmd["ids"] = body.at("ids");
    if (body.contains("expected_version")) cmd["expected_version"] = body.at("expected_version");
    send_json(res, batch_command(req, cmd));
  }));

  server.Get(R"(/datasets/([^/]+)/export)", guarded([this](const Req& req, Res& res) {
    const std::string id = req.matches[1];
    check_dataset(id);
    const json out =
        command(id, ErrorCode::kDatasetNotFound, {{"action", "export"}, {"provenance", query_flag(req, "provenance")}});
    res.set_content(out.at("csv").get<std::string>(), "text/csv; charset=utf-8");
  }));

  server.Get(R"(/sessions/([^/]+)/log)", guarded([this](const Req& req, Res& res) {
    const std::string id = req.matches[1];
    res.set_content(slot(id, ErrorCode::kSessionNotFound).session->log_ndjson(), "application/x-ndjson");
  }));

  server.Get(R"(/sessions/([^/]+))", guarded([this](const Req& req, Res& res) {
    const std::string id = req.matches[1];
    SessionSlot& s = slot(id, ErrorCode::kSessionNotFound);
    json out = {{"session_id", id},
                {"models", s.session->model_ids()},
                {"plans", s.session->plan_ids()},
                {"batches", s.session->batch_ids()},
                {"dataset_version", s.session->dataset_version()}};
    out["dataset_id"] = s.session->loaded() ? json(s.session->dataset_id()) : json();
    send_json(res, out);
  }));

  server.set_error_handler([](const Req& req, Res& res) {
    if (!res.body.empty()) return;
    const ErrorCode code = res.status == 404 ? ErrorCode::kNotFound : ErrorCode::kInvalidRequest;
    const int status = res.status;
    send_error(res, Error(code, "no route for " + req.method + " " + req.path));
    res.status = status;
  });
}

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>()) {
  impl_->config = std::move(config);
  impl_->restore();
  impl_->routes();
}

Service::~Service() { stop(); }

int Service::bind() {
  int port = impl_->config.port;
  if (port == 0) {
    port = impl_->server.bind_to_any_port(impl_->config.host);
  } else if (!impl_->server.bind_to_port(impl_->config.host, port)) {
    port = -1;
  }
  if (port < 0) {
    throw Error(ErrorCode::kBindFailure,
                "cannot bind " + impl_->config.host + ":" + std::to_string(impl_->config.port));
  }
  return port;
}

void Service::listen() { impl_->server.listen_after_bind(); }

void Service::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void Service::wait_until_ready() const { impl_->server.wait_until_ready(); }

size_t Service::session_count() const {
  std::shared_lock lock(impl_->sessions_mutex);
  return impl_->sessions.size();
}

}  // namespace debias
