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

#include <gtest/gtest.h>

#include <httplib.h>

#include <thread>

#include "debias/service.hpp"
#include "debias/session.hpp"
#include "fixtures.hpp"
#include "http_script.hpp"

namespace debias {
namespace {

using nlohmann::json;

class Running {
 public:
  explicit Running(const std::filesystem::path& dir) {
    ServiceConfig cfg;
    cfg.port = 0;
    cfg.data_dir = dir;
    cfg.logical_clock = true;
    service_ = std::make_unique<Service>(cfg);
    port_ = service_->bind();
    thread_ = std::thread([this] { service_->listen(); });
    service_->wait_until_ready();
  }
  ~Running() {
    service_->stop();
    thread_.join();
  }
  int port() const { return port_; }
  Service& service() { return *service_; }
  httplib::Client client() const { return httplib::Client("127.0.0.1", port_); }

 private:
  std::unique_ptr<Service> service_;
  int port_ = 0;
  std::thread thread_;
};

json body(const httplib::Result& r) { return json::parse(r->body); }

json edu_upload() { return {{"csv", testing::education_csv()}, {"schema", testing::education_schema_json()}}; }

TEST(Service, EducationBiasEndpoint) {
  testing::TempDir dir("svc");
  Running svc(dir.path());
  auto cli = svc.client();
  auto created = cli.Post("/datasets", edu_upload().dump(), "application/json");
  ASSERT_TRUE(created);
  ASSERT_EQ(created->status, 201);
  const std::string id = body(created).at("dataset_id");
  auto bias = cli.Get("/datasets/" + id + "/bias?threshold=150");
  ASSERT_EQ(bias->status, 200);
  const json report = body(bias);
  const json& subs = report.at("per_variable")[0].at("subgroups");
  EXPECT_NEAR(subs[0].at("representation_rate").get<double>(), 1.0 / 3.0, 1e-9);
  EXPECT_EQ(subs[1].at("representation_rate").get<double>(), 1.0);
  EXPECT_NEAR(subs[2].at("representation_rate").get<double>(), 2.0 / 3.0, 1e-9);
  EXPECT_EQ(report.at("uncovered_subgroup_count"), 1);

  auto groups = cli.Get("/datasets/" + id + "/variables/education/subgroups");
  ASSERT_EQ(groups->status, 200);
  auto info = cli.Get("/datasets/" + id);
  EXPECT_EQ(body(info).at("row_count"), 600);
}

TEST(Service, MultipartUpload) {
  testing::TempDir dir("svc");
  Running svc(dir.path());
  auto cli = svc.client();
  httplib::MultipartFormDataItems items = {
      {"csv", testing::education_csv(), "edu.csv", "text/csv"},
      {"schema", testing::education_schema_json().dump(), "edu.json", "application/json"}};
  auto r = cli.Post("/datasets", items);
  ASSERT_EQ(r->status, 201);
  EXPECT_EQ(body(r).at("row_count"), 600);
}

TEST(Service, ErrorsAreMappedJson) {
  testing::TempDir dir("svc");
  Running svc(dir.path());
  auto cli = svc.client();
  auto missing = cli.Get("/datasets/s9-d1");
  EXPECT_EQ(missing->status, 404);
  EXPECT_EQ(body(missing).at("code"), "DATASET_NOT_FOUND");
  auto route = cli.Get("/nowhere");
  EXPECT_EQ(route->status, 404);
  EXPECT_EQ(body(route).at("code"), "NOT_FOUND");

  const std::string id = body(cli.Post("/datasets", edu_upload().dump(), "application/json")).at("dataset_id");
  struct Case {
    std::string method, path, payload;
    int status;
    std::string code;
  };
  const std::vector<Case> cases = {
      {"POST", "/datasets", "not json", 400, "INVALID_REQUEST"},
      {"POST", "/datasets", R"({"csv": "education,label\n"})", 400, "INVALID_REQUEST"},
      {"POST", "/datasets", json{{"csv", "education,label\nphd,yes\n"}, {"schema", testing::education_schema_json()}}.dump(),
       422, "VALUE_ERROR"},
      {"GET", "/datasets/" + id + "/bias?threshold=abc", "", 400, "INVALID_REQUEST"},
      {"GET", "/datasets/" + id + "/variables/nope/subgroups", "", 422, "UNKNOWN_VARIABLE"},
      {"POST", "/datasets/" + id + "/plans", R"({"target_class": "maybe", "requested_count": 3})", 422, "INVALID_PLAN"},
      {"POST", "/plans/s1-p7/generate", "", 404, "PLAN_NOT_FOUND"},
      {"GET", "/models/s1-m1", "", 404, "MODEL_NOT_FOUND"},
      {"GET", "/batches/s1-b3", "", 404, "BATCH_NOT_FOUND"},
      {"GET", "/sessions/s42/log", "", 404, "SESSION_NOT_FOUND"},
  };
  for (const auto& c : cases) {
    auto r = c.method == "GET" ? cli.Get(c.path) : cli.Post(c.path, c.payload, "application/json");
    ASSERT_TRUE(r) << c.path;
    EXPECT_EQ(r->status, c.status) << c.path << " " << r->body;
    const json j = json::parse(r->body, nullptr, false);
    ASSERT_FALSE(j.is_discarded()) << r->body;
    EXPECT_EQ(j.at("code"), c.code) << c.path;
    EXPECT_TRUE(j.contains("message"));
  }
}

TEST(Service, CurationFlowWithVersions) {
  testing::TempDir dir("svc");
  Running svc(dir.path());
  auto cli = svc.client();
  const json created = body(cli.Post(
      "/datasets", json{{"csv", testing::diabetes_csv(600, 21)}, {"schema", testing::diabetes_schema_json()}}.dump(),
      "application/json"));
  const std::string did = created.at("dataset_id");
  const json model = body(cli.Post("/datasets/" + did + "/models", R"({"iterations": 100})", "application/json"));
  const std::string mid = model.at("model_id");
  EXPECT_EQ(cli.Get("/models/" + mid)->status, 200);

  const json plan = body(cli.Post("/datasets/" + did + "/plans", to_json(testing::diabetes_plan()).dump(),
                                  "application/json"));
  const std::string pid = plan.at("plan_id");
  EXPECT_EQ(cli.Get("/plans/" + pid)->status, 200);
  const json gen = body(cli.Post("/plans/" + pid + "/generate", "", "application/json"));
  const std::string bid = gen.at("batch_id");
  const uint64_t v1 = gen.at("version");

  auto ann = cli.Post("/batches/" + bid + "/annotate", json{{"model_id", mid}}.dump(), "application/json");
  ASSERT_EQ(ann->status, 200);
  EXPECT_EQ(body(ann).at("version"), v1 + 1);

  httplib::Headers stale = {{"If-Match", std::to_string(v1)}};
  auto conflict = cli.Post("/batches/" + bid + "/remove", stale, R"({"ids": ["g1"]})", "application/json");
  EXPECT_EQ(conflict->status, 409);
  EXPECT_EQ(body(conflict).at("code"), "VERSION_CONFLICT");

  auto rm = cli.Post("/batches/" + bid + "/remove", json{{"ids", {"g1"}}, {"expected_version", v1 + 1}}.dump(),
                     "application/json");
  ASSERT_EQ(rm->status, 200);
  auto bad_edit = cli.Post("/batches/" + bid + "/samples/g2/edit", R"({"edits": {"age": "45"}})", "application/json");
  EXPECT_EQ(bad_edit->status, 422);
  EXPECT_EQ(body(bad_edit).at("code"), "CONSTRAINT_VIOLATION");
  auto again = cli.Post("/batches/" + bid + "/remove", R"({"ids": ["g1"]})", "application/json");
  EXPECT_EQ(again->status, 409);
  EXPECT_EQ(body(again).at("code"), "ILLEGAL_TRANSITION");
  auto unknown = cli.Post("/batches/" + bid + "/samples/g999/whatif", "{}", "application/json");
  EXPECT_EQ(unknown->status, 404);
  EXPECT_EQ(body(unknown).at("code"), "SAMPLE_NOT_FOUND");

  auto whatif = cli.Post("/batches/" + bid + "/samples/g2/whatif", R"({"edits": {"glucose": "250"}})",
                         "application/json");
  ASSERT_EQ(whatif->status, 200);
  auto filt = cli.Post("/batches/" + bid + "/filter", R"({"predicate": {"confidence": {"op": "<", "threshold": 0.6}}})",
                       "application/json");
  ASSERT_EQ(filt->status, 200);
  auto batch_csv = cli.Get("/batches/" + bid + "/export");
  ASSERT_EQ(batch_csv->status, 200);
  EXPECT_EQ(batch_csv->body.rfind("sample_id,", 0), 0u);

  auto acc = cli.Post("/batches/" + bid + "/accept", "{}", "application/json");
  ASSERT_EQ(acc->status, 200);
  EXPECT_EQ(body(acc).at("accepted_count"), 49);
  auto exported = cli.Get("/datasets/" + did + "/export?provenance=true");
  ASSERT_EQ(exported->status, 200);
  auto log = cli.Get("/sessions/s1/log");
  ASSERT_EQ(log->status, 200);
  // load, train, plan, generate, annotate, remove, whatif, filter, accept, export
  EXPECT_EQ(std::count(log->body.begin(), log->body.end(), '\n'), 10);
}

TEST(Service, RestoresSessionsFromDataDir) {
  testing::TempDir dir("svc");
  std::string log_before;
  {
    Running svc(dir.path());
    auto cli = svc.client();
    const std::string did = body(cli.Post("/datasets", edu_upload().dump(), "application/json")).at("dataset_id");
    cli.Post("/datasets/" + did + "/models", R"({"iterations": 20})", "application/json");
    log_before = cli.Get("/sessions/s1/log")->body;
  }
  Running svc(dir.path());
  EXPECT_EQ(svc.service().session_count(), 1u);
  auto cli = svc.client();
  EXPECT_EQ(cli.Get("/sessions/s1/log")->body, log_before);
  const json info = body(cli.Get("/sessions/s1"));
  EXPECT_EQ(info.at("models"), json::array({"s1-m1"}));
  // New sessions continue the id sequence.
  EXPECT_EQ(body(cli.Post("/datasets", edu_upload().dump(), "application/json")).at("session_id"), "s2");
}

TEST(Service, ScriptOverHttpMatchesInProcessSession) {
  testing::TempDir dir("svc");
  Running svc(dir.path());
  const json script = {
      {"commands",
       {{{"action", "load"}, {"csv", testing::diabetes_csv(500, 5)}, {"schema", testing::diabetes_schema_json()}},
        {{"action", "train"}, {"config", {{"iterations", 80}}}},
        {{"action", "plan"}, {"plan", to_json(testing::diabetes_plan(3))}},
        {{"action", "generate"}, {"plan_id", "s1-p1"}},
        {{"action", "annotate"}, {"batch_id", "s1-b1"}, {"model_id", "s1-m1"}},
        {{"action", "filter"},
         {"batch_id", "s1-b1"},
         {"predicate", {{"clauses", {{{"variable", "glucose"}, {"interval", {0, 160}}}}}}}},
        {{"action", "accept"}, {"batch_id", "s1-b1"}, {"ids", {"g1", "g4", "g9"}}},
        {{"action", "export"}, {"provenance", true}}}}};
  const auto run = testing::run_script_http(svc.port(), script, dir.path());

  Session local("s1", logical_clock());
  std::string exported;
  for (const json& cmd : script.at("commands")) {
    const json r = local.execute(cmd);
    if (cmd.at("action") == "export") exported = r.at("csv");
  }
  EXPECT_EQ(run.last_export, exported);
  EXPECT_EQ(run.log_ndjson, local.log_ndjson());
}

}  // namespace
}  // namespace debias
