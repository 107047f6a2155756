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

#include "cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <sstream>

#include "debias/error.hpp"
#include "debias/service.hpp"
#include "debias/session.hpp"

namespace debias::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + path, {{"path", path}});
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot write " + path, {{"path", path}});
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

json parse_json_text(const std::string& text, const std::string& what) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded()) throw Error(ErrorCode::kInvalidRequest, what + " is not valid JSON");
  return doc;
}

// Inline JSON when the argument starts with '{' or '[', else a file path.
json json_argument(const std::string& arg, const std::string& what) {
  const auto first = arg.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && (arg[first] == '{' || arg[first] == '[')) return parse_json_text(arg, what);
  return parse_json_text(read_file(arg), what);
}

struct Globals {
  std::string data;
  std::string schema;
  std::optional<uint64_t> seed;
  std::string format = "json";
  std::string out;
  std::string session_dir;
  bool logical_clock = false;
};

Clock clock_for(const Globals& g) { return g.logical_clock ? logical_clock() : wall_clock(); }

// Reopens a persisted session or starts a fresh one, loading --data/--schema
// when the session has no dataset yet.
std::unique_ptr<Session> open_session(const Globals& g, bool need_dataset = true) {
  std::unique_ptr<Session> session;
  if (!g.session_dir.empty() && fs::exists(fs::path(g.session_dir) / "session.json")) {
    session = Session::restore(g.session_dir, clock_for(g));
  } else {
    session = std::make_unique<Session>("s1", clock_for(g));
  }
  if (need_dataset && !session->loaded()) {
    if (g.data.empty() || g.schema.empty()) {
      throw Error(ErrorCode::kInvalidRequest, "--data and --schema are required to start a session");
    }
    session->execute({{"action", "load"},
                      {"csv", read_file(g.data)},
                      {"schema", parse_json_text(read_file(g.schema), "schema file")}});
  }
  return session;
}

void save_session(const Globals& g, const Session& session) {
  if (!g.session_dir.empty()) session.persist(g.session_dir);
}

std::string fixed2(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(2) << v;
  return ss.str();
}

void print_table(std::ostream& out, const json& doc) {
  if (doc.contains("per_variable")) {
    out << "dataset " << doc.at("dataset_id").get<std::string>() << "  rows " << doc.at("row_count")
        << "  coverage threshold " << doc.at("coverage_threshold") << "\n";
    auto section = [&](const json& v) {
      out << "\n" << v.at("variable").get<std::string>() << "  (min rate " << fixed2(v.at("min_rate").get<double>())
          << ", uncovered " << v.at("uncovered") << ")\n";
      out << "  " << std::left << std::setw(24) << "subgroup" << std::right << std::setw(8) << "count"
          << std::setw(8) << "rate" << std::setw(10) << "coverage" << std::setw(9) << "deficit" << std::setw(10)
          << "accuracy" << "\n";
      for (const auto& s : v.at("subgroups")) {
        out << "  " << std::left << std::setw(24) << s.at("label").get<std::string>() << std::right << std::setw(8)
            << s.at("count").dump() << std::setw(8) << fixed2(s.at("representation_rate").get<double>()) << std::setw(10)
            << (s.at("coverage_met").get<bool>() ? "met" : "UNMET") << std::setw(9) << s.at("coverage_deficit").dump()
            << std::setw(10)
            << (s.at("subgroup_accuracy").is_null() ? std::string("-") : fixed2(s.at("subgroup_accuracy").get<double>()))
            << "\n";
      }
    };
    for (const auto& v : doc.at("per_variable")) section(v);
    out << "\ntarget";
    section(doc.at("target"));
    out << "\nuncovered subgroups: " << doc.at("uncovered_subgroup_count") << "\n";
    out << "most impacted:";
    size_t shown = 0;
    for (const auto& k : doc.at("most_impacted")) {
      if (shown++ == 5) break;
      out << " " << k.at("variable").get<std::string>() << "=" << k.at("label").get<std::string>();
    }
    out << "\n";
    return;
  }
  for (const auto& [key, value] : doc.items()) {
    out << std::left << std::setw(22) << key << " " << (value.is_string() ? value.get<std::string>() : value.dump())
        << "\n";
  }
}

void emit(std::ostream& out, const Globals& g, const json& doc) {
  if (g.format == "table") {
    print_table(out, doc);
  } else {
    out << doc.dump(2) << "\n";
  }
}

int exit_code_for(ErrorCode code) {
  switch (error_category(code)) {
    case ErrorCategory::kValidation: return kValidationError;
    case ErrorCategory::kEngine: return kEngineError;
    case ErrorCategory::kIo: return kIoError;
  }
  return kEngineError;
}

std::vector<std::string> split_ids(const std::string& text) {
  std::vector<std::string> ids;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) ids.push_back(item);
  }
  return ids;
}

// Executes a SessionScript: {"commands": [...]} or a bare array. Load
// commands may name csv_path / schema_path relative to the script; export
// commands may name an "out" file.
json run_script(const Globals& g, const std::string& script_path, std::string* last_export, Session& session) {
  const json script = parse_json_text(read_file(script_path), "session script");
  const json& commands = script.is_array() ? script : script.at("commands");
  const fs::path base = fs::path(script_path).parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? p : (base / p).string(); };

  json results = json::array();
  for (json cmd : commands) {
    const std::string action = cmd.value("action", std::string());
    if (action == "load") {
      if (!cmd.contains("csv")) {
        const std::string path = cmd.contains("csv_path") ? resolve(cmd.at("csv_path")) : g.data;
        if (path.empty()) throw Error(ErrorCode::kInvalidRequest, "script load command needs csv_path");
        cmd["csv"] = read_file(path);
      }
      if (!cmd.contains("schema")) {
        const std::string path = cmd.contains("schema_path") ? resolve(cmd.at("schema_path")) : g.schema;
        if (path.empty()) throw Error(ErrorCode::kInvalidRequest, "script load command needs schema_path");
        cmd["schema"] = parse_json_text(read_file(path), "schema file");
      }
    }
    if (action == "export_batch") {
      const std::string csv = session.batch_csv(cmd.at("batch_id").get<std::string>());
      if (cmd.contains("out")) write_file(resolve(cmd.at("out")), csv);
      results.push_back({{"action", action}, {"bytes", csv.size()}, {"digest", content_digest(csv)}});
      continue;
    }
    json result = session.execute(cmd);
    if (action == "export") {
      const std::string csv = result.at("csv").get<std::string>();
      if (cmd.contains("out")) write_file(resolve(cmd.at("out")), csv);
      *last_export = csv;
      result = {{"bytes", csv.size()}, {"digest", content_digest(csv)}};
    }
    results.push_back({{"action", action}, {"result", result}});
  }
  return results;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Representation-bias audit and constrained augmentation workbench", "debias"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--data", g.data, "CSV dataset");
  app.add_option("--schema", g.schema, "JSON schema document");
  app.add_option("--seed", g.seed, "Seed overriding model and plan seeds");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "table"}));
  app.add_option("--out", g.out, "Output file for CSV artifacts");
  app.add_option("--session", g.session_dir, "Session directory carrying state across invocations");
  app.add_flag("--logical-clock", g.logical_clock, "Deterministic log timestamps");

  auto* audit = app.add_subcommand("audit", "Representation-bias report");
  std::optional<long long> coverage;
  audit->add_option("--coverage,--threshold", coverage, "Coverage threshold (default: 10% of mean subgroup count)");

  auto* train = app.add_subcommand("train", "Train the classifier and evaluate subgroup accuracy");
  ModelConfig config;
  size_t folds = 5;
  std::string scope = "original";
  train->add_option("--learning-rate", config.learning_rate)->capture_default_str();
  train->add_option("--iterations", config.iterations)->capture_default_str();
  train->add_option("--l2", config.l2_penalty)->capture_default_str();
  train->add_option("--folds", folds)->capture_default_str();
  train->add_option("--scope", scope)->check(CLI::IsMember({"original", "augmented"}))->capture_default_str();

  auto* plan = app.add_subcommand("plan", "Register an augmentation plan");
  std::string plan_arg;
  plan->add_option("--plan", plan_arg, "AugmentationPlan JSON (file or inline)")->required();

  auto* generate = app.add_subcommand("generate", "Generate a batch from a plan");
  std::string plan_id;
  generate->add_option("--plan", plan_arg, "AugmentationPlan JSON (file or inline)");
  generate->add_option("--plan-id", plan_id, "Existing plan id");

  std::string batch_id, model_id, sample_id, edits_arg, predicate_arg, ids_arg;
  double threshold = kDefaultConfidenceThreshold;

  auto* annotate = app.add_subcommand("annotate", "Predict and flag generated samples");
  annotate->add_option("--batch", batch_id)->required();
  annotate->add_option("--model", model_id)->required();
  annotate->add_option("--confidence-threshold", threshold)->capture_default_str();

  auto* filter = app.add_subcommand("filter", "Partition a batch by predicate");
  filter->add_option("--batch", batch_id)->required();
  filter->add_option("--predicate", predicate_arg, "FilterPredicate JSON (file or inline)")->required();

  auto* remove = app.add_subcommand("remove", "Remove samples from a batch");
  remove->add_option("--batch", batch_id)->required();
  remove->add_option("--ids", ids_arg, "Comma-separated sample ids")->required();

  auto* whatif = app.add_subcommand("whatif", "Preview predictions after hypothetical edits");
  whatif->add_option("--batch", batch_id)->required();
  whatif->add_option("--sample", sample_id)->required();
  whatif->add_option("--edits", edits_arg, "Edits JSON (file or inline)");
  whatif->add_option("--model", model_id);

  auto* edit = app.add_subcommand("edit", "Commit edits to a generated sample");
  edit->add_option("--batch", batch_id)->required();
  edit->add_option("--sample", sample_id)->required();
  edit->add_option("--edits", edits_arg, "Edits JSON (file or inline)")->required();

  auto* accept = app.add_subcommand("accept", "Merge samples into the dataset");
  accept->add_option("--batch", batch_id)->required();
  accept->add_option("--ids", ids_arg, "Comma-separated sample ids, or 'all'")->default_val("all");

  auto* exp = app.add_subcommand("export", "Export the (augmented) dataset as CSV");
  bool provenance = false;
  exp->add_flag("--provenance", provenance, "Add origin and lineage columns");

  auto* replay = app.add_subcommand("replay", "Run a session script");
  std::string script;
  std::string log_out;
  replay->add_option("--script", script)->required();
  replay->add_option("--log-out", log_out, "Write the session log (NDJSON)");

  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  ServiceConfig service_config;
  serve->add_option("--host", service_config.host)->capture_default_str();
  serve->add_option("--port", service_config.port)->capture_default_str();
  serve->add_option("--data-dir", service_config.data_dir)->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << json{{"code", "INVALID_REQUEST"}, {"message", e.what()}}.dump() << "\n";
    return kValidationError;
  }

  try {
    if (g.seed) config.seed = *g.seed;
    auto load_plan = [&](const std::string& arg) {
      json doc = json_argument(arg, "plan");
      if (g.seed) doc["seed"] = *g.seed;
      return doc;
    };

    if (*audit) {
      auto session = open_session(g);
      json cmd = {{"action", "audit"}};
      if (coverage) {
        if (*coverage < 0) throw Error(ErrorCode::kInvalidRequest, "--coverage must be >= 0");
        cmd["threshold"] = *coverage;
      }
      emit(out, g, session->execute(cmd));
      save_session(g, *session);
    } else if (*train) {
      auto session = open_session(g);
      emit(out, g,
           session->execute({{"action", "train"}, {"config", to_json(config)}, {"folds", folds}, {"scope", scope}}));
      save_session(g, *session);
    } else if (*plan) {
      auto session = open_session(g);
      emit(out, g, session->execute({{"action", "plan"}, {"plan", load_plan(plan_arg)}}));
      save_session(g, *session);
    } else if (*generate) {
      auto session = open_session(g);
      if (plan_arg.empty() == plan_id.empty()) {
        throw Error(ErrorCode::kInvalidRequest, "generate needs exactly one of --plan or --plan-id");
      }
      json planned;
      if (!plan_arg.empty()) {
        planned = session->execute({{"action", "plan"}, {"plan", load_plan(plan_arg)}});
        plan_id = planned.at("plan_id").get<std::string>();
      }
      json result = session->execute({{"action", "generate"}, {"plan_id", plan_id}});
      save_session(g, *session);
      if (!planned.is_null()) result["eligible_pool_size"] = planned.at("eligible_pool_size");
      const std::string bid = result.at("batch_id").get<std::string>();
      if (!g.out.empty()) {
        write_file(g.out, session->batch_csv(bid));
        result["out"] = g.out;
      } else {
        result["samples"] = session->batch_json(bid).at("samples");
      }
      emit(out, g, result);
    } else if (*annotate) {
      auto session = open_session(g);
      emit(out, g,
           session->execute({{"action", "annotate"},
                             {"batch_id", batch_id},
                             {"model_id", model_id},
                             {"confidence_threshold", threshold}}));
      save_session(g, *session);
    } else if (*filter) {
      auto session = open_session(g);
      emit(out, g,
           session->execute(
               {{"action", "filter"}, {"batch_id", batch_id}, {"predicate", json_argument(predicate_arg, "predicate")}}));
      save_session(g, *session);
    } else if (*remove) {
      auto session = open_session(g);
      emit(out, g, session->execute({{"action", "remove"}, {"batch_id", batch_id}, {"ids", split_ids(ids_arg)}}));
      save_session(g, *session);
    } else if (*whatif) {
      auto session = open_session(g);
      json cmd = {{"action", "what_if"}, {"batch_id", batch_id}, {"sample_id", sample_id},
                  {"edits", edits_arg.empty() ? json::array() : json_argument(edits_arg, "edits")}};
      if (!model_id.empty()) cmd["model_id"] = model_id;
      emit(out, g, session->execute(cmd));
      save_session(g, *session);
    } else if (*edit) {
      auto session = open_session(g);
      emit(out, g,
           session->execute({{"action", "edit"},
                             {"batch_id", batch_id},
                             {"sample_id", sample_id},
                             {"edits", json_argument(edits_arg, "edits")}}));
      save_session(g, *session);
    } else if (*accept) {
      auto session = open_session(g);
      json cmd = {{"action", "accept"}, {"batch_id", batch_id}};
      if (ids_arg != "all") cmd["ids"] = split_ids(ids_arg);
      emit(out, g, session->execute(cmd));
      save_session(g, *session);
    } else if (*exp) {
      auto session = open_session(g);
      const std::string csv = session->execute({{"action", "export"}, {"provenance", provenance}}).at("csv");
      save_session(g, *session);
      json result = {{"bytes", csv.size()}, {"digest", content_digest(csv)}, {"provenance", provenance}};
      if (!g.out.empty()) {
        write_file(g.out, csv);
        result["out"] = g.out;
      } else {
        result["csv"] = csv;
      }
      emit(out, g, result);
    } else if (*replay) {
      auto session = open_session(g, /*need_dataset=*/false);
      std::string last_export;
      json results = run_script(g, script, &last_export, *session);
      save_session(g, *session);
      if (!g.out.empty()) write_file(g.out, last_export);
      if (!log_out.empty()) write_file(log_out, session->log_ndjson());
      json summary = {{"session_id", session->id()}, {"results", results}, {"log_records", session->log().size()}};
      if (!last_export.empty()) summary["export_digest"] = content_digest(last_export);
      emit(out, g, summary);
    } else if (*serve) {
      service_config.logical_clock = g.logical_clock;
      Service service(service_config);
      const int port = service.bind();
      out << json{{"listening", service_config.host + ":" + std::to_string(port)},
                  {"data_dir", service_config.data_dir.string()}}
                 .dump()
          << std::endl;
      service.listen();
    }
  } catch (const Error& e) {
    err << e.to_json().dump() << "\n";
    return exit_code_for(e.code());
  } catch (const json::exception& e) {
    err << json{{"code", "INVALID_REQUEST"}, {"message", e.what()}}.dump() << "\n";
    return kValidationError;
  }
  return kOk;
}

}  // namespace debias::cli
