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

#include "debias/session.hpp"

#include <fstream>
#include <sstream>

#include "debias/error.hpp"

namespace debias {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(TrainingScope scope) {
  return scope == TrainingScope::kAugmented ? "augmented" : "original";
}

namespace {

TrainingScope parse_scope(const std::string& s) {
  if (s == "original") return TrainingScope::kOriginal;
  if (s == "augmented") return TrainingScope::kAugmented;
  throw Error(ErrorCode::kInvalidRequest, "scope must be 'original' or 'augmented'");
}

std::optional<uint64_t> optional_version(const json& cmd) {
  if (!cmd.contains("expected_version") || cmd.at("expected_version").is_null()) return std::nullopt;
  return cmd.at("expected_version").get<uint64_t>();
}

std::string required_string(const json& cmd, const char* key) {
  if (!cmd.contains(key) || !cmd.at(key).is_string()) {
    throw Error(ErrorCode::kInvalidRequest, std::string("command needs string field '") + key + "'");
  }
  return cmd.at(key).get<std::string>();
}

std::vector<std::string> id_list(const json& v) {
  if (!v.is_array()) throw Error(ErrorCode::kInvalidRequest, "'ids' must be an array of sample ids");
  std::vector<std::string> out;
  for (const auto& x : v) {
    if (!x.is_string()) throw Error(ErrorCode::kInvalidRequest, "'ids' must be an array of sample ids");
    out.push_back(x.get<std::string>());
  }
  return out;
}

json accuracy_json(const SubgroupAccuracy& acc, const Schema& schema) {
  // Grouped per predictor in schema order.
  json out = json::array();
  for (const auto& v : schema.variables()) {
    if (v.is_target()) continue;
    json subs = json::array();
    for (const auto& [key, value] : acc) {
      if (key.variable == v.name) subs.push_back({{"label", key.label}, {"accuracy", value}});
    }
    out.push_back({{"variable", v.name}, {"subgroups", subs}});
  }
  return out;
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, std::string_view bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kStorageFailure, "cannot write " + p.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kStorageFailure, "write failed for " + p.string());
}

}  // namespace

Session::Session(std::string id, Clock clock) : id_(std::move(id)), clock_(std::move(clock)) {}

void Session::log(Action action, json request, json result) {
  log_.append(action, std::move(request), std::move(result), clock_);
}

void Session::require_loaded() const {
  if (!working_) throw Error(ErrorCode::kDatasetNotFound, "session " + id_ + " has no dataset loaded");
}

const Session::ModelEntry& Session::model_entry(const std::string& model_id) const {
  auto it = models_.find(model_id);
  if (it == models_.end()) {
    throw Error(ErrorCode::kModelNotFound, "no model '" + model_id + "'", {{"model_id", model_id}});
  }
  return it->second;
}

const Session::PlanEntry& Session::plan_entry(const std::string& plan_id) const {
  auto it = plans_.find(plan_id);
  if (it == plans_.end()) throw Error(ErrorCode::kPlanNotFound, "no plan '" + plan_id + "'", {{"plan_id", plan_id}});
  return it->second;
}

GeneratedBatch& Session::batch_entry(const std::string& batch_id) {
  auto it = batches_.find(batch_id);
  if (it == batches_.end()) {
    throw Error(ErrorCode::kBatchNotFound, "no batch '" + batch_id + "'", {{"batch_id", batch_id}});
  }
  return it->second;
}

const GeneratedBatch& Session::batch_entry(const std::string& batch_id) const {
  return const_cast<Session*>(this)->batch_entry(batch_id);
}

void Session::check_version(const GeneratedBatch& batch, std::optional<uint64_t> expected) const {
  if (expected && *expected != batch.version) {
    throw Error(ErrorCode::kVersionConflict,
                "batch " + batch.id + " is at version " + std::to_string(batch.version) + ", not " +
                    std::to_string(*expected),
                {{"batch_id", batch.id}, {"version", batch.version}, {"expected_version", *expected}});
  }
}

const SubgroupAccuracy* Session::current_accuracy() const {
  for (auto it = model_order_.rbegin(); it != model_order_.rend(); ++it) {
    const ModelEntry& m = models_.at(*it);
    if (m.accuracy && m.evaluated_on_working && m.dataset_version == dataset_version_) return &*m.accuracy;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Public entry points take the lock and delegate.

json Session::execute(const json& command) {
  if (!command.is_object()) throw Error(ErrorCode::kInvalidRequest, "command must be a JSON object");
  const std::string action = required_string(command, "action");
  if (action == "audit" || action == "subgroups" || action == "batch" || action == "log") {
    std::shared_lock lock(mutex_);
    if (action == "audit") {
      std::optional<size_t> t;
      if (command.contains("threshold") && !command.at("threshold").is_null()) {
        t = command.at("threshold").get<size_t>();
      }
      return audit_locked(t);
    }
    if (action == "subgroups") {
      lock.unlock();
      return subgroup_summary(required_string(command, "variable"));
    }
    if (action == "batch") {
      require_loaded();
      return batch_to_json(batch_entry(required_string(command, "batch_id")), working_->schema());
    }
    json out = json::array();
    for (const auto& r : log_.records()) out.push_back(to_json(r));
    return out;
  }
  std::unique_lock lock(mutex_);
  return execute_locked(command);
}

json Session::execute_locked(const json& cmd) {
  const std::string action = required_string(cmd, "action");
  try {
    if (action == "load") {
      if (!cmd.contains("csv") || !cmd.at("csv").is_string()) {
        throw Error(ErrorCode::kInvalidRequest, "load needs inline 'csv' text");
      }
      if (!cmd.contains("schema")) throw Error(ErrorCode::kInvalidRequest, "load needs a 'schema' document");
      return load_locked(cmd.at("csv").get<std::string>(), schema_from_json(cmd.at("schema")));
    }
    if (action == "train") {
      return train_locked(model_config_from_json(cmd.value("config", json())), cmd.value("folds", size_t{5}),
                          parse_scope(cmd.value("scope", std::string("original"))));
    }
    if (action == "plan") {
      if (!cmd.contains("plan")) throw Error(ErrorCode::kInvalidRequest, "plan command needs a 'plan' document");
      return plan_locked(plan_from_json(cmd.at("plan")));
    }
    if (action == "generate") return generate_locked(required_string(cmd, "plan_id"));
    if (action == "annotate") {
      return annotate_locked(required_string(cmd, "batch_id"), required_string(cmd, "model_id"),
                             cmd.value("confidence_threshold", kDefaultConfidenceThreshold), optional_version(cmd));
    }
    if (action == "filter") {
      if (!cmd.contains("predicate")) throw Error(ErrorCode::kInvalidRequest, "filter needs a 'predicate'");
      return filter_locked(required_string(cmd, "batch_id"), predicate_from_json(cmd.at("predicate")));
    }
    if (action == "remove") {
      return remove_locked(required_string(cmd, "batch_id"), id_list(cmd.value("ids", json::array())),
                           optional_version(cmd));
    }
    if (action == "what_if" || action == "whatif") {
      std::optional<std::string> model_id;
      if (cmd.contains("model_id") && !cmd.at("model_id").is_null()) model_id = cmd.at("model_id").get<std::string>();
      return what_if_locked(required_string(cmd, "batch_id"), required_string(cmd, "sample_id"),
                            edits_from_json(cmd.value("edits", json())), model_id);
    }
    if (action == "edit") {
      return edit_locked(required_string(cmd, "batch_id"), required_string(cmd, "sample_id"),
                         edits_from_json(cmd.value("edits", json())), optional_version(cmd));
    }
    if (action == "accept") {
      std::optional<std::vector<std::string>> ids;
      if (cmd.contains("ids") && !cmd.at("ids").is_null() && cmd.at("ids") != "all") ids = id_list(cmd.at("ids"));
      return accept_locked(required_string(cmd, "batch_id"), ids, optional_version(cmd));
    }
    if (action == "export") return {{"csv", export_locked(cmd.value("provenance", false))}};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kInvalidRequest, "malformed '" + action + "' command: " + e.what());
  }
  throw Error(ErrorCode::kInvalidRequest, "unknown command '" + action + "'");
}

json Session::load(std::string_view csv_bytes, const Schema& schema) {
  std::unique_lock lock(mutex_);
  return load_locked(csv_bytes, schema);
}
json Session::audit(std::optional<size_t> threshold) const {
  std::shared_lock lock(mutex_);
  return audit_locked(threshold);
}
json Session::train(const ModelConfig& config, size_t folds, TrainingScope scope) {
  std::unique_lock lock(mutex_);
  return train_locked(config, folds, scope);
}
json Session::plan(const AugmentationPlan& p) {
  std::unique_lock lock(mutex_);
  return plan_locked(p);
}
json Session::generate(const std::string& plan_id) {
  std::unique_lock lock(mutex_);
  return generate_locked(plan_id);
}
json Session::annotate(const std::string& batch_id, const std::string& model_id, double threshold,
                       std::optional<uint64_t> expected_version) {
  std::unique_lock lock(mutex_);
  return annotate_locked(batch_id, model_id, threshold, expected_version);
}
json Session::filter(const std::string& batch_id, const FilterPredicate& predicate) {
  std::unique_lock lock(mutex_);
  return filter_locked(batch_id, predicate);
}
json Session::remove(const std::string& batch_id, const std::vector<std::string>& ids,
                     std::optional<uint64_t> expected_version) {
  std::unique_lock lock(mutex_);
  return remove_locked(batch_id, ids, expected_version);
}
json Session::what_if(const std::string& batch_id, const std::string& sample_id, const std::vector<ValueEdit>& edits,
                      std::optional<std::string> model_id) {
  std::unique_lock lock(mutex_);
  return what_if_locked(batch_id, sample_id, edits, std::move(model_id));
}
json Session::edit(const std::string& batch_id, const std::string& sample_id, const std::vector<ValueEdit>& edits,
                   std::optional<uint64_t> expected_version) {
  std::unique_lock lock(mutex_);
  return edit_locked(batch_id, sample_id, edits, expected_version);
}
json Session::accept(const std::string& batch_id, std::optional<std::vector<std::string>> ids,
                     std::optional<uint64_t> expected_version) {
  std::unique_lock lock(mutex_);
  return accept_locked(batch_id, std::move(ids), expected_version);
}
std::string Session::export_dataset(bool include_provenance) {
  std::unique_lock lock(mutex_);
  return export_locked(include_provenance);
}

// ---------------------------------------------------------------------------
// Commands

json Session::load_locked(std::string_view csv_bytes, const Schema& schema) {
  if (working_) throw Error(ErrorCode::kInvalidRequest, "session " + id_ + " already has a dataset");
  Dataset ds = load_dataset(csv_bytes, schema, id_ + "-d1");
  original_csv_ = std::string(csv_bytes);
  original_ = ds;
  working_ = std::move(ds);
  dataset_version_ = 1;
  const json result = {{"dataset_id", working_->id()},
                       {"session_id", id_},
                       {"row_count", working_->size()},
                       {"version", dataset_version_}};
  log(Action::kLoaded,
      {{"action", "load"}, {"schema", schema_to_json(schema)}, {"csv_digest", content_digest(csv_bytes)}}, result);
  return result;
}

json Session::audit_locked(std::optional<size_t> threshold) const {
  require_loaded();
  json out = to_json(bias_report(*working_, threshold, current_accuracy()));
  out["version"] = dataset_version_;
  return out;
}

json Session::subgroup_summary(std::string_view variable) const {
  std::shared_lock lock(mutex_);
  require_loaded();
  const SubgroupCounts counts = subgroups(*working_, variable);
  const auto rates = representation_rates(counts);
  const SubgroupAccuracy* acc = current_accuracy();
  json subs = json::array();
  for (size_t i = 0; i < counts.size(); ++i) {
    json j = {{"label", counts[i].first.label}, {"count", counts[i].second}, {"representation_rate", rates[i].second}};
    j["accuracy"] = json();
    if (acc) {
      if (auto it = acc->find(counts[i].first); it != acc->end()) j["accuracy"] = it->second;
    }
    subs.push_back(std::move(j));
  }
  return {{"dataset_id", working_->id()}, {"variable", std::string(variable)}, {"version", dataset_version_},
          {"subgroups", subs}};
}

json Session::train_locked(const ModelConfig& config, size_t folds, TrainingScope scope) {
  require_loaded();
  config.validate();
  if (folds < 2) throw Error(ErrorCode::kInvalidRequest, "folds must be >= 2");
  const Dataset& data = scope == TrainingScope::kAugmented ? *working_ : *original_;
  ModelEntry entry{debias::train(data, config), scope, dataset_version_,
                   scope == TrainingScope::kAugmented || working_->size() == original_->size(), std::nullopt};
  json result;
  try {
    const CrossValidation cv = cross_validate(data, config, folds);
    SubgroupAccuracy acc;
    for (const auto& v : data.schema().variables()) {
      if (v.is_target()) continue;
      acc.merge(subgroup_accuracy(data, cv, v.name));
    }
    result["accuracies"] = accuracy_json(acc, data.schema());
    entry.accuracy = std::move(acc);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kTooFewRowsPerClass) throw;
    result["accuracies"] = json();
    result["evaluation_error"] = e.to_json();
  }
  const std::string model_id = id_ + "-m" + std::to_string(model_order_.size() + 1);
  result["model_id"] = model_id;
  result["scope"] = std::string(to_string(scope));
  result["dataset_version"] = dataset_version_;
  result["training_rows"] = data.size();
  result["final_loss"] = entry.model.training_loss_trace.back();
  models_.emplace(model_id, std::move(entry));
  model_order_.push_back(model_id);
  log(Action::kTrained,
      {{"action", "train"}, {"config", to_json(config)}, {"folds", folds}, {"scope", std::string(to_string(scope))}},
      result);
  return result;
}

json Session::plan_locked(const AugmentationPlan& p) {
  require_loaded();
  const size_t pool = eligible_pool(*working_, p).size();
  const std::string plan_id = id_ + "-p" + std::to_string(plan_order_.size() + 1);
  plans_.emplace(plan_id, PlanEntry{p, pool});
  plan_order_.push_back(plan_id);
  const json result = {{"plan_id", plan_id}, {"eligible_pool_size", pool}};
  log(Action::kPlanned, {{"action", "plan"}, {"plan", to_json(p)}}, result);
  return result;
}

json Session::generate_locked(const std::string& plan_id) {
  require_loaded();
  const PlanEntry& p = plan_entry(plan_id);
  const std::string batch_id = id_ + "-b" + std::to_string(batch_order_.size() + 1);
  GeneratedBatch batch = debias::generate(*working_, p.plan, batch_id, plan_id);
  const json result = {{"batch_id", batch_id},
                       {"plan_id", plan_id},
                       {"requested_count", p.plan.requested_count},
                       {"produced_count", batch.produced_count},
                       {"attempts_used", batch.attempts_used},
                       {"version", batch.version}};
  batches_.emplace(batch_id, std::move(batch));
  batch_order_.push_back(batch_id);
  log(Action::kGenerated, {{"action", "generate"}, {"plan_id", plan_id}}, result);
  return result;
}

json Session::annotate_locked(const std::string& batch_id, const std::string& model_id, double threshold,
                              std::optional<uint64_t> expected_version) {
  require_loaded();
  GeneratedBatch& batch = batch_entry(batch_id);
  check_version(batch, expected_version);
  const ModelEntry& m = model_entry(model_id);
  batch = annotate_batch(batch, m.model, working_->schema(), threshold);
  const auto flagged = flagged_ids(batch);
  const size_t annotated = batch.samples.size() - batch.count(SampleStatus::kRemoved);
  const json result = {{"batch_id", batch_id},
                       {"model_id", model_id},
                       {"annotated", annotated},
                       {"flagged_count", flagged.size()},
                       {"flagged", flagged},
                       {"version", batch.version}};
  log(Action::kAnnotated,
      {{"action", "annotate"}, {"batch_id", batch_id}, {"model_id", model_id}, {"confidence_threshold", threshold}},
      result);
  return result;
}

json Session::filter_locked(const std::string& batch_id, const FilterPredicate& predicate) {
  require_loaded();
  const FilterResult r = filter_batch(batch_entry(batch_id), predicate, working_->schema());
  const json result = {{"batch_id", batch_id}, {"matching", r.matching}, {"non_matching", r.non_matching}};
  log(Action::kFiltered, {{"action", "filter"}, {"batch_id", batch_id}, {"predicate", to_json(predicate)}}, result);
  return result;
}

json Session::remove_locked(const std::string& batch_id, const std::vector<std::string>& ids,
                            std::optional<uint64_t> expected_version) {
  require_loaded();
  GeneratedBatch& batch = batch_entry(batch_id);
  check_version(batch, expected_version);
  batch = remove_samples(batch, ids);
  const json result = {{"batch_id", batch_id},
                       {"removed", ids},
                       {"pending", batch.count(SampleStatus::kPending)},
                       {"version", batch.version}};
  log(Action::kRemoved, {{"action", "remove"}, {"batch_id", batch_id}, {"ids", ids}}, result);
  return result;
}

json Session::what_if_locked(const std::string& batch_id, const std::string& sample_id,
                             const std::vector<ValueEdit>& edits, std::optional<std::string> model_id) {
  require_loaded();
  const GeneratedBatch& batch = batch_entry(batch_id);
  if (!model_id) {
    // Default reference: the newest model trained on original data only.
    for (auto it = model_order_.rbegin(); it != model_order_.rend(); ++it) {
      if (models_.at(*it).scope == TrainingScope::kOriginal) {
        model_id = *it;
        break;
      }
    }
    if (!model_id) throw Error(ErrorCode::kModelNotFound, "what-if needs a trained model");
  }
  const Schema& schema = working_->schema();
  const WhatIfResult r = debias::what_if(batch, sample_id, edits, model_entry(*model_id).model, schema);
  json candidate = json::object();
  for (size_t j = 0; j < schema.size(); ++j) candidate[schema[j].name] = schema.format_cell(j, r.candidate[j]);
  const json result = {{"batch_id", batch_id},
                       {"sample_id", sample_id},
                       {"model_id", *model_id},
                       {"candidate", candidate},
                       {"old_prediction", to_json(r.before)},
                       {"new_prediction", to_json(r.after)},
                       {"confidence_delta", r.after.confidence - r.before.confidence}};
  log(Action::kWhatIf,
      {{"action", "what_if"},
       {"batch_id", batch_id},
       {"sample_id", sample_id},
       {"model_id", *model_id},
       {"edits", to_json(std::span<const ValueEdit>(edits))}},
      result);
  return result;
}

json Session::edit_locked(const std::string& batch_id, const std::string& sample_id,
                          const std::vector<ValueEdit>& edits, std::optional<uint64_t> expected_version) {
  require_loaded();
  GeneratedBatch& batch = batch_entry(batch_id);
  check_version(batch, expected_version);
  batch = commit_edit(batch, sample_id, edits, working_->schema());
  const GeneratedSample* s = batch.find(sample_id);
  const json result = {{"batch_id", batch_id},
                       {"sample_id", sample_id},
                       {"status", std::string(to_string(s->status))},
                       {"history_length", s->edit_history.size()},
                       {"version", batch.version}};
  log(Action::kModified,
      {{"action", "edit"},
       {"batch_id", batch_id},
       {"sample_id", sample_id},
       {"edits", to_json(std::span<const ValueEdit>(edits))}},
      result);
  return result;
}

json Session::accept_locked(const std::string& batch_id, std::optional<std::vector<std::string>> ids,
                            std::optional<uint64_t> expected_version) {
  require_loaded();
  GeneratedBatch& batch = batch_entry(batch_id);
  check_version(batch, expected_version);
  if (!ids) {
    ids.emplace();
    for (const auto& s : batch.samples) {
      if (s.status == SampleStatus::kPending || s.status == SampleStatus::kModified) ids->push_back(s.id);
    }
  }
  AcceptResult r = accept_batch(*working_, batch, *ids);
  batch = std::move(r.batch);
  working_ = std::move(r.dataset);
  if (!ids->empty()) ++dataset_version_;
  const json result = {{"batch_id", batch_id},
                       {"plan_id", batch.plan_id},
                       {"accepted_count", ids->size()},
                       {"dataset_id", working_->id()},
                       {"dataset_version", dataset_version_},
                       {"row_count", working_->size()},
                       {"version", batch.version}};
  log(Action::kAccepted, {{"action", "accept"}, {"batch_id", batch_id}, {"ids", *ids}}, result);
  return result;
}

std::string Session::export_locked(bool include_provenance) {
  require_loaded();
  std::string out = export_csv(*working_, include_provenance);
  log(Action::kExported, {{"action", "export"}, {"provenance", include_provenance}},
      {{"dataset_id", working_->id()},
       {"dataset_version", dataset_version_},
       {"rows", working_->size()},
       {"bytes", out.size()},
       {"digest", content_digest(out)}});
  return out;
}

// ---------------------------------------------------------------------------
// Views

bool Session::loaded() const {
  std::shared_lock lock(mutex_);
  return working_.has_value();
}

std::string Session::dataset_id() const {
  std::shared_lock lock(mutex_);
  require_loaded();
  return working_->id();
}

uint64_t Session::dataset_version() const {
  std::shared_lock lock(mutex_);
  return dataset_version_;
}

Dataset Session::working_dataset() const {
  std::shared_lock lock(mutex_);
  require_loaded();
  return *working_;
}

std::string Session::batch_csv(const std::string& batch_id) const {
  std::shared_lock lock(mutex_);
  require_loaded();
  return batch_to_csv(batch_entry(batch_id), working_->schema());
}

json Session::batch_json(const std::string& batch_id) const {
  std::shared_lock lock(mutex_);
  require_loaded();
  return batch_to_json(batch_entry(batch_id), working_->schema());
}

json Session::plan_json(const std::string& plan_id) const {
  std::shared_lock lock(mutex_);
  const PlanEntry& p = plan_entry(plan_id);
  return {{"plan_id", plan_id}, {"plan", to_json(p.plan)}, {"eligible_pool_size", p.eligible_pool_size}};
}

json Session::model_json(const std::string& model_id) const {
  std::shared_lock lock(mutex_);
  const ModelEntry& m = model_entry(model_id);
  json out = to_json(m.model);
  out["model_id"] = model_id;
  out["scope"] = std::string(to_string(m.scope));
  out["dataset_version"] = m.dataset_version;
  return out;
}

std::string Session::log_ndjson() const {
  std::shared_lock lock(mutex_);
  return log_.to_ndjson();
}

SessionLog Session::log() const {
  std::shared_lock lock(mutex_);
  return log_;
}

size_t Session::log_size() const {
  std::shared_lock lock(mutex_);
  return log_.size();
}

std::vector<std::string> Session::model_ids() const {
  std::shared_lock lock(mutex_);
  return model_order_;
}
std::vector<std::string> Session::plan_ids() const {
  std::shared_lock lock(mutex_);
  return plan_order_;
}
std::vector<std::string> Session::batch_ids() const {
  std::shared_lock lock(mutex_);
  return batch_order_;
}

// ---------------------------------------------------------------------------
// Replay and persistence

std::unique_ptr<Session> Session::replay(std::string id, const SessionLog& log, std::string_view original_csv,
                                         Clock clock) {
  // Replayed records keep their original timestamps.
  auto session = std::make_unique<Session>(
      std::move(id), [&log](uint64_t seq) { return seq <= log.size() ? log.records()[seq - 1].timestamp : ""; });
  std::unique_lock lock(session->mutex_);
  for (const LogRecord& r : log.records()) {
    json result;
    if (r.action == Action::kLoaded) {
      const std::string digest = r.request.value("csv_digest", std::string());
      if (digest != content_digest(original_csv)) {
        throw Error(ErrorCode::kReplayMismatch, "original CSV does not match the logged digest",
                    {{"expected", digest}, {"actual", content_digest(original_csv)}});
      }
      result = session->load_locked(original_csv, schema_from_json(r.request.at("schema")));
    } else {
      result = session->execute_locked(r.request);
    }
    const json& replayed = r.action == Action::kExported ? session->log_.records().back().result : result;
    if (replayed != r.result) {
      throw Error(ErrorCode::kReplayMismatch,
                  "record " + std::to_string(r.seq) + " (" + std::string(to_string(r.action)) + ") replays differently",
                  {{"seq", r.seq}, {"logged", r.result}, {"replayed", replayed}});
    }
  }
  session->clock_ = std::move(clock);
  return session;
}

void Session::persist(const fs::path& dir) const {
  std::shared_lock lock(mutex_);
  std::error_code ec;
  fs::create_directories(dir / "models", ec);
  fs::create_directories(dir / "plans", ec);
  fs::create_directories(dir / "batches", ec);
  if (ec) throw Error(ErrorCode::kStorageFailure, "cannot create " + dir.string() + ": " + ec.message());
  write_file(dir / "log.ndjson", log_.to_ndjson());
  write_file(dir / "session.json", json{{"session_id", id_}, {"dataset_version", dataset_version_}}.dump(2));
  if (!working_) return;
  write_file(dir / "original.csv", original_csv_);
  write_file(dir / "schema.json", schema_to_json(working_->schema()).dump(2));
  write_file(dir / "dataset.csv", export_csv(*working_, true));
  for (const auto& [id, m] : models_) write_file(dir / "models" / (id + ".json"), to_json(m.model).dump(2));
  for (const auto& [id, p] : plans_) write_file(dir / "plans" / (id + ".json"), to_json(p.plan).dump(2));
  for (const auto& [id, b] : batches_) {
    write_file(dir / "batches" / (id + ".json"), batch_to_json(b, working_->schema()).dump(2));
    write_file(dir / "batches" / (id + ".csv"), batch_to_csv(b, working_->schema()));
  }
}

std::unique_ptr<Session> Session::restore(const fs::path& dir, Clock clock) {
  const json meta = json::parse(read_file(dir / "session.json"), nullptr, false);
  if (meta.is_discarded() || !meta.contains("session_id")) {
    throw Error(ErrorCode::kStorageFailure, "corrupt session.json in " + dir.string());
  }
  const SessionLog log = SessionLog::from_ndjson(read_file(dir / "log.ndjson"));
  const std::string id = meta.at("session_id").get<std::string>();
  if (log.size() == 0) return std::make_unique<Session>(id, std::move(clock));
  return replay(id, log, read_file(dir / "original.csv"), std::move(clock));
}

}  // namespace debias
