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

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "debias/augment.hpp"
#include "debias/bias.hpp"
#include "debias/curation.hpp"
#include "debias/model.hpp"
#include "debias/tabular.hpp"

namespace debias {

enum class TrainingScope { kOriginal, kAugmented };

// One expert's workspace: the loaded dataset, its accepted augmentations,
// trained models, plans, batches and the action log. Every mutation takes the
// writer lock, so commands apply in one total order; reads share the lock.
//
// Resource ids are "<session>-d1", "<session>-m<k>", "<session>-p<k>" and
// "<session>-b<k>", assigned in command order.
class Session {
 public:
  explicit Session(std::string id, Clock clock = wall_clock());

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  const std::string& id() const { return id_; }

  // Applies one command document (see README for the command set) and
  // returns its result. The export command returns {"csv": ...}. Mutating
  // commands append exactly one log record whose request is the canonical
  // form of the command; read-only commands (audit, subgroups, batch, log)
  // append none.
  nlohmann::json execute(const nlohmann::json& command);

  nlohmann::json load(std::string_view csv_bytes, const Schema& schema);
  nlohmann::json audit(std::optional<size_t> threshold) const;
  nlohmann::json subgroup_summary(std::string_view variable) const;
  nlohmann::json train(const ModelConfig& config, size_t folds, TrainingScope scope);
  nlohmann::json plan(const AugmentationPlan& plan);
  nlohmann::json generate(const std::string& plan_id);
  nlohmann::json annotate(const std::string& batch_id, const std::string& model_id, double threshold,
                          std::optional<uint64_t> expected_version = std::nullopt);
  nlohmann::json filter(const std::string& batch_id, const FilterPredicate& predicate);
  nlohmann::json remove(const std::string& batch_id, const std::vector<std::string>& ids,
                        std::optional<uint64_t> expected_version = std::nullopt);
  nlohmann::json what_if(const std::string& batch_id, const std::string& sample_id,
                         const std::vector<ValueEdit>& edits, std::optional<std::string> model_id);
  nlohmann::json edit(const std::string& batch_id, const std::string& sample_id, const std::vector<ValueEdit>& edits,
                      std::optional<uint64_t> expected_version = std::nullopt);
  // Empty `ids` accepts every pending and modified sample.
  nlohmann::json accept(const std::string& batch_id, std::optional<std::vector<std::string>> ids,
                        std::optional<uint64_t> expected_version = std::nullopt);
  std::string export_dataset(bool include_provenance);

  // Read-only views.
  bool loaded() const;
  std::string dataset_id() const;
  uint64_t dataset_version() const;
  Dataset working_dataset() const;
  std::string batch_csv(const std::string& batch_id) const;
  nlohmann::json batch_json(const std::string& batch_id) const;
  nlohmann::json plan_json(const std::string& plan_id) const;
  nlohmann::json model_json(const std::string& model_id) const;
  std::string log_ndjson() const;
  SessionLog log() const;
  size_t log_size() const;
  std::vector<std::string> model_ids() const;
  std::vector<std::string> plan_ids() const;
  std::vector<std::string> batch_ids() const;

  // Re-executes every logged request against `original_csv`. Throws
  // Error{kReplayMismatch} when the CSV digest or any recomputed result
  // differs from the log.
  static std::unique_ptr<Session> replay(std::string id, const SessionLog& log, std::string_view original_csv,
                                         Clock clock = wall_clock());

  // Writes original.csv, log.ndjson and derived documents (schema, models,
  // plans, batches, export) under `dir`.
  void persist(const std::filesystem::path& dir) const;
  // Rebuilds a persisted session by replaying its log.
  static std::unique_ptr<Session> restore(const std::filesystem::path& dir, Clock clock = wall_clock());

 private:
  struct ModelEntry {
    Model model;
    TrainingScope scope;
    uint64_t dataset_version;
    bool evaluated_on_working;  // accuracies describe the working dataset
    std::optional<SubgroupAccuracy> accuracy;
  };
  struct PlanEntry {
    AugmentationPlan plan;
    size_t eligible_pool_size;
  };

  nlohmann::json execute_locked(const nlohmann::json& command);
  nlohmann::json load_locked(std::string_view csv_bytes, const Schema& schema);
  nlohmann::json audit_locked(std::optional<size_t> threshold) const;
  nlohmann::json train_locked(const ModelConfig& config, size_t folds, TrainingScope scope);
  nlohmann::json plan_locked(const AugmentationPlan& plan);
  nlohmann::json generate_locked(const std::string& plan_id);
  nlohmann::json annotate_locked(const std::string& batch_id, const std::string& model_id, double threshold,
                                 std::optional<uint64_t> expected_version);
  nlohmann::json filter_locked(const std::string& batch_id, const FilterPredicate& predicate);
  nlohmann::json remove_locked(const std::string& batch_id, const std::vector<std::string>& ids,
                               std::optional<uint64_t> expected_version);
  nlohmann::json what_if_locked(const std::string& batch_id, const std::string& sample_id,
                                const std::vector<ValueEdit>& edits, std::optional<std::string> model_id);
  nlohmann::json edit_locked(const std::string& batch_id, const std::string& sample_id,
                             const std::vector<ValueEdit>& edits, std::optional<uint64_t> expected_version);
  nlohmann::json accept_locked(const std::string& batch_id, std::optional<std::vector<std::string>> ids,
                               std::optional<uint64_t> expected_version);
  std::string export_locked(bool include_provenance);

  void require_loaded() const;
  const ModelEntry& model_entry(const std::string& model_id) const;
  const PlanEntry& plan_entry(const std::string& plan_id) const;
  GeneratedBatch& batch_entry(const std::string& batch_id);
  const GeneratedBatch& batch_entry(const std::string& batch_id) const;
  void check_version(const GeneratedBatch& batch, std::optional<uint64_t> expected) const;
  const SubgroupAccuracy* current_accuracy() const;
  void log(Action action, nlohmann::json request, nlohmann::json result);

  std::string id_;
  Clock clock_;
  mutable std::shared_mutex mutex_;

  std::string original_csv_;
  std::optional<Dataset> original_;
  std::optional<Dataset> working_;
  uint64_t dataset_version_ = 0;
  std::map<std::string, ModelEntry> models_;
  std::map<std::string, PlanEntry> plans_;
  std::map<std::string, GeneratedBatch> batches_;
  std::vector<std::string> model_order_, plan_order_, batch_order_;
  SessionLog log_;
};

std::string_view to_string(TrainingScope scope);

}  // namespace debias
