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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "debias/augment.hpp"
#include "debias/model.hpp"
#include "debias/tabular.hpp"

namespace debias {

enum class Comparator { kLess, kLessEqual, kGreater, kGreaterEqual };

struct ConfidenceClause {
  Comparator op = Comparator::kLess;
  double threshold = 0.0;
  bool holds(double confidence) const;
};

// Conjunction of constraint clauses plus optional confidence and
// predicted-class clauses. At least one clause of any kind is required.
struct FilterPredicate {
  std::vector<Constraint> clauses;
  std::optional<ConfidenceClause> confidence;
  std::optional<std::string> predicted_class;

  // Throws Error{kInvalidPredicate}.
  void validate(const Schema& schema) const;
  bool needs_predictions() const { return confidence || predicted_class; }
};

struct FilterResult {
  std::vector<std::string> matching;
  std::vector<std::string> non_matching;
};

// Partitions the pending and modified samples in batch order.
// Errors: kInvalidPredicate, kUnannotatedBatch.
FilterResult filter_batch(const GeneratedBatch& batch, const FilterPredicate& predicate, const Schema& schema);

// Errors: kUnknownSample, kIllegalTransition. The input is left unchanged on
// error.
GeneratedBatch remove_samples(GeneratedBatch batch, std::span<const std::string> ids);

inline constexpr double kDefaultConfidenceThreshold = 0.6;

// Predicts every non-removed sample and flags those whose predicted class is
// not the plan target or whose confidence is below `threshold`.
// Errors: kSchemaMismatch.
GeneratedBatch annotate_batch(GeneratedBatch batch, const Model& model, const Schema& schema,
                              double threshold = kDefaultConfidenceThreshold);
std::vector<std::string> flagged_ids(const GeneratedBatch& batch);

struct ValueEdit {
  std::string variable;
  std::string value;
};

struct WhatIfResult {
  Row candidate;
  Prediction before;
  Prediction after;
};

// Pure preview of edits. Errors: kUnknownSample, kValueError, kSchemaMismatch.
WhatIfResult what_if(const GeneratedBatch& batch, std::string_view sample_id, std::span<const ValueEdit> edits,
                     const Model& model, const Schema& schema);

// Applies edits that keep the sample within batch.plan; the sample becomes
// modified and its prediction is cleared.
// Errors: kUnknownSample, kValueError, kConstraintViolation, kIllegalTransition.
GeneratedBatch commit_edit(GeneratedBatch batch, std::string_view sample_id, std::span<const ValueEdit> edits,
                           const Schema& schema);

struct AcceptResult {
  Dataset dataset;
  GeneratedBatch batch;
};

// Marks the samples kept and appends them as generated rows.
// Errors: kUnknownSample, kIllegalTransition, kInvalidRequest (duplicate id).
AcceptResult accept_batch(const Dataset& dataset, GeneratedBatch batch, std::span<const std::string> ids);

// CSV in schema order. With provenance the columns origin, batch_id,
// sample_id, base_row_id, neighbor_row_id and u follow; they are blank for
// original rows.
std::string export_csv(const Dataset& dataset, bool include_provenance);

nlohmann::json to_json(const FilterPredicate& predicate);
FilterPredicate predicate_from_json(const nlohmann::json& doc);
std::vector<ValueEdit> edits_from_json(const nlohmann::json& doc);
nlohmann::json to_json(std::span<const ValueEdit> edits);

// ---------------------------------------------------------------------------
// Session log

enum class Action {
  kLoaded,
  kTrained,
  kPlanned,
  kGenerated,
  kAnnotated,
  kFiltered,
  kRemoved,
  kModified,
  kWhatIf,
  kAccepted,
  kExported,
};
std::string_view to_string(Action action);
Action action_from_string(std::string_view name);

struct LogRecord {
  uint64_t seq = 0;
  std::string timestamp;
  Action action = Action::kLoaded;
  nlohmann::json request;
  nlohmann::json result;
};

// Produces the timestamp for record `seq`.
using Clock = std::function<std::string(uint64_t seq)>;
Clock wall_clock();
// 1970-01-01T00:00:00Z plus `seq` seconds; makes logs byte-comparable.
Clock logical_clock();

// Append-only; sequence numbers start at 1 and have no gaps.
class SessionLog {
 public:
  const LogRecord& append(Action action, nlohmann::json request, nlohmann::json result, const Clock& clock);
  const std::vector<LogRecord>& records() const { return records_; }
  size_t size() const { return records_.size(); }

  std::string to_ndjson() const;
  // Throws Error{kInvalidRequest} on malformed lines or broken sequencing.
  static SessionLog from_ndjson(std::string_view text);

 private:
  std::vector<LogRecord> records_;
};

nlohmann::json to_json(const LogRecord& record);

}  // namespace debias
