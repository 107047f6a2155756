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
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "debias/error.hpp"
#include "debias/model.hpp"
#include "debias/tabular.hpp"

namespace debias {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool operator==(const Interval&) const = default;
};

struct AllowedSet {
  std::vector<std::string> labels;
  bool operator==(const AllowedSet&) const = default;
};

// Interval bodies apply to numeric variables, AllowedSet bodies to
// categorical ones.
struct Constraint {
  std::string variable;
  std::variant<Interval, AllowedSet> body;

  static Constraint interval(std::string variable, double lo, double hi) {
    return {std::move(variable), Interval{lo, hi}};
  }
  static Constraint allowed(std::string variable, std::vector<std::string> labels) {
    return {std::move(variable), AllowedSet{std::move(labels)}};
  }

  // Throws Error{code} when the constraint does not fit the schema.
  void validate(const Schema& schema, ErrorCode code, bool predictors_only = true) const;
  // Cell test against an aligned row; the constraint must be valid.
  bool holds(const Schema& schema, const Row& row) const;
  // "[50, 60]" or "{high, very-high}".
  std::string describe() const;

  bool operator==(const Constraint&) const = default;
};

struct AugmentationPlan {
  std::string target_class;
  size_t requested_count = 1;
  std::vector<Constraint> constraints;  // conjunction
  size_t neighbor_k = 5;
  uint64_t seed = 0;
  size_t max_attempt_factor = 20;

  // Throws Error{kInvalidPlan}.
  void validate(const Schema& schema) const;
  bool operator==(const AugmentationPlan&) const = default;
};

enum class SampleStatus { kPending, kKept, kRemoved, kModified };
std::string_view to_string(SampleStatus status);

// pending -> {kept, removed, modified}; modified -> {kept, removed, modified}.
// Repeated edits keep a sample in modified.
bool transition_allowed(SampleStatus from, SampleStatus to);

struct EditRecord {
  std::string variable;
  std::string old_value;
  std::string new_value;
  bool operator==(const EditRecord&) const = default;
};

struct GeneratedSample {
  std::string id;
  Row values;  // aligned with the dataset schema, target included
  size_t base_row = 0;
  size_t neighbor_row = 0;
  double u = 0.0;
  SampleStatus status = SampleStatus::kPending;
  std::optional<Prediction> prediction;
  bool flagged = false;
  std::vector<EditRecord> edit_history;

  bool operator==(const GeneratedSample&) const = default;
};

struct GeneratedBatch {
  std::string id;
  std::string plan_id;
  AugmentationPlan plan;
  std::vector<GeneratedSample> samples;
  size_t produced_count = 0;
  size_t attempts_used = 0;
  uint64_t version = 1;

  GeneratedSample* find(std::string_view sample_id);
  const GeneratedSample* find(std::string_view sample_id) const;
  size_t count(SampleStatus status) const;

  bool operator==(const GeneratedBatch&) const = default;
};

struct Violation {
  std::string variable;
  std::string constraint;
  std::string value;
};

// Original rows of the target class that satisfy every constraint, ascending.
std::vector<size_t> eligible_pool(const Dataset& dataset, const AugmentationPlan& plan);

// Mean over predictors of |a-b|/range (numeric, range taken over the pool) or
// a != b (categorical).
class GowerMetric {
 public:
  GowerMetric(const Dataset& dataset, std::span<const size_t> pool);
  double distance(const Row& a, const Row& b) const;

 private:
  struct Term {
    size_t column;
    bool categorical;
    double range;
  };
  std::vector<Term> terms_;
};

// k pool rows other than `base` closest under GowerMetric; ties by row id.
// Errors: kKTooLarge.
std::vector<size_t> nearest_neighbors(const Dataset& dataset, std::span<const size_t> pool, size_t base, size_t k);

// Constrained SMOTE-style interpolation. Runs until requested_count samples
// exist or requested_count * max_attempt_factor attempts are spent; a short
// batch is not an error. Errors: kInvalidPlan, kInsufficientEligibleSamples.
GeneratedBatch generate(const Dataset& dataset, const AugmentationPlan& plan, std::string batch_id = "batch",
                        std::string plan_id = "");

// Empty iff the row has the plan's target class and meets every constraint.
std::vector<Violation> validate_against(const Row& values, const AugmentationPlan& plan, const Schema& schema);

nlohmann::json to_json(const Constraint& c);
Constraint constraint_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const AugmentationPlan& plan);
AugmentationPlan plan_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const Violation& v);
nlohmann::json batch_to_json(const GeneratedBatch& batch, const Schema& schema);
GeneratedBatch batch_from_json(const nlohmann::json& doc, const Schema& schema);

// sample_id, schema columns, base_row_id, neighbor_row_id, u, status.
std::string batch_to_csv(const GeneratedBatch& batch, const Schema& schema);

}  // namespace debias
