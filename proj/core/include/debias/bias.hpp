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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "debias/tabular.hpp"

namespace debias {

using SubgroupCounts = std::vector<std::pair<SubgroupKey, size_t>>;
using SubgroupAccuracy = std::map<SubgroupKey, double>;

// count_i / max_j count_j, in input order.
// Errors: kEmptyInput, kAllZeroCounts.
std::vector<std::pair<SubgroupKey, double>> representation_rates(const SubgroupCounts& counts);

struct CoverageResult {
  SubgroupKey key;
  bool met = false;
  size_t deficit = 0;
};

// met <=> count >= threshold; deficit = max(0, threshold - count).
// Errors: kEmptyInput.
std::vector<CoverageResult> coverage_check(const SubgroupCounts& counts, size_t threshold);

struct SubgroupStats {
  SubgroupKey key;
  size_t count = 0;
  double representation_rate = 0.0;  // 0 only when count == 0
  bool empty = false;
  bool coverage_met = false;
  size_t coverage_deficit = 0;
  std::optional<double> subgroup_accuracy;
};

struct VariableReport {
  std::string variable;
  std::vector<SubgroupStats> subgroups;
  double min_rate = 0.0;
  size_t uncovered = 0;
};

struct BiasReport {
  std::string dataset_id;
  size_t row_count = 0;
  size_t coverage_threshold = 0;
  bool threshold_defaulted = false;
  std::vector<VariableReport> predictors;  // schema order
  VariableReport target;                   // class balance, reported apart
  size_t uncovered_subgroup_count = 0;     // over predictors
  std::vector<SubgroupKey> most_impacted;  // over predictors

  const VariableReport* find(std::string_view variable) const;
};

// ceil(10% of the mean predictor-subgroup count).
size_t default_coverage_threshold(const Dataset& dataset);

// Audits every predictor and, separately, the target. When `threshold` is
// empty the default above is used and flagged in the report.
BiasReport bias_report(const Dataset& dataset, std::optional<size_t> threshold,
                       const SubgroupAccuracy* subgroup_accuracy = nullptr);

// Stable field names; variables in schema order, subgroups in canonical order.
nlohmann::json to_json(const BiasReport& report);
nlohmann::json to_json(const SubgroupKey& key);

}  // namespace debias
