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

#include "debias/bias.hpp"

#include <algorithm>
#include <tuple>

#include "debias/error.hpp"

namespace debias {

std::vector<std::pair<SubgroupKey, double>> representation_rates(const SubgroupCounts& counts) {
  if (counts.empty()) throw Error(ErrorCode::kEmptyInput, "no subgroups to rate");
  size_t max_count = 0;
  for (const auto& [key, n] : counts) max_count = std::max(max_count, n);
  if (max_count == 0) throw Error(ErrorCode::kAllZeroCounts, "every subgroup count is zero");
  std::vector<std::pair<SubgroupKey, double>> out;
  out.reserve(counts.size());
  for (const auto& [key, n] : counts) {
    out.emplace_back(key, static_cast<double>(n) / static_cast<double>(max_count));
  }
  return out;
}

std::vector<CoverageResult> coverage_check(const SubgroupCounts& counts, size_t threshold) {
  if (counts.empty()) throw Error(ErrorCode::kEmptyInput, "no subgroups to check");
  std::vector<CoverageResult> out;
  out.reserve(counts.size());
  for (const auto& [key, n] : counts) {
    out.push_back({key, n >= threshold, n >= threshold ? 0 : threshold - n});
  }
  return out;
}

const VariableReport* BiasReport::find(std::string_view variable) const {
  if (target.variable == variable) return &target;
  for (const auto& v : predictors) {
    if (v.variable == variable) return &v;
  }
  return nullptr;
}

size_t default_coverage_threshold(const Dataset& dataset) {
  const Schema& schema = dataset.schema();
  size_t subgroup_total = 0;
  size_t predictors = 0;
  for (const auto& v : schema.variables()) {
    if (v.is_target()) continue;
    ++predictors;
    subgroup_total += partition(dataset, v.name).keys.size();
  }
  if (subgroup_total == 0) return 0;
  // Each predictor partitions every row, so the mean subgroup count is
  // rows * predictors / subgroups.
  const size_t numerator = dataset.size() * predictors;
  const size_t denominator = 10 * subgroup_total;
  return (numerator + denominator - 1) / denominator;
}

namespace {

VariableReport audit_variable(const Dataset& dataset, const std::string& variable, size_t threshold,
                              const SubgroupAccuracy* accuracy) {
  const SubgroupCounts counts = subgroups(dataset, variable);
  const auto rates = representation_rates(counts);
  const auto coverage = coverage_check(counts, threshold);
  VariableReport report;
  report.variable = variable;
  report.min_rate = 1.0;
  for (size_t i = 0; i < counts.size(); ++i) {
    SubgroupStats s;
    s.key = counts[i].first;
    s.count = counts[i].second;
    s.representation_rate = rates[i].second;
    s.empty = s.count == 0;
    s.coverage_met = coverage[i].met;
    s.coverage_deficit = coverage[i].deficit;
    if (accuracy) {
      if (auto it = accuracy->find(s.key); it != accuracy->end()) s.subgroup_accuracy = it->second;
    }
    report.min_rate = std::min(report.min_rate, s.representation_rate);
    if (!s.coverage_met) ++report.uncovered;
    report.subgroups.push_back(std::move(s));
  }
  return report;
}

}  // namespace

BiasReport bias_report(const Dataset& dataset, std::optional<size_t> threshold,
                       const SubgroupAccuracy* subgroup_accuracy) {
  BiasReport report;
  report.dataset_id = dataset.id();
  report.row_count = dataset.size();
  report.threshold_defaulted = !threshold.has_value();
  report.coverage_threshold = threshold ? *threshold : default_coverage_threshold(dataset);

  const Schema& schema = dataset.schema();
  std::vector<const SubgroupStats*> ranked;
  for (const auto& v : schema.variables()) {
    if (v.is_target()) continue;
    report.predictors.push_back(audit_variable(dataset, v.name, report.coverage_threshold, subgroup_accuracy));
  }
  report.target = audit_variable(dataset, schema.target().name, report.coverage_threshold, nullptr);

  for (const auto& v : report.predictors) {
    report.uncovered_subgroup_count += v.uncovered;
    for (const auto& s : v.subgroups) ranked.push_back(&s);
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const SubgroupStats* a, const SubgroupStats* b) {
    const double sa = a->subgroup_accuracy.value_or(a->representation_rate);
    const double sb = b->subgroup_accuracy.value_or(b->representation_rate);
    return std::tie(sa, a->count, a->key) < std::tie(sb, b->count, b->key);
  });
  for (const SubgroupStats* s : ranked) report.most_impacted.push_back(s->key);
  return report;
}

nlohmann::json to_json(const SubgroupKey& key) {
  return {{"variable", key.variable}, {"label", key.label}};
}

namespace {

nlohmann::json variable_json(const VariableReport& v) {
  nlohmann::json subs = nlohmann::json::array();
  for (const auto& s : v.subgroups) {
    nlohmann::json j = {{"label", s.key.label},
                        {"count", s.count},
                        {"representation_rate", s.representation_rate},
                        {"empty", s.empty},
                        {"coverage_met", s.coverage_met},
                        {"coverage_deficit", s.coverage_deficit}};
    j["subgroup_accuracy"] = s.subgroup_accuracy ? nlohmann::json(*s.subgroup_accuracy) : nlohmann::json();
    subs.push_back(std::move(j));
  }
  return {{"variable", v.variable}, {"min_rate", v.min_rate}, {"uncovered", v.uncovered}, {"subgroups", subs}};
}

}  // namespace

nlohmann::json to_json(const BiasReport& report) {
  nlohmann::json out;
  out["dataset_id"] = report.dataset_id;
  out["row_count"] = report.row_count;
  out["coverage_threshold"] = report.coverage_threshold;
  out["threshold_defaulted"] = report.threshold_defaulted;
  // Array keeps schema order; json objects would sort keys.
  nlohmann::json vars = nlohmann::json::array();
  nlohmann::json min_rates = nlohmann::json::array();
  for (const auto& v : report.predictors) {
    vars.push_back(variable_json(v));
    min_rates.push_back({{"variable", v.variable}, {"min_rate", v.min_rate}});
  }
  out["per_variable"] = vars;
  out["min_rate_per_variable"] = min_rates;
  out["uncovered_subgroup_count"] = report.uncovered_subgroup_count;
  nlohmann::json impacted = nlohmann::json::array();
  for (const auto& k : report.most_impacted) impacted.push_back(to_json(k));
  out["most_impacted"] = impacted;
  out["target"] = variable_json(report.target);
  return out;
}

}  // namespace debias
