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

#include "debias/augment.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "debias/csv.hpp"
#include "debias/rng.hpp"

namespace debias {

void Constraint::validate(const Schema& schema, ErrorCode code, bool predictors_only) const {
  auto idx = schema.find(variable);
  if (!idx) throw Error(code, "constraint on unknown variable '" + variable + "'", {{"variable", variable}});
  const VariableSchema& v = schema[*idx];
  if (predictors_only && v.is_target()) {
    throw Error(code, "constraint on target variable '" + variable + "'", {{"variable", variable}});
  }
  if (const auto* iv = std::get_if<Interval>(&body)) {
    if (!v.is_numeric()) throw Error(code, "interval constraint on categorical '" + variable + "'");
    if (!std::isfinite(iv->lo) || !std::isfinite(iv->hi) || iv->lo > iv->hi) {
      throw Error(code, "interval for '" + variable + "' must satisfy lo <= hi", {{"variable", variable}});
    }
  } else {
    const auto& set = std::get<AllowedSet>(body);
    if (v.is_numeric()) throw Error(code, "category constraint on numeric '" + variable + "'");
    if (set.labels.empty()) throw Error(code, "allowed set for '" + variable + "' is empty");
    for (const auto& label : set.labels) {
      if (!schema.category_index(*idx, label)) {
        throw Error(code, "'" + label + "' is not a category of '" + variable + "'",
                    {{"variable", variable}, {"value", label}});
      }
    }
  }
}

bool Constraint::holds(const Schema& schema, const Row& row) const {
  const size_t j = schema.index_of(variable);
  const double x = row[j];
  if (const auto* iv = std::get_if<Interval>(&body)) return iv->lo <= x && x <= iv->hi;
  const std::string& label = schema[j].categories[static_cast<size_t>(x)];
  const auto& labels = std::get<AllowedSet>(body).labels;
  return std::find(labels.begin(), labels.end(), label) != labels.end();
}

std::string Constraint::describe() const {
  if (const auto* iv = std::get_if<Interval>(&body)) {
    return "[" + format_number(iv->lo) + ", " + format_number(iv->hi) + "]";
  }
  std::string out = "{";
  const auto& labels = std::get<AllowedSet>(body).labels;
  for (size_t i = 0; i < labels.size(); ++i) out += (i ? ", " : "") + labels[i];
  return out + "}";
}

void AugmentationPlan::validate(const Schema& schema) const {
  if (!schema.category_index(schema.target_index(), target_class)) {
    throw Error(ErrorCode::kInvalidPlan, "'" + target_class + "' is not a target class",
                {{"target_class", target_class}});
  }
  if (requested_count < 1) throw Error(ErrorCode::kInvalidPlan, "requested_count must be >= 1");
  if (neighbor_k < 1) throw Error(ErrorCode::kInvalidPlan, "neighbor_k must be >= 1");
  if (max_attempt_factor < 1) throw Error(ErrorCode::kInvalidPlan, "max_attempt_factor must be >= 1");
  std::set<std::string> seen;
  for (const auto& c : constraints) {
    c.validate(schema, ErrorCode::kInvalidPlan);
    if (!seen.insert(c.variable).second) {
      throw Error(ErrorCode::kInvalidPlan, "two constraints on '" + c.variable + "'", {{"variable", c.variable}});
    }
  }
}

std::string_view to_string(SampleStatus status) {
  switch (status) {
    case SampleStatus::kPending: return "pending";
    case SampleStatus::kKept: return "kept";
    case SampleStatus::kRemoved: return "removed";
    case SampleStatus::kModified: return "modified";
  }
  return "?";
}

bool transition_allowed(SampleStatus from, SampleStatus to) {
  if (from == SampleStatus::kPending || from == SampleStatus::kModified) return to != SampleStatus::kPending;
  return false;
}

GeneratedSample* GeneratedBatch::find(std::string_view sample_id) {
  for (auto& s : samples) {
    if (s.id == sample_id) return &s;
  }
  return nullptr;
}

const GeneratedSample* GeneratedBatch::find(std::string_view sample_id) const {
  return const_cast<GeneratedBatch*>(this)->find(sample_id);
}

size_t GeneratedBatch::count(SampleStatus status) const {
  return static_cast<size_t>(
      std::count_if(samples.begin(), samples.end(), [&](const GeneratedSample& s) { return s.status == status; }));
}

std::vector<size_t> eligible_pool(const Dataset& dataset, const AugmentationPlan& plan) {
  const Schema& schema = dataset.schema();
  plan.validate(schema);
  const double target = static_cast<double>(*schema.category_index(schema.target_index(), plan.target_class));
  std::vector<size_t> pool;
  for (size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.origin(i) != Origin::kOriginal || dataset.target_value(i) != target) continue;
    const Row& row = dataset.row(i);
    if (std::all_of(plan.constraints.begin(), plan.constraints.end(),
                    [&](const Constraint& c) { return c.holds(schema, row); })) {
      pool.push_back(i);
    }
  }
  return pool;
}

GowerMetric::GowerMetric(const Dataset& dataset, std::span<const size_t> pool) {
  const Schema& schema = dataset.schema();
  for (size_t j = 0; j < schema.size(); ++j) {
    if (schema[j].is_target()) continue;
    Term t{j, !schema[j].is_numeric(), 0.0};
    if (!t.categorical && !pool.empty()) {
      double lo = dataset.row(pool[0])[j];
      double hi = lo;
      for (size_t r : pool) {
        lo = std::min(lo, dataset.row(r)[j]);
        hi = std::max(hi, dataset.row(r)[j]);
      }
      t.range = hi - lo;
    }
    terms_.push_back(t);
  }
}

double GowerMetric::distance(const Row& a, const Row& b) const {
  if (terms_.empty()) return 0.0;
  double sum = 0.0;
  for (const Term& t : terms_) {
    if (t.categorical) {
      sum += a[t.column] != b[t.column] ? 1.0 : 0.0;
    } else if (t.range > 0.0) {
      sum += std::abs(a[t.column] - b[t.column]) / t.range;
    }
  }
  return sum / static_cast<double>(terms_.size());
}

namespace {

std::vector<size_t> knn_with(const Dataset& dataset, const GowerMetric& metric, std::span<const size_t> pool,
                             size_t base, size_t k) {
  std::vector<std::pair<double, size_t>> scored;
  scored.reserve(pool.size());
  for (size_t r : pool) {
    if (r == base) continue;
    scored.emplace_back(metric.distance(dataset.row(base), dataset.row(r)), r);
  }
  if (k > scored.size()) {
    throw Error(ErrorCode::kKTooLarge,
                "k = " + std::to_string(k) + " exceeds the " + std::to_string(scored.size()) + " candidate rows");
  }
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(k), scored.end());
  std::vector<size_t> out(k);
  for (size_t i = 0; i < k; ++i) out[i] = scored[i].second;
  return out;
}

}  // namespace

std::vector<size_t> nearest_neighbors(const Dataset& dataset, std::span<const size_t> pool, size_t base, size_t k) {
  return knn_with(dataset, GowerMetric(dataset, pool), pool, base, k);
}

std::vector<Violation> validate_against(const Row& values, const AugmentationPlan& plan, const Schema& schema) {
  std::vector<Violation> out;
  const size_t t = schema.target_index();
  const auto target = schema.category_index(t, plan.target_class);
  if (!target || values[t] != static_cast<double>(*target)) {
    out.push_back({schema.target().name, "= " + plan.target_class, schema.format_cell(t, values[t])});
  }
  for (const auto& c : plan.constraints) {
    if (!c.holds(schema, values)) {
      const size_t j = schema.index_of(c.variable);
      out.push_back({c.variable, c.describe(), schema.format_cell(j, values[j])});
    }
  }
  return out;
}

GeneratedBatch generate(const Dataset& dataset, const AugmentationPlan& plan, std::string batch_id,
                        std::string plan_id) {
  const Schema& schema = dataset.schema();
  const std::vector<size_t> pool = eligible_pool(dataset, plan);
  if (pool.size() < 2) {
    throw Error(ErrorCode::kInsufficientEligibleSamples,
                "eligible pool has " + std::to_string(pool.size()) + " rows; at least 2 are needed",
                {{"eligible_pool_size", pool.size()}});
  }
  const size_t k = std::min(plan.neighbor_k, pool.size() - 1);
  const GowerMetric metric(dataset, pool);
  const double target = static_cast<double>(*schema.category_index(schema.target_index(), plan.target_class));

  // Integer variables are clamped into the integer span of their interval.
  std::vector<std::optional<Interval>> integer_bounds(schema.size());
  for (const auto& c : plan.constraints) {
    const size_t j = schema.index_of(c.variable);
    if (schema[j].kind == VariableKind::kInteger) {
      const auto& iv = std::get<Interval>(c.body);
      integer_bounds[j] = Interval{std::ceil(iv.lo), std::floor(iv.hi)};
    }
  }

  GeneratedBatch batch;
  batch.id = std::move(batch_id);
  batch.plan_id = std::move(plan_id);
  batch.plan = plan;

  std::map<size_t, std::vector<size_t>> neighbor_cache;
  Rng rng(plan.seed);
  const size_t budget = plan.requested_count * plan.max_attempt_factor;
  while (batch.samples.size() < plan.requested_count && batch.attempts_used < budget) {
    ++batch.attempts_used;
    const size_t base = pool[rng.uniform_index(pool.size())];
    auto [it, inserted] = neighbor_cache.try_emplace(base);
    if (inserted) it->second = knn_with(dataset, metric, pool, base, k);
    const size_t neighbor = it->second[rng.uniform_index(k)];
    const double u = rng.uniform01();

    const Row& a = dataset.row(base);
    const Row& b = dataset.row(neighbor);
    Row values(schema.size());
    for (size_t j = 0; j < schema.size(); ++j) {
      const VariableSchema& v = schema[j];
      if (v.is_target()) {
        values[j] = target;
      } else if (v.kind == VariableKind::kCategorical) {
        values[j] = u < 0.5 ? a[j] : b[j];
      } else {
        const double lo = std::min(a[j], b[j]);
        const double hi = std::max(a[j], b[j]);
        double x = std::clamp(a[j] + u * (b[j] - a[j]), lo, hi);
        if (v.kind == VariableKind::kInteger) {
          x = std::floor(x + 0.5);
          if (const auto& ib = integer_bounds[j]) x = std::clamp(x, ib->lo, ib->hi);
        }
        values[j] = x;
      }
    }
    if (!validate_against(values, plan, schema).empty()) continue;

    GeneratedSample s;
    s.id = "g" + std::to_string(batch.samples.size() + 1);
    s.values = std::move(values);
    s.base_row = base;
    s.neighbor_row = neighbor;
    s.u = u;
    batch.samples.push_back(std::move(s));
  }
  batch.produced_count = batch.samples.size();
  return batch;
}

// ---------------------------------------------------------------------------
// JSON / CSV

nlohmann::json to_json(const Constraint& c) {
  if (const auto* iv = std::get_if<Interval>(&c.body)) {
    return {{"variable", c.variable}, {"interval", {{"lo", iv->lo}, {"hi", iv->hi}}}};
  }
  return {{"variable", c.variable}, {"allowed", std::get<AllowedSet>(c.body).labels}};
}

Constraint constraint_from_json(const nlohmann::json& doc) {
  try {
    Constraint c;
    c.variable = doc.at("variable").get<std::string>();
    if (doc.contains("interval")) {
      const auto& iv = doc.at("interval");
      if (iv.is_array()) {
        if (iv.size() != 2) throw Error(ErrorCode::kInvalidPlan, "interval needs [lo, hi]");
        c.body = Interval{iv[0].get<double>(), iv[1].get<double>()};
      } else {
        c.body = Interval{iv.at("lo").get<double>(), iv.at("hi").get<double>()};
      }
    } else if (doc.contains("allowed")) {
      c.body = AllowedSet{doc.at("allowed").get<std::vector<std::string>>()};
    } else {
      throw Error(ErrorCode::kInvalidPlan, "constraint on '" + c.variable + "' needs 'interval' or 'allowed'");
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidPlan, std::string("malformed constraint: ") + e.what());
  }
}

nlohmann::json to_json(const AugmentationPlan& p) {
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : p.constraints) cs.push_back(to_json(c));
  return {{"target_class", p.target_class}, {"requested_count", p.requested_count},
          {"constraints", cs},              {"neighbor_k", p.neighbor_k},
          {"seed", p.seed},                 {"max_attempt_factor", p.max_attempt_factor}};
}

AugmentationPlan plan_from_json(const nlohmann::json& doc) {
  try {
    AugmentationPlan p;
    p.target_class = doc.at("target_class").get<std::string>();
    const auto count = doc.at("requested_count").get<long long>();
    if (count < 1) throw Error(ErrorCode::kInvalidPlan, "requested_count must be >= 1");
    p.requested_count = static_cast<size_t>(count);
    if (doc.contains("constraints")) {
      for (const auto& c : doc.at("constraints")) p.constraints.push_back(constraint_from_json(c));
    }
    const auto k = doc.value("neighbor_k", 5LL);
    const auto factor = doc.value("max_attempt_factor", 20LL);
    if (k < 1 || factor < 1) throw Error(ErrorCode::kInvalidPlan, "neighbor_k and max_attempt_factor must be >= 1");
    p.neighbor_k = static_cast<size_t>(k);
    p.max_attempt_factor = static_cast<size_t>(factor);
    p.seed = doc.value("seed", uint64_t{0});
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidPlan, std::string("malformed plan: ") + e.what());
  }
}

nlohmann::json to_json(const Violation& v) {
  return {{"variable", v.variable}, {"constraint", v.constraint}, {"value", v.value}};
}

namespace {

SampleStatus status_from_string(const std::string& s) {
  if (s == "pending") return SampleStatus::kPending;
  if (s == "kept") return SampleStatus::kKept;
  if (s == "removed") return SampleStatus::kRemoved;
  if (s == "modified") return SampleStatus::kModified;
  throw Error(ErrorCode::kInvalidRequest, "unknown sample status '" + s + "'");
}

}  // namespace

nlohmann::json batch_to_json(const GeneratedBatch& batch, const Schema& schema) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : batch.samples) {
    nlohmann::json values = nlohmann::json::object();
    for (size_t j = 0; j < schema.size(); ++j) values[schema[j].name] = schema.format_cell(j, s.values[j]);
    nlohmann::json history = nlohmann::json::array();
    for (const auto& e : s.edit_history) {
      history.push_back({{"variable", e.variable}, {"old", e.old_value}, {"new", e.new_value}});
    }
    samples.push_back({{"id", s.id},
                       {"values", values},
                       {"provenance", {{"base_row_id", s.base_row}, {"neighbor_row_id", s.neighbor_row}, {"u", s.u}}},
                       {"status", std::string(to_string(s.status))},
                       {"prediction", s.prediction ? to_json(*s.prediction) : nlohmann::json()},
                       {"flagged", s.flagged},
                       {"edit_history", history}});
  }
  return {{"id", batch.id},
          {"plan_id", batch.plan_id},
          {"plan", to_json(batch.plan)},
          {"produced_count", batch.produced_count},
          {"attempts_used", batch.attempts_used},
          {"version", batch.version},
          {"samples", samples}};
}

GeneratedBatch batch_from_json(const nlohmann::json& doc, const Schema& schema) {
  try {
    GeneratedBatch b;
    b.id = doc.at("id").get<std::string>();
    b.plan_id = doc.value("plan_id", std::string());
    b.plan = plan_from_json(doc.at("plan"));
    b.produced_count = doc.at("produced_count").get<size_t>();
    b.attempts_used = doc.at("attempts_used").get<size_t>();
    b.version = doc.value("version", uint64_t{1});
    for (const auto& j : doc.at("samples")) {
      GeneratedSample s;
      s.id = j.at("id").get<std::string>();
      s.values.resize(schema.size());
      const auto& values = j.at("values");
      for (size_t v = 0; v < schema.size(); ++v) s.values[v] = schema.parse_cell(v, values.at(schema[v].name).get<std::string>());
      const auto& prov = j.at("provenance");
      s.base_row = prov.at("base_row_id").get<size_t>();
      s.neighbor_row = prov.at("neighbor_row_id").get<size_t>();
      s.u = prov.at("u").get<double>();
      s.status = status_from_string(j.at("status").get<std::string>());
      if (!j.at("prediction").is_null()) {
        const auto& p = j.at("prediction");
        Prediction pred;
        pred.label_name = p.at("label").get<std::string>();
        pred.label = *schema.category_index(schema.target_index(), pred.label_name);
        pred.probabilities = p.at("probabilities").get<std::vector<double>>();
        pred.confidence = p.at("confidence").get<double>();
        s.prediction = pred;
      }
      s.flagged = j.value("flagged", false);
      for (const auto& e : j.at("edit_history")) {
        s.edit_history.push_back({e.at("variable").get<std::string>(), e.at("old").get<std::string>(),
                                  e.at("new").get<std::string>()});
      }
      b.samples.push_back(std::move(s));
    }
    return b;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidRequest, std::string("malformed batch document: ") + e.what());
  }
}

std::string batch_to_csv(const GeneratedBatch& batch, const Schema& schema) {
  std::string out;
  csv::Record rec = {"sample_id"};
  for (const auto& v : schema.variables()) rec.push_back(v.name);
  for (const char* c : {"base_row_id", "neighbor_row_id", "u", "status"}) rec.emplace_back(c);
  csv::write_record(out, rec);
  for (const auto& s : batch.samples) {
    rec.clear();
    rec.push_back(s.id);
    for (size_t j = 0; j < schema.size(); ++j) rec.push_back(schema.format_cell(j, s.values[j]));
    rec.push_back(std::to_string(s.base_row));
    rec.push_back(std::to_string(s.neighbor_row));
    rec.push_back(format_number(s.u));
    rec.emplace_back(to_string(s.status));
    csv::write_record(out, rec);
  }
  return out;
}

}  // namespace debias
