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

#include "debias/curation.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <set>

#include "debias/csv.hpp"
#include "debias/error.hpp"

namespace debias {

bool ConfidenceClause::holds(double c) const {
  switch (op) {
    case Comparator::kLess: return c < threshold;
    case Comparator::kLessEqual: return c <= threshold;
    case Comparator::kGreater: return c > threshold;
    case Comparator::kGreaterEqual: return c >= threshold;
  }
  return false;
}

void FilterPredicate::validate(const Schema& schema) const {
  if (clauses.empty() && !confidence && !predicted_class) {
    throw Error(ErrorCode::kInvalidPredicate, "filter predicate has no clauses");
  }
  for (const auto& c : clauses) c.validate(schema, ErrorCode::kInvalidPredicate, /*predictors_only=*/false);
  if (confidence && !(confidence->threshold >= 0.0 && confidence->threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidPredicate, "confidence threshold must lie in [0, 1]");
  }
  if (predicted_class && !schema.category_index(schema.target_index(), *predicted_class)) {
    throw Error(ErrorCode::kInvalidPredicate, "'" + *predicted_class + "' is not a target class");
  }
}

namespace {

bool active(const GeneratedSample& s) {
  return s.status == SampleStatus::kPending || s.status == SampleStatus::kModified;
}

GeneratedSample& require_sample(GeneratedBatch& batch, std::string_view id) {
  if (GeneratedSample* s = batch.find(id)) return *s;
  throw Error(ErrorCode::kUnknownSample,
              "batch " + batch.id + " has no sample '" + std::string(id) + "'", {{"sample_id", std::string(id)}});
}

void require_transition(const GeneratedSample& s, SampleStatus to) {
  if (!transition_allowed(s.status, to)) {
    throw Error(ErrorCode::kIllegalTransition,
                "sample " + s.id + " cannot go from " + std::string(to_string(s.status)) + " to " +
                    std::string(to_string(to)),
                {{"sample_id", s.id}, {"from", std::string(to_string(s.status))}, {"to", std::string(to_string(to))}});
  }
}

std::vector<EditRecord> apply_edits(const Schema& schema, Row& values, std::span<const ValueEdit> edits) {
  std::vector<EditRecord> history;
  for (const ValueEdit& e : edits) {
    auto j = schema.find(e.variable);
    if (!j) {
      throw Error(ErrorCode::kValueError, "unknown variable '" + e.variable + "'", {{"variable", e.variable}});
    }
    if (schema[*j].is_target()) {
      throw Error(ErrorCode::kValueError, "the target variable cannot be edited", {{"variable", e.variable}});
    }
    double parsed = 0.0;
    try {
      parsed = schema.parse_cell(*j, e.value);
    } catch (const Error& err) {
      throw Error(ErrorCode::kValueError, err.what(), {{"variable", e.variable}, {"value", e.value}});
    }
    history.push_back({e.variable, schema.format_cell(*j, values[*j]), schema.format_cell(*j, parsed)});
    values[*j] = parsed;
  }
  return history;
}

}  // namespace

FilterResult filter_batch(const GeneratedBatch& batch, const FilterPredicate& predicate, const Schema& schema) {
  predicate.validate(schema);
  FilterResult out;
  if (predicate.needs_predictions()) {
    for (const auto& s : batch.samples) {
      if (active(s) && !s.prediction) {
        throw Error(ErrorCode::kUnannotatedBatch, "sample " + s.id + " has no prediction; annotate the batch first",
                    {{"sample_id", s.id}});
      }
    }
  }
  for (const auto& s : batch.samples) {
    if (!active(s)) continue;
    bool match = std::all_of(predicate.clauses.begin(), predicate.clauses.end(),
                             [&](const Constraint& c) { return c.holds(schema, s.values); });
    if (match && predicate.confidence) match = predicate.confidence->holds(s.prediction->confidence);
    if (match && predicate.predicted_class) match = s.prediction->label_name == *predicate.predicted_class;
    (match ? out.matching : out.non_matching).push_back(s.id);
  }
  return out;
}

GeneratedBatch remove_samples(GeneratedBatch batch, std::span<const std::string> ids) {
  for (const auto& id : ids) {
    GeneratedSample& s = require_sample(batch, id);
    require_transition(s, SampleStatus::kRemoved);
    s.status = SampleStatus::kRemoved;
  }
  if (!ids.empty()) ++batch.version;
  return batch;
}

GeneratedBatch annotate_batch(GeneratedBatch batch, const Model& model, const Schema& schema, double threshold) {
  check_compatible(model, schema);
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidRequest, "confidence threshold must lie in [0, 1]");
  }
  const std::string& target = batch.plan.target_class;
  for (auto& s : batch.samples) {
    if (s.status == SampleStatus::kRemoved) continue;
    s.prediction = predict(model, s.values);
    s.flagged = s.prediction->label_name != target || s.prediction->confidence < threshold;
  }
  ++batch.version;
  return batch;
}

std::vector<std::string> flagged_ids(const GeneratedBatch& batch) {
  std::vector<std::string> out;
  for (const auto& s : batch.samples) {
    if (s.status != SampleStatus::kRemoved && s.prediction && s.flagged) out.push_back(s.id);
  }
  return out;
}

WhatIfResult what_if(const GeneratedBatch& batch, std::string_view sample_id, std::span<const ValueEdit> edits,
                     const Model& model, const Schema& schema) {
  check_compatible(model, schema);
  const GeneratedSample* s = batch.find(sample_id);
  if (!s) {
    throw Error(ErrorCode::kUnknownSample, "batch " + batch.id + " has no sample '" + std::string(sample_id) + "'",
                {{"sample_id", std::string(sample_id)}});
  }
  if (s->status == SampleStatus::kRemoved) {
    throw Error(ErrorCode::kIllegalTransition, "sample " + s->id + " has been removed", {{"sample_id", s->id}});
  }
  WhatIfResult out;
  out.candidate = s->values;
  apply_edits(schema, out.candidate, edits);
  out.before = predict(model, s->values);
  out.after = predict(model, out.candidate);
  return out;
}

GeneratedBatch commit_edit(GeneratedBatch batch, std::string_view sample_id, std::span<const ValueEdit> edits,
                           const Schema& schema) {
  if (edits.empty()) throw Error(ErrorCode::kInvalidRequest, "edit needs at least one value change");
  GeneratedSample& s = require_sample(batch, sample_id);
  require_transition(s, SampleStatus::kModified);
  Row values = s.values;
  std::vector<EditRecord> history = apply_edits(schema, values, edits);
  const std::vector<Violation> violations = validate_against(values, batch.plan, schema);
  if (!violations.empty()) {
    nlohmann::json details = nlohmann::json::array();
    for (const auto& v : violations) details.push_back(to_json(v));
    throw Error(ErrorCode::kConstraintViolation,
                "edit breaks the plan: " + violations.front().variable + " = " + violations.front().value +
                    " is outside " + violations.front().constraint,
                {{"sample_id", s.id}, {"violations", details}});
  }
  s.values = std::move(values);
  s.status = SampleStatus::kModified;
  s.prediction.reset();
  s.flagged = false;
  s.edit_history.insert(s.edit_history.end(), history.begin(), history.end());
  ++batch.version;
  return batch;
}

AcceptResult accept_batch(const Dataset& dataset, GeneratedBatch batch, std::span<const std::string> ids) {
  std::set<std::string> seen;
  std::vector<Row> rows;
  std::vector<Provenance> prov;
  for (const auto& id : ids) {
    if (!seen.insert(id).second) {
      throw Error(ErrorCode::kInvalidRequest, "sample '" + id + "' listed twice", {{"sample_id", id}});
    }
    GeneratedSample& s = require_sample(batch, id);
    require_transition(s, SampleStatus::kKept);
    s.status = SampleStatus::kKept;
    rows.push_back(s.values);
    prov.push_back({batch.id, s.id, s.base_row, s.neighbor_row, s.u});
  }
  if (!ids.empty()) ++batch.version;
  Dataset merged = dataset.with_generated(rows, prov);
  return {std::move(merged), std::move(batch)};
}

std::string export_csv(const Dataset& dataset, bool include_provenance) {
  if (!include_provenance) return write_csv(dataset);
  const Schema& schema = dataset.schema();
  std::string out;
  csv::Record rec;
  for (const auto& v : schema.variables()) rec.push_back(v.name);
  for (std::string_view c : provenance_columns()) rec.emplace_back(c);
  csv::write_record(out, rec);
  for (size_t i = 0; i < dataset.size(); ++i) {
    rec.clear();
    const Row& row = dataset.row(i);
    for (size_t j = 0; j < schema.size(); ++j) rec.push_back(schema.format_cell(j, row[j]));
    rec.emplace_back(to_string(dataset.origin(i)));
    if (const auto& p = dataset.provenance(i)) {
      rec.push_back(p->batch_id);
      rec.push_back(p->sample_id);
      rec.push_back(std::to_string(p->base_row));
      rec.push_back(std::to_string(p->neighbor_row));
      rec.push_back(format_number(p->u));
    } else {
      rec.insert(rec.end(), 5, std::string());
    }
    csv::write_record(out, rec);
  }
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

std::string_view comparator_name(Comparator op) {
  switch (op) {
    case Comparator::kLess: return "<";
    case Comparator::kLessEqual: return "<=";
    case Comparator::kGreater: return ">";
    case Comparator::kGreaterEqual: return ">=";
  }
  return "?";
}

Comparator parse_comparator(const std::string& s) {
  if (s == "<" || s == "lt") return Comparator::kLess;
  if (s == "<=" || s == "≤" || s == "le") return Comparator::kLessEqual;
  if (s == ">" || s == "gt") return Comparator::kGreater;
  if (s == ">=" || s == "≥" || s == "ge") return Comparator::kGreaterEqual;
  throw Error(ErrorCode::kInvalidPredicate, "unknown comparator '" + s + "'");
}

std::string json_scalar_text(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return format_number(v.get<double>());
  throw Error(ErrorCode::kValueError, "edit value must be a string or number");
}

}  // namespace

nlohmann::json to_json(const FilterPredicate& p) {
  nlohmann::json clauses = nlohmann::json::array();
  for (const auto& c : p.clauses) clauses.push_back(to_json(c));
  nlohmann::json out = {{"clauses", clauses}};
  out["confidence"] = p.confidence ? nlohmann::json{{"op", std::string(comparator_name(p.confidence->op))},
                                                    {"threshold", p.confidence->threshold}}
                                   : nlohmann::json();
  out["predicted_class"] = p.predicted_class ? nlohmann::json(*p.predicted_class) : nlohmann::json();
  return out;
}

FilterPredicate predicate_from_json(const nlohmann::json& doc) {
  FilterPredicate p;
  try {
    if (doc.contains("clauses")) {
      for (const auto& c : doc.at("clauses")) {
        try {
          p.clauses.push_back(constraint_from_json(c));
        } catch (const Error& e) {
          throw Error(ErrorCode::kInvalidPredicate, e.what());
        }
      }
    }
    if (doc.contains("confidence") && !doc.at("confidence").is_null()) {
      const auto& c = doc.at("confidence");
      p.confidence = ConfidenceClause{parse_comparator(c.at("op").get<std::string>()), c.at("threshold").get<double>()};
    }
    if (doc.contains("predicted_class") && !doc.at("predicted_class").is_null()) {
      p.predicted_class = doc.at("predicted_class").get<std::string>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidPredicate, std::string("malformed predicate: ") + e.what());
  }
  if (p.clauses.empty() && !p.confidence && !p.predicted_class) {
    throw Error(ErrorCode::kInvalidPredicate, "filter predicate has no clauses");
  }
  return p;
}

std::vector<ValueEdit> edits_from_json(const nlohmann::json& doc) {
  std::vector<ValueEdit> out;
  if (doc.is_null()) return out;
  try {
    if (doc.is_object()) {
      for (const auto& [k, v] : doc.items()) out.push_back({k, json_scalar_text(v)});
    } else {
      for (const auto& e : doc) out.push_back({e.at("variable").get<std::string>(), json_scalar_text(e.at("value"))});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidRequest, std::string("malformed edits: ") + e.what());
  }
  return out;
}

nlohmann::json to_json(std::span<const ValueEdit> edits) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& e : edits) out.push_back({{"variable", e.variable}, {"value", e.value}});
  return out;
}

// ---------------------------------------------------------------------------
// Log

namespace {
constexpr std::pair<Action, std::string_view> kActionNames[] = {
    {Action::kLoaded, "loaded"},       {Action::kTrained, "trained"},   {Action::kPlanned, "planned"},
    {Action::kGenerated, "generated"}, {Action::kAnnotated, "annotated"}, {Action::kFiltered, "filtered"},
    {Action::kRemoved, "removed"},     {Action::kModified, "modified"}, {Action::kWhatIf, "what_if"},
    {Action::kAccepted, "accepted"},   {Action::kExported, "exported"},
};

std::string format_utc(std::time_t secs, int millis) {
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, millis);
  return buf;
}
}  // namespace

std::string_view to_string(Action action) {
  for (const auto& [a, name] : kActionNames) {
    if (a == action) return name;
  }
  return "?";
}

Action action_from_string(std::string_view name) {
  for (const auto& [a, n] : kActionNames) {
    if (n == name) return a;
  }
  throw Error(ErrorCode::kInvalidRequest, "unknown log action '" + std::string(name) + "'");
}

Clock wall_clock() {
  return [](uint64_t) {
    const auto now = std::chrono::system_clock::now();
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count();
    return format_utc(static_cast<std::time_t>(ms / 1000), static_cast<int>(ms % 1000));
  };
}

Clock logical_clock() {
  return [](uint64_t seq) { return format_utc(static_cast<std::time_t>(seq), 0); };
}

const LogRecord& SessionLog::append(Action action, nlohmann::json request, nlohmann::json result,
                                    const Clock& clock) {
  LogRecord r;
  r.seq = records_.size() + 1;
  r.timestamp = clock(r.seq);
  r.action = action;
  r.request = std::move(request);
  r.result = std::move(result);
  records_.push_back(std::move(r));
  return records_.back();
}

nlohmann::json to_json(const LogRecord& r) {
  return {{"seq", r.seq},
          {"timestamp", r.timestamp},
          {"action", std::string(to_string(r.action))},
          {"request", r.request},
          {"result", r.result}};
}

std::string SessionLog::to_ndjson() const {
  std::string out;
  for (const auto& r : records_) {
    out += to_json(r).dump();
    out.push_back('\n');
  }
  return out;
}

SessionLog SessionLog::from_ndjson(std::string_view text) {
  SessionLog log;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      LogRecord r;
      r.seq = j.at("seq").get<uint64_t>();
      r.timestamp = j.at("timestamp").get<std::string>();
      r.action = action_from_string(j.at("action").get<std::string>());
      r.request = j.at("request");
      r.result = j.at("result");
      if (r.seq != log.records_.size() + 1) {
        throw Error(ErrorCode::kInvalidRequest, "log sequence breaks at record " + std::to_string(r.seq));
      }
      log.records_.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kInvalidRequest, std::string("malformed log line: ") + e.what());
    }
  }
  return log;
}

}  // namespace debias
