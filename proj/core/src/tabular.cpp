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

#include "debias/tabular.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <set>
#include <unordered_map>

#include "debias/csv.hpp"
#include "debias/error.hpp"

namespace debias {

std::string_view to_string(VariableKind kind) {
  switch (kind) {
    case VariableKind::kContinuous: return "numeric-continuous";
    case VariableKind::kInteger: return "numeric-integer";
    case VariableKind::kCategorical: return "categorical";
  }
  return "?";
}

std::string_view to_string(VariableRole role) {
  return role == VariableRole::kTarget ? "target" : "predictor";
}

std::string_view to_string(BinStrategy strategy) {
  switch (strategy) {
    case BinStrategy::kEqualWidth: return "equal-width";
    case BinStrategy::kQuantile: return "quantile";
    case BinStrategy::kExplicitEdges: return "explicit-edges";
  }
  return "?";
}

std::string_view to_string(Origin origin) {
  return origin == Origin::kGenerated ? "generated" : "original";
}

void BinSpec::validate() const {
  if (strategy == BinStrategy::kExplicitEdges) {
    if (edges.size() < 3) {
      throw Error(ErrorCode::kInvalidSchema, "explicit-edges binning needs at least 3 edges");
    }
    for (size_t i = 0; i < edges.size(); ++i) {
      if (!std::isfinite(edges[i]) || (i > 0 && !(edges[i - 1] < edges[i]))) {
        throw Error(ErrorCode::kInvalidSchema, "binning edges must be finite and strictly increasing");
      }
    }
  } else if (bin_count < 2) {
    throw Error(ErrorCode::kInvalidSchema, "bin_count must be >= 2");
  }
}

// ---------------------------------------------------------------------------
// Schema

Schema::Schema(std::vector<VariableSchema> variables) : variables_(std::move(variables)) {
  if (variables_.empty()) throw Error(ErrorCode::kInvalidSchema, "schema has no variables");
  std::set<std::string> names;
  size_t targets = 0;
  for (size_t i = 0; i < variables_.size(); ++i) {
    const VariableSchema& v = variables_[i];
    if (v.name.empty()) throw Error(ErrorCode::kInvalidSchema, "variable name must be non-empty");
    if (!names.insert(v.name).second) {
      throw Error(ErrorCode::kInvalidSchema, "duplicate variable name '" + v.name + "'");
    }
    if (v.kind == VariableKind::kCategorical) {
      if (v.categories.empty()) {
        throw Error(ErrorCode::kInvalidSchema, "categorical variable '" + v.name + "' lists no categories");
      }
      std::set<std::string> seen(v.categories.begin(), v.categories.end());
      if (seen.size() != v.categories.size()) {
        throw Error(ErrorCode::kInvalidSchema, "variable '" + v.name + "' has duplicate categories");
      }
      if (v.binning) {
        throw Error(ErrorCode::kInvalidSchema, "binning on categorical variable '" + v.name + "'");
      }
    } else {
      if (!v.categories.empty()) {
        throw Error(ErrorCode::kInvalidSchema, "numeric variable '" + v.name + "' lists categories");
      }
      if (v.binning) v.binning->validate();
    }
    if (v.is_target()) {
      ++targets;
      target_ = i;
      if (v.kind != VariableKind::kCategorical || v.categories.size() < 2) {
        throw Error(ErrorCode::kInvalidSchema,
                    "target '" + v.name + "' must be categorical with at least 2 categories");
      }
    }
  }
  if (targets != 1) {
    throw Error(ErrorCode::kInvalidSchema, "schema must have exactly one target variable");
  }
}

std::optional<size_t> Schema::find(std::string_view name) const {
  for (size_t i = 0; i < variables_.size(); ++i) {
    if (variables_[i].name == name) return i;
  }
  return std::nullopt;
}

size_t Schema::index_of(std::string_view name) const {
  if (auto i = find(name)) return *i;
  throw Error(ErrorCode::kUnknownVariable, "unknown variable '" + std::string(name) + "'",
              {{"variable", std::string(name)}});
}

std::optional<size_t> Schema::category_index(size_t variable, std::string_view label) const {
  const auto& cats = variables_[variable].categories;
  auto it = std::find(cats.begin(), cats.end(), label);
  if (it == cats.end()) return std::nullopt;
  return static_cast<size_t>(it - cats.begin());
}

double Schema::parse_cell(size_t variable, std::string_view text) const {
  const VariableSchema& v = variables_[variable];
  if (text.empty()) throw Error(ErrorCode::kValueError, "missing value for '" + v.name + "'");
  if (v.kind == VariableKind::kCategorical) {
    if (auto idx = category_index(variable, text)) return static_cast<double>(*idx);
    throw Error(ErrorCode::kValueError,
                "'" + std::string(text) + "' is not a category of '" + v.name + "'");
  }
  auto value = parse_number(text);
  if (!value) {
    throw Error(ErrorCode::kValueError, "'" + std::string(text) + "' is not a number for '" + v.name + "'");
  }
  if (v.kind == VariableKind::kInteger && *value != std::trunc(*value)) {
    throw Error(ErrorCode::kValueError, "'" + std::string(text) + "' is not an integer for '" + v.name + "'");
  }
  return *value;
}

std::string Schema::format_cell(size_t variable, double value) const {
  const VariableSchema& v = variables_[variable];
  switch (v.kind) {
    case VariableKind::kCategorical: return v.categories.at(static_cast<size_t>(value));
    case VariableKind::kInteger: {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(value));
      return buf;
    }
    case VariableKind::kContinuous: return format_number(value);
  }
  return {};
}

// ---------------------------------------------------------------------------
// Dataset

void validate_row(const Schema& schema, const Row& row) {
  if (row.size() != schema.size()) {
    throw Error(ErrorCode::kValueError,
                "row has " + std::to_string(row.size()) + " values, schema has " + std::to_string(schema.size()));
  }
  for (size_t j = 0; j < row.size(); ++j) {
    const VariableSchema& v = schema[j];
    const double x = row[j];
    if (!std::isfinite(x)) throw Error(ErrorCode::kValueError, "non-finite value for '" + v.name + "'");
    if (v.kind == VariableKind::kCategorical) {
      if (x < 0 || x != std::trunc(x) || x >= static_cast<double>(v.categories.size())) {
        throw Error(ErrorCode::kValueError, "invalid category index for '" + v.name + "'",
                    {{"variable", v.name}});
      }
    } else if (v.kind == VariableKind::kInteger && x != std::trunc(x)) {
      throw Error(ErrorCode::kValueError, "non-integer value for '" + v.name + "'", {{"variable", v.name}});
    }
  }
}

Dataset::Dataset(std::string id, Schema schema, std::vector<Row> rows)
    : id_(std::move(id)), schema_(std::move(schema)), rows_(std::move(rows)) {
  if (rows_.empty()) throw Error(ErrorCode::kEmptyDataset, "dataset has no rows");
  for (const Row& r : rows_) validate_row(schema_, r);
  origin_.assign(rows_.size(), Origin::kOriginal);
  provenance_.assign(rows_.size(), std::nullopt);
}

size_t Dataset::original_count() const {
  return static_cast<size_t>(std::count(origin_.begin(), origin_.end(), Origin::kOriginal));
}

Dataset Dataset::with_generated(std::span<const Row> rows, std::span<const Provenance> provenance) const {
  if (rows.size() != provenance.size()) {
    throw Error(ErrorCode::kInvalidRequest, "generated rows and provenance differ in length");
  }
  Dataset out = *this;
  for (size_t i = 0; i < rows.size(); ++i) {
    validate_row(schema_, rows[i]);
    out.rows_.push_back(rows[i]);
    out.origin_.push_back(Origin::kGenerated);
    out.provenance_.push_back(provenance[i]);
  }
  return out;
}

namespace {
constexpr std::array<std::string_view, 6> kProvenanceColumns = {
    "origin", "batch_id", "sample_id", "base_row_id", "neighbor_row_id", "u"};
}

std::span<const std::string_view> provenance_columns() { return kProvenanceColumns; }

Dataset load_dataset(std::string_view csv_bytes, const Schema& schema, std::string id) {
  std::vector<csv::Record> records = csv::parse(csv_bytes);
  if (records.empty()) throw Error(ErrorCode::kSchemaMismatch, "csv has no header row");

  const csv::Record& header = records.front();
  std::vector<std::optional<size_t>> column_to_var(header.size());
  std::vector<bool> seen(schema.size(), false);
  for (size_t c = 0; c < header.size(); ++c) {
    if (auto v = schema.find(header[c])) {
      if (seen[*v]) {
        throw Error(ErrorCode::kSchemaMismatch, "duplicate column '" + header[c] + "'", {{"column", header[c]}});
      }
      seen[*v] = true;
      column_to_var[c] = *v;
    } else if (std::find(kProvenanceColumns.begin(), kProvenanceColumns.end(), header[c]) ==
               kProvenanceColumns.end()) {
      throw Error(ErrorCode::kSchemaMismatch, "column '" + header[c] + "' is not in the schema",
                  {{"column", header[c]}});
    }
  }
  for (size_t v = 0; v < schema.size(); ++v) {
    if (!seen[v]) {
      throw Error(ErrorCode::kSchemaMismatch, "csv lacks column '" + schema[v].name + "'",
                  {{"column", schema[v].name}});
    }
  }
  if (records.size() == 1) throw Error(ErrorCode::kEmptyDataset, "csv has no data rows");

  std::vector<Row> rows;
  rows.reserve(records.size() - 1);
  for (size_t r = 1; r < records.size(); ++r) {
    const csv::Record& rec = records[r];
    // Data row numbers are 1-based and exclude the header.
    const nlohmann::json where = {{"row", r}};
    if (rec.size() != header.size()) {
      throw Error(ErrorCode::kValueError,
                  "row " + std::to_string(r) + " has " + std::to_string(rec.size()) + " cells, expected " +
                      std::to_string(header.size()),
                  where);
    }
    Row row(schema.size());
    for (size_t c = 0; c < rec.size(); ++c) {
      if (!column_to_var[c]) continue;
      const size_t v = *column_to_var[c];
      try {
        row[v] = schema.parse_cell(v, rec[c]);
      } catch (const Error& e) {
        throw Error(ErrorCode::kValueError,
                    "row " + std::to_string(r) + ", column '" + schema[v].name + "': " + e.what(),
                    {{"row", r}, {"column", schema[v].name}, {"value", rec[c]}});
      }
    }
    rows.push_back(std::move(row));
  }
  return Dataset(std::move(id), schema, std::move(rows));
}

std::string write_csv(const Dataset& dataset) {
  const Schema& schema = dataset.schema();
  std::string out;
  csv::Record rec;
  for (const auto& v : schema.variables()) rec.push_back(v.name);
  csv::write_record(out, rec);
  for (const Row& row : dataset.rows()) {
    rec.clear();
    for (size_t j = 0; j < schema.size(); ++j) rec.push_back(schema.format_cell(j, row[j]));
    csv::write_record(out, rec);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Binning

size_t Binning::bin_of(double value) const {
  if (edges.size() <= 2) return 0;
  auto it = std::upper_bound(edges.begin() + 1, edges.end() - 1, value);
  return static_cast<size_t>(it - (edges.begin() + 1));
}

std::string Binning::label(size_t index) const {
  if (index >= bin_count()) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "bin index " + std::to_string(index) + " out of range (" + std::to_string(bin_count()) + " bins)");
  }
  const bool last = index + 1 == bin_count();
  return "[" + format_number(edges[index]) + ", " + format_number(edges[index + 1]) + (last ? "]" : ")");
}

namespace {

// Linear interpolation between order statistics (R type 7) at q = i / n.
double quantile_sorted(std::span<const double> sorted, int i, int n) {
  const double pos = static_cast<double>(sorted.size() - 1) * i / n;
  const size_t lo = static_cast<size_t>(std::floor(pos));
  const size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

Binning dedupe(std::vector<double> edges) {
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  if (edges.size() == 1) edges.push_back(edges.front());
  return Binning{std::move(edges)};
}

Binning equal_width_binning(int bins, double lo, double hi) {
  if (lo == hi) return Binning{{lo, hi}};
  std::vector<double> edges(static_cast<size_t>(bins) + 1);
  const double width = (hi - lo) / bins;
  for (int i = 0; i < bins; ++i) edges[static_cast<size_t>(i)] = lo + width * i;
  edges.back() = hi;
  return dedupe(std::move(edges));
}

}  // namespace

Binning compute_binning(const BinSpec& spec, std::span<const double> values) {
  spec.validate();
  switch (spec.strategy) {
    case BinStrategy::kExplicitEdges: return Binning{spec.edges};
    case BinStrategy::kEqualWidth: {
      if (values.empty()) throw Error(ErrorCode::kEmptyInput, "cannot bin an empty column");
      auto [mn, mx] = std::minmax_element(values.begin(), values.end());
      return equal_width_binning(spec.bin_count, *mn, *mx);
    }
    case BinStrategy::kQuantile: {
      if (values.empty()) throw Error(ErrorCode::kEmptyInput, "cannot bin an empty column");
      std::vector<double> sorted(values.begin(), values.end());
      std::sort(sorted.begin(), sorted.end());
      std::vector<double> edges(static_cast<size_t>(spec.bin_count) + 1);
      for (int i = 0; i <= spec.bin_count; ++i) {
        edges[static_cast<size_t>(i)] = quantile_sorted(sorted, i, spec.bin_count);
      }
      edges.front() = sorted.front();
      edges.back() = sorted.back();
      return dedupe(std::move(edges));
    }
  }
  return Binning{};
}

std::string bin_label(const BinSpec& spec, double observed_min, double observed_max, size_t index) {
  spec.validate();
  switch (spec.strategy) {
    case BinStrategy::kExplicitEdges: return Binning{spec.edges}.label(index);
    case BinStrategy::kEqualWidth:
      return equal_width_binning(spec.bin_count, observed_min, observed_max).label(index);
    case BinStrategy::kQuantile: break;
  }
  throw Error(ErrorCode::kInvalidRequest, "quantile bin labels depend on the observed values");
}

std::string bin_label(const BinSpec& spec, std::span<const double> values, size_t index) {
  return compute_binning(spec, values).label(index);
}

// ---------------------------------------------------------------------------
// Subgroups

SubgroupPartition partition(const Dataset& dataset, std::string_view variable) {
  const Schema& schema = dataset.schema();
  const size_t v = schema.index_of(variable);
  const VariableSchema& var = schema[v];
  SubgroupPartition out;
  out.row_group.resize(dataset.size());

  if (var.kind == VariableKind::kCategorical) {
    for (const auto& c : var.categories) out.keys.push_back({var.name, c});
    for (size_t i = 0; i < dataset.size(); ++i) out.row_group[i] = static_cast<size_t>(dataset.row(i)[v]);
  } else {
    if (!var.binning) {
      throw Error(ErrorCode::kMissingBinSpec, "numeric variable '" + var.name + "' has no binning",
                  {{"variable", var.name}});
    }
    std::vector<double> column(dataset.size());
    for (size_t i = 0; i < dataset.size(); ++i) column[i] = dataset.row(i)[v];
    const Binning binning = compute_binning(*var.binning, column);
    for (size_t b = 0; b < binning.bin_count(); ++b) out.keys.push_back({var.name, binning.label(b)});
    for (size_t i = 0; i < dataset.size(); ++i) out.row_group[i] = binning.bin_of(column[i]);
  }
  out.counts.assign(out.keys.size(), 0);
  for (size_t g : out.row_group) ++out.counts[g];
  return out;
}

std::vector<std::pair<SubgroupKey, size_t>> subgroups(const Dataset& dataset, std::string_view variable) {
  SubgroupPartition p = partition(dataset, variable);
  std::vector<std::pair<SubgroupKey, size_t>> out;
  out.reserve(p.keys.size());
  for (size_t i = 0; i < p.keys.size(); ++i) out.emplace_back(std::move(p.keys[i]), p.counts[i]);
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

VariableKind parse_kind(const std::string& s) {
  if (s == "numeric-continuous") return VariableKind::kContinuous;
  if (s == "numeric-integer") return VariableKind::kInteger;
  if (s == "categorical") return VariableKind::kCategorical;
  throw Error(ErrorCode::kInvalidSchema, "unknown variable kind '" + s + "'");
}

VariableRole parse_role(const std::string& s) {
  if (s == "predictor") return VariableRole::kPredictor;
  if (s == "target") return VariableRole::kTarget;
  throw Error(ErrorCode::kInvalidSchema, "unknown variable role '" + s + "'");
}

BinSpec parse_binning(const nlohmann::json& j) {
  BinSpec spec;
  const std::string strategy = j.at("strategy").get<std::string>();
  if (strategy == "equal-width") {
    spec.strategy = BinStrategy::kEqualWidth;
    spec.bin_count = j.value("bin_count", 5);
  } else if (strategy == "quantile") {
    spec.strategy = BinStrategy::kQuantile;
    spec.bin_count = j.value("bin_count", 5);
  } else if (strategy == "explicit-edges") {
    spec = BinSpec::explicit_edges(j.at("edges").get<std::vector<double>>());
  } else {
    throw Error(ErrorCode::kInvalidSchema, "unknown binning strategy '" + strategy + "'");
  }
  return spec;
}

}  // namespace

Schema schema_from_json(const nlohmann::json& doc) {
  const nlohmann::json& list = doc.is_array() ? doc : doc.contains("variables") ? doc.at("variables") : doc;
  if (!list.is_array()) throw Error(ErrorCode::kInvalidSchema, "schema document must list variables");
  std::vector<VariableSchema> vars;
  try {
    for (const auto& j : list) {
      VariableSchema v;
      v.name = j.at("name").get<std::string>();
      v.kind = parse_kind(j.at("kind").get<std::string>());
      v.role = parse_role(j.value("role", std::string("predictor")));
      if (j.contains("categories")) v.categories = j.at("categories").get<std::vector<std::string>>();
      if (j.contains("binning") && !j.at("binning").is_null()) {
        v.binning = parse_binning(j.at("binning"));
      } else if (v.is_numeric()) {
        v.binning = BinSpec::equal_width(5);
      }
      vars.push_back(std::move(v));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidSchema, std::string("malformed schema: ") + e.what());
  }
  return Schema(std::move(vars));
}

nlohmann::json schema_to_json(const Schema& schema) {
  nlohmann::json list = nlohmann::json::array();
  for (const auto& v : schema.variables()) {
    nlohmann::json j = {{"name", v.name},
                        {"kind", std::string(to_string(v.kind))},
                        {"role", std::string(to_string(v.role))}};
    if (v.kind == VariableKind::kCategorical) j["categories"] = v.categories;
    if (v.binning) {
      nlohmann::json b = {{"strategy", std::string(to_string(v.binning->strategy))}};
      if (v.binning->strategy == BinStrategy::kExplicitEdges) {
        b["edges"] = v.binning->edges;
      } else {
        b["bin_count"] = v.binning->bin_count;
      }
      j["binning"] = b;
    }
    list.push_back(std::move(j));
  }
  return {{"variables", list}};
}

std::string content_digest(std::string_view bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace debias
