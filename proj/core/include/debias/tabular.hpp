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

#include <compare>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace debias {

enum class VariableKind { kContinuous, kInteger, kCategorical };
enum class VariableRole { kPredictor, kTarget };
enum class BinStrategy { kEqualWidth, kQuantile, kExplicitEdges };

std::string_view to_string(VariableKind kind);
std::string_view to_string(VariableRole role);
std::string_view to_string(BinStrategy strategy);

struct BinSpec {
  BinStrategy strategy = BinStrategy::kEqualWidth;
  int bin_count = 5;          // equal-width and quantile
  std::vector<double> edges;  // explicit-edges only

  static BinSpec equal_width(int bins) { return {BinStrategy::kEqualWidth, bins, {}}; }
  static BinSpec quantile(int bins) { return {BinStrategy::kQuantile, bins, {}}; }
  static BinSpec explicit_edges(std::vector<double> e) {
    return {BinStrategy::kExplicitEdges, static_cast<int>(e.size()) - 1, std::move(e)};
  }

  // Throws Error{kInvalidSchema}.
  void validate() const;

  bool operator==(const BinSpec&) const = default;
};

struct VariableSchema {
  std::string name;
  VariableKind kind = VariableKind::kContinuous;
  VariableRole role = VariableRole::kPredictor;
  std::vector<std::string> categories;
  std::optional<BinSpec> binning;

  bool is_numeric() const { return kind != VariableKind::kCategorical; }
  bool is_target() const { return role == VariableRole::kTarget; }

  bool operator==(const VariableSchema&) const = default;
};

// An ordered, validated list of variables with exactly one categorical
// target.
class Schema {
 public:
  Schema() = default;
  // Throws Error{kInvalidSchema} when any VariableSchema invariant fails.
  explicit Schema(std::vector<VariableSchema> variables);

  const std::vector<VariableSchema>& variables() const { return variables_; }
  const VariableSchema& operator[](size_t i) const { return variables_[i]; }
  size_t size() const { return variables_.size(); }
  size_t target_index() const { return target_; }
  const VariableSchema& target() const { return variables_[target_]; }

  std::optional<size_t> find(std::string_view name) const;
  // Throws Error{kUnknownVariable}.
  size_t index_of(std::string_view name) const;
  std::optional<size_t> category_index(size_t variable, std::string_view label) const;

  // Cell text -> stored value. Categorical cells store the category index.
  // Throws Error{kValueError} without row context.
  double parse_cell(size_t variable, std::string_view text) const;
  std::string format_cell(size_t variable, double value) const;

  bool operator==(const Schema& other) const { return variables_ == other.variables_; }

 private:
  std::vector<VariableSchema> variables_;
  size_t target_ = 0;
};

// Numeric cells hold the value, categorical cells hold the category index.
using Row = std::vector<double>;

enum class Origin { kOriginal, kGenerated };
std::string_view to_string(Origin origin);

struct Provenance {
  std::string batch_id;
  std::string sample_id;
  size_t base_row = 0;
  size_t neighbor_row = 0;
  double u = 0.0;

  bool operator==(const Provenance&) const = default;
};

// Immutable table. Row ids are positions in rows().
class Dataset {
 public:
  // Throws Error{kEmptyDataset} for zero rows, Error{kValueError} when a row
  // violates the schema.
  Dataset(std::string id, Schema schema, std::vector<Row> rows);

  const std::string& id() const { return id_; }
  const Schema& schema() const { return schema_; }
  const std::vector<Row>& rows() const { return rows_; }
  const Row& row(size_t i) const { return rows_[i]; }
  size_t size() const { return rows_.size(); }
  Origin origin(size_t i) const { return origin_[i]; }
  const std::optional<Provenance>& provenance(size_t i) const { return provenance_[i]; }
  size_t original_count() const;

  // New dataset with generated rows appended.
  Dataset with_generated(std::span<const Row> rows, std::span<const Provenance> provenance) const;

  double target_value(size_t i) const { return rows_[i][schema_.target_index()]; }

 private:
  std::string id_;
  Schema schema_;
  std::vector<Row> rows_;
  std::vector<Origin> origin_;
  std::vector<std::optional<Provenance>> provenance_;
};

// Throws Error{kValueError} naming the offending variable.
void validate_row(const Schema& schema, const Row& row);

// Columns that export() may add; load_dataset skips them unless the schema
// declares a variable of the same name.
std::span<const std::string_view> provenance_columns();

// Parses an RFC-4180 CSV whose header names the schema variables in any order.
// Errors: kSchemaMismatch, kValueError (with row/column in details),
// kEmptyDataset.
Dataset load_dataset(std::string_view csv_bytes, const Schema& schema, std::string id = "dataset");

// Plain CSV in schema column order, one record per row.
std::string write_csv(const Dataset& dataset);

struct SubgroupKey {
  std::string variable;
  std::string label;

  auto operator<=>(const SubgroupKey&) const = default;
};

// Realized bins for one numeric column. edges.size() == bin_count() + 1.
struct Binning {
  std::vector<double> edges;

  size_t bin_count() const { return edges.size() - 1; }
  // Left-closed; values past either end clamp to the outer bins.
  size_t bin_of(double value) const;
  // "[lo, hi)" for every bin but the last, which is "[lo, hi]".
  std::string label(size_t index) const;
};

// Degenerate ranges (max == min, or coinciding quantiles) collapse into fewer
// bins so that labels stay unique.
Binning compute_binning(const BinSpec& spec, std::span<const double> values);

// Label for equal-width or explicit-edges specs from the observed range.
// Throws Error{kIndexOutOfRange}; quantile specs need the values overload.
std::string bin_label(const BinSpec& spec, double observed_min, double observed_max, size_t index);
std::string bin_label(const BinSpec& spec, std::span<const double> values, size_t index);

// Which subgroup every row belongs to, plus the subgroup keys in canonical
// order (declaration order for categories, edge order for bins).
struct SubgroupPartition {
  std::vector<SubgroupKey> keys;
  std::vector<size_t> row_group;
  std::vector<size_t> counts;
};

// Errors: kUnknownVariable, kMissingBinSpec.
SubgroupPartition partition(const Dataset& dataset, std::string_view variable);
std::vector<std::pair<SubgroupKey, size_t>> subgroups(const Dataset& dataset, std::string_view variable);

// JSON schema document: {"variables": [{name, kind, role, categories, binning}]}.
// A bare array is accepted too. Numeric variables without "binning" get
// equal-width with 5 bins.
Schema schema_from_json(const nlohmann::json& doc);
nlohmann::json schema_to_json(const Schema& schema);

// 64-bit FNV-1a of the bytes, as 16 hex digits.
std::string content_digest(std::string_view bytes);

}  // namespace debias
