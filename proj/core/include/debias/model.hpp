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
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "debias/bias.hpp"
#include "debias/tabular.hpp"

namespace debias {

struct ModelConfig {
  double learning_rate = 0.1;
  int iterations = 500;
  double l2_penalty = 1e-3;
  uint64_t seed = 0;

  // Throws Error{kInvalidRequest}.
  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

// Row-major dense matrix.
struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(size_t r, size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}
  double& operator()(size_t r, size_t c) { return data[r * cols + c]; }
  double operator()(size_t r, size_t c) const { return data[r * cols + c]; }
  bool operator==(const Matrix&) const = default;
};

// How one predictor maps into the feature vector. Categorical variables are
// one-hot over all declared categories; numeric ones are standardized with
// the training mean and population stddev, or dropped when the stddev is 0.
struct FeatureEncoding {
  std::string variable;
  size_t schema_index = 0;
  VariableKind kind = VariableKind::kContinuous;
  std::vector<std::string> categories;
  double mean = 0.0;
  double stddev = 1.0;
  bool dropped = false;
  size_t offset = 0;
  size_t width = 0;
};

// Multinomial logistic regression. weights has one row per class and
// feature_count + 1 columns; the last column is the bias.
struct Model {
  Schema schema;
  std::vector<std::string> class_labels;
  std::vector<FeatureEncoding> encoding;
  size_t feature_count = 0;
  Matrix weights;
  std::vector<double> training_loss_trace;
  ModelConfig config;
};

struct Prediction {
  size_t label = 0;
  std::string label_name;
  std::vector<double> probabilities;
  double confidence = 0.0;

  bool operator==(const Prediction&) const = default;
};

// Full-batch gradient descent on mean cross-entropy + (l2/2)*||W||^2 from
// all-zero weights. Errors: kTooFewRows, kDegenerateTarget.
Model train(const Dataset& dataset, const ModelConfig& config);

// `row` is aligned with model.schema (the target cell is ignored).
Prediction predict(const Model& model, const Row& row);

// Throws Error{kSchemaMismatch} unless names, kinds, roles and categories agree.
void check_compatible(const Model& model, const Schema& schema);

// Named text values -> Row for model.schema. The target may be omitted.
// Errors: kSchemaMismatch (missing or extra variable), kUnknownCategory,
// kValueError.
Row parse_instance(const Schema& schema, const std::map<std::string, std::string>& values);

// Seeded stratified k-fold: rows of each present class are shuffled and dealt
// round-robin into folds. correct[i] tells whether held-out row i was
// predicted correctly. Errors: kTooFewRowsPerClass, kDegenerateTarget,
// kInvalidRequest (folds < 2).
struct CrossValidation {
  size_t folds = 0;
  std::vector<size_t> fold_of_row;
  std::vector<bool> correct;
};
CrossValidation cross_validate(const Dataset& dataset, const ModelConfig& config, size_t folds = 5);
std::vector<size_t> stratified_folds(const Dataset& dataset, size_t folds, uint64_t seed);

// Accuracy per subgroup of `variable` among held-out rows; subgroups without
// held-out rows are absent.
SubgroupAccuracy subgroup_accuracy(const Dataset& dataset, const CrossValidation& cv, std::string_view variable);
SubgroupAccuracy evaluate_by_subgroup(const Dataset& dataset, std::string_view variable, const ModelConfig& config,
                                      size_t folds = 5);

nlohmann::json to_json(const Model& model);
Model model_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const Prediction& prediction);

namespace detail {

// Encoded training data, features row-major without the bias column.
struct Design {
  size_t features = 0;
  size_t classes = 0;
  std::vector<double> x;
  std::vector<size_t> y;

  size_t rows() const { return y.size(); }
};

std::vector<FeatureEncoding> fit_encoding(const Dataset& dataset, const std::vector<size_t>& rows,
                                          size_t* feature_count);
void encode_row(const std::vector<FeatureEncoding>& encoding, const Row& row, std::span<double> out);
Design build_design(const Dataset& dataset, const std::vector<size_t>& rows,
                    const std::vector<FeatureEncoding>& encoding, size_t feature_count);

// Regularized mean cross-entropy; with zero rows only the penalty remains.
double objective(const Matrix& weights, const Design& design, double l2);
// Analytic gradient of objective().
Matrix gradient(const Matrix& weights, const Design& design, double l2);

}  // namespace detail

}  // namespace debias
