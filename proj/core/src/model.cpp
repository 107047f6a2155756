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

#include "debias/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "debias/error.hpp"
#include "debias/rng.hpp"

namespace debias {

void ModelConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw Error(ErrorCode::kInvalidRequest, "learning_rate must be positive");
  }
  if (iterations < 1) throw Error(ErrorCode::kInvalidRequest, "iterations must be positive");
  if (!(l2_penalty >= 0.0) || !std::isfinite(l2_penalty)) {
    throw Error(ErrorCode::kInvalidRequest, "l2_penalty must be >= 0");
  }
}

namespace detail {

std::vector<FeatureEncoding> fit_encoding(const Dataset& dataset, const std::vector<size_t>& rows,
                                          size_t* feature_count) {
  const Schema& schema = dataset.schema();
  std::vector<FeatureEncoding> out;
  size_t offset = 0;
  for (size_t j = 0; j < schema.size(); ++j) {
    const VariableSchema& v = schema[j];
    if (v.is_target()) continue;
    FeatureEncoding enc;
    enc.variable = v.name;
    enc.schema_index = j;
    enc.kind = v.kind;
    enc.offset = offset;
    if (v.kind == VariableKind::kCategorical) {
      enc.categories = v.categories;
      enc.width = v.categories.size();
    } else {
      double sum = 0.0;
      for (size_t r : rows) sum += dataset.row(r)[j];
      enc.mean = sum / static_cast<double>(rows.size());
      double sq = 0.0;
      for (size_t r : rows) {
        const double d = dataset.row(r)[j] - enc.mean;
        sq += d * d;
      }
      enc.stddev = std::sqrt(sq / static_cast<double>(rows.size()));
      enc.dropped = !(enc.stddev > 0.0);
      enc.width = enc.dropped ? 0 : 1;
    }
    offset += enc.width;
    out.push_back(std::move(enc));
  }
  *feature_count = offset;
  return out;
}

void encode_row(const std::vector<FeatureEncoding>& encoding, const Row& row, std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  for (const FeatureEncoding& enc : encoding) {
    if (enc.width == 0) continue;
    const double x = row[enc.schema_index];
    if (enc.kind == VariableKind::kCategorical) {
      out[enc.offset + static_cast<size_t>(x)] = 1.0;
    } else {
      out[enc.offset] = (x - enc.mean) / enc.stddev;
    }
  }
}

Design build_design(const Dataset& dataset, const std::vector<size_t>& rows,
                    const std::vector<FeatureEncoding>& encoding, size_t feature_count) {
  Design d;
  d.features = feature_count;
  d.classes = dataset.schema().target().categories.size();
  d.x.resize(rows.size() * feature_count);
  d.y.reserve(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    const Row& row = dataset.row(rows[i]);
    encode_row(encoding, row, std::span<double>(d.x.data() + i * feature_count, feature_count));
    d.y.push_back(static_cast<size_t>(dataset.target_value(rows[i])));
  }
  return d;
}

namespace {

// logits -> probabilities in place; returns log-sum-exp.
double softmax_inplace(std::span<double> z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (double& v : z) v /= sum;
  return mx + std::log(sum);
}

void logits(const Matrix& w, std::span<const double> x, std::span<double> z) {
  const size_t f = x.size();
  for (size_t c = 0; c < w.rows; ++c) {
    const double* wr = w.data.data() + c * w.cols;
    double s = wr[f];
    for (size_t k = 0; k < f; ++k) s += wr[k] * x[k];
    z[c] = s;
  }
}

double penalty(const Matrix& w, double l2) {
  double sq = 0.0;
  for (double v : w.data) sq += v * v;
  return 0.5 * l2 * sq;
}

// Shared pass: returns the objective and fills `grad` when non-null.
double evaluate(const Matrix& w, const Design& d, double l2, Matrix* grad) {
  const size_t n = d.rows();
  const size_t f = d.features;
  std::vector<double> z(w.rows);
  double loss = 0.0;
  if (grad) *grad = Matrix(w.rows, w.cols);
  for (size_t i = 0; i < n; ++i) {
    std::span<const double> x(d.x.data() + i * f, f);
    logits(w, x, z);
    const double zy = z[d.y[i]];
    const double lse = softmax_inplace(z);
    loss += lse - zy;
    if (grad) {
      for (size_t c = 0; c < w.rows; ++c) {
        const double r = z[c] - (c == d.y[i] ? 1.0 : 0.0);
        double* gr = grad->data.data() + c * w.cols;
        for (size_t k = 0; k < f; ++k) gr[k] += r * x[k];
        gr[f] += r;
      }
    }
  }
  const double inv_n = n > 0 ? 1.0 / static_cast<double>(n) : 0.0;
  if (grad) {
    for (size_t k = 0; k < w.data.size(); ++k) grad->data[k] = grad->data[k] * inv_n + l2 * w.data[k];
  }
  return loss * inv_n + penalty(w, l2);
}

}  // namespace

double objective(const Matrix& weights, const Design& design, double l2) {
  return evaluate(weights, design, l2, nullptr);
}

Matrix gradient(const Matrix& weights, const Design& design, double l2) {
  Matrix g;
  evaluate(weights, design, l2, &g);
  return g;
}

}  // namespace detail

namespace {

Model fit(const Dataset& dataset, const std::vector<size_t>& rows, const ModelConfig& config) {
  config.validate();
  if (rows.size() < 2) throw Error(ErrorCode::kTooFewRows, "training needs at least 2 rows");
  const Schema& schema = dataset.schema();
  const size_t classes = schema.target().categories.size();
  std::vector<size_t> class_counts(classes, 0);
  for (size_t r : rows) ++class_counts[static_cast<size_t>(dataset.target_value(r))];
  if (std::count_if(class_counts.begin(), class_counts.end(), [](size_t n) { return n > 0; }) < 2) {
    throw Error(ErrorCode::kDegenerateTarget, "training data contains a single target class");
  }

  Model model;
  model.schema = schema;
  model.class_labels = schema.target().categories;
  model.config = config;
  model.encoding = detail::fit_encoding(dataset, rows, &model.feature_count);
  const detail::Design design = detail::build_design(dataset, rows, model.encoding, model.feature_count);

  model.weights = Matrix(classes, model.feature_count + 1);
  model.training_loss_trace.reserve(static_cast<size_t>(config.iterations) + 1);
  Matrix grad;
  for (int it = 0; it < config.iterations; ++it) {
    const double loss = detail::evaluate(model.weights, design, config.l2_penalty, &grad);
    model.training_loss_trace.push_back(loss);
    for (size_t k = 0; k < grad.data.size(); ++k) model.weights.data[k] -= config.learning_rate * grad.data[k];
  }
  model.training_loss_trace.push_back(detail::objective(model.weights, design, config.l2_penalty));
  return model;
}

}  // namespace

Model train(const Dataset& dataset, const ModelConfig& config) {
  std::vector<size_t> rows(dataset.size());
  std::iota(rows.begin(), rows.end(), size_t{0});
  return fit(dataset, rows, config);
}

Prediction predict(const Model& model, const Row& row) {
  if (row.size() != model.schema.size()) {
    throw Error(ErrorCode::kSchemaMismatch, "instance does not match the model schema");
  }
  for (const FeatureEncoding& enc : model.encoding) {
    if (enc.kind != VariableKind::kCategorical) continue;
    const double x = row[enc.schema_index];
    if (x < 0 || x != std::trunc(x) || x >= static_cast<double>(enc.categories.size())) {
      throw Error(ErrorCode::kUnknownCategory, "unknown category for '" + enc.variable + "'",
                  {{"variable", enc.variable}});
    }
  }
  std::vector<double> x(model.feature_count);
  detail::encode_row(model.encoding, row, x);
  Prediction p;
  p.probabilities.resize(model.weights.rows);
  detail::logits(model.weights, x, p.probabilities);
  detail::softmax_inplace(p.probabilities);
  p.label = static_cast<size_t>(std::max_element(p.probabilities.begin(), p.probabilities.end()) -
                                p.probabilities.begin());
  p.label_name = model.class_labels[p.label];
  p.confidence = p.probabilities[p.label];
  return p;
}

void check_compatible(const Model& model, const Schema& schema) {
  const auto& a = model.schema.variables();
  const auto& b = schema.variables();
  bool ok = a.size() == b.size();
  for (size_t i = 0; ok && i < a.size(); ++i) {
    ok = a[i].name == b[i].name && a[i].kind == b[i].kind && a[i].role == b[i].role &&
         a[i].categories == b[i].categories;
  }
  if (!ok) throw Error(ErrorCode::kSchemaMismatch, "model was trained on a different schema");
}

Row parse_instance(const Schema& schema, const std::map<std::string, std::string>& values) {
  Row row(schema.size(), 0.0);
  for (const auto& [name, text] : values) {
    if (!schema.find(name)) {
      throw Error(ErrorCode::kSchemaMismatch, "instance names unknown variable '" + name + "'",
                  {{"variable", name}});
    }
  }
  for (size_t j = 0; j < schema.size(); ++j) {
    const VariableSchema& v = schema[j];
    auto it = values.find(v.name);
    if (it == values.end()) {
      if (v.is_target()) continue;
      throw Error(ErrorCode::kSchemaMismatch, "instance lacks variable '" + v.name + "'", {{"variable", v.name}});
    }
    if (v.kind == VariableKind::kCategorical && !schema.category_index(j, it->second)) {
      throw Error(ErrorCode::kUnknownCategory, "'" + it->second + "' is not a category of '" + v.name + "'",
                  {{"variable", v.name}, {"value", it->second}});
    }
    row[j] = schema.parse_cell(j, it->second);
  }
  return row;
}

std::vector<size_t> stratified_folds(const Dataset& dataset, size_t folds, uint64_t seed) {
  if (folds < 2) throw Error(ErrorCode::kInvalidRequest, "folds must be >= 2");
  const size_t classes = dataset.schema().target().categories.size();
  std::vector<std::vector<size_t>> by_class(classes);
  for (size_t i = 0; i < dataset.size(); ++i) by_class[static_cast<size_t>(dataset.target_value(i))].push_back(i);
  size_t present = 0;
  for (size_t c = 0; c < classes; ++c) {
    if (by_class[c].empty()) continue;
    ++present;
    if (by_class[c].size() < folds) {
      throw Error(ErrorCode::kTooFewRowsPerClass,
                  "class '" + dataset.schema().target().categories[c] + "' has fewer rows than folds",
                  {{"class", dataset.schema().target().categories[c]}, {"rows", by_class[c].size()},
                   {"folds", folds}});
    }
  }
  if (present < 2) throw Error(ErrorCode::kDegenerateTarget, "dataset contains a single target class");

  Rng rng(seed);
  std::vector<size_t> fold_of(dataset.size(), 0);
  for (auto& members : by_class) {
    rng.shuffle(std::span<size_t>(members));
    for (size_t p = 0; p < members.size(); ++p) fold_of[members[p]] = p % folds;
  }
  return fold_of;
}

CrossValidation cross_validate(const Dataset& dataset, const ModelConfig& config, size_t folds) {
  CrossValidation cv;
  cv.folds = folds;
  cv.fold_of_row = stratified_folds(dataset, folds, config.seed);
  cv.correct.assign(dataset.size(), false);
  for (size_t f = 0; f < folds; ++f) {
    std::vector<size_t> train_rows;
    std::vector<size_t> held_out;
    for (size_t i = 0; i < dataset.size(); ++i) (cv.fold_of_row[i] == f ? held_out : train_rows).push_back(i);
    const Model m = fit(dataset, train_rows, config);
    for (size_t i : held_out) {
      cv.correct[i] = predict(m, dataset.row(i)).label == static_cast<size_t>(dataset.target_value(i));
    }
  }
  return cv;
}

SubgroupAccuracy subgroup_accuracy(const Dataset& dataset, const CrossValidation& cv, std::string_view variable) {
  const SubgroupPartition p = partition(dataset, variable);
  std::vector<size_t> hits(p.keys.size(), 0);
  std::vector<size_t> totals(p.keys.size(), 0);
  for (size_t i = 0; i < dataset.size(); ++i) {
    ++totals[p.row_group[i]];
    if (cv.correct[i]) ++hits[p.row_group[i]];
  }
  SubgroupAccuracy out;
  for (size_t g = 0; g < p.keys.size(); ++g) {
    if (totals[g] == 0) continue;
    out[p.keys[g]] = static_cast<double>(hits[g]) / static_cast<double>(totals[g]);
  }
  return out;
}

SubgroupAccuracy evaluate_by_subgroup(const Dataset& dataset, std::string_view variable, const ModelConfig& config,
                                      size_t folds) {
  dataset.schema().index_of(variable);
  return subgroup_accuracy(dataset, cross_validate(dataset, config, folds), variable);
}

// ---------------------------------------------------------------------------
// JSON

nlohmann::json to_json(const ModelConfig& c) {
  return {{"learning_rate", c.learning_rate}, {"iterations", c.iterations}, {"l2_penalty", c.l2_penalty},
          {"seed", c.seed}};
}

ModelConfig model_config_from_json(const nlohmann::json& doc) {
  ModelConfig c;
  if (doc.is_null()) return c;
  try {
    c.learning_rate = doc.value("learning_rate", c.learning_rate);
    c.iterations = doc.value("iterations", c.iterations);
    c.l2_penalty = doc.value("l2_penalty", c.l2_penalty);
    c.seed = doc.value("seed", c.seed);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidRequest, std::string("malformed model config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const Prediction& p) {
  return {{"label", p.label_name}, {"probabilities", p.probabilities}, {"confidence", p.confidence}};
}

nlohmann::json to_json(const Model& m) {
  nlohmann::json enc = nlohmann::json::array();
  for (const auto& e : m.encoding) {
    nlohmann::json j = {{"variable", e.variable}, {"kind", std::string(to_string(e.kind))}};
    if (e.kind == VariableKind::kCategorical) {
      j["encoding"] = "one-hot";
      j["categories"] = e.categories;
    } else {
      j["encoding"] = "standardize";
      j["mean"] = e.mean;
      j["stddev"] = e.stddev;
      j["dropped"] = e.dropped;
    }
    enc.push_back(std::move(j));
  }
  nlohmann::json weights = nlohmann::json::array();
  for (size_t r = 0; r < m.weights.rows; ++r) {
    weights.push_back(std::vector<double>(m.weights.data.begin() + static_cast<std::ptrdiff_t>(r * m.weights.cols),
                                          m.weights.data.begin() + static_cast<std::ptrdiff_t>((r + 1) * m.weights.cols)));
  }
  return {{"schema", schema_to_json(m.schema)},
          {"class_labels", m.class_labels},
          {"feature_encoding", enc},
          {"feature_count", m.feature_count},
          {"weights", weights},
          {"training_loss_trace", m.training_loss_trace},
          {"config", to_json(m.config)}};
}

Model model_from_json(const nlohmann::json& doc) {
  Model m;
  try {
    m.schema = schema_from_json(doc.at("schema"));
    m.class_labels = doc.at("class_labels").get<std::vector<std::string>>();
    m.config = model_config_from_json(doc.at("config"));
    m.feature_count = doc.at("feature_count").get<size_t>();
    size_t offset = 0;
    for (const auto& j : doc.at("feature_encoding")) {
      FeatureEncoding e;
      e.variable = j.at("variable").get<std::string>();
      e.schema_index = m.schema.index_of(e.variable);
      e.kind = m.schema[e.schema_index].kind;
      e.offset = offset;
      if (e.kind == VariableKind::kCategorical) {
        e.categories = j.at("categories").get<std::vector<std::string>>();
        e.width = e.categories.size();
      } else {
        e.mean = j.at("mean").get<double>();
        e.stddev = j.at("stddev").get<double>();
        e.dropped = j.at("dropped").get<bool>();
        e.width = e.dropped ? 0 : 1;
      }
      offset += e.width;
      m.encoding.push_back(std::move(e));
    }
    const auto& w = doc.at("weights");
    m.weights = Matrix(w.size(), m.feature_count + 1);
    for (size_t r = 0; r < w.size(); ++r) {
      const auto row = w[r].get<std::vector<double>>();
      if (row.size() != m.weights.cols) throw Error(ErrorCode::kInvalidRequest, "weight row has wrong width");
      std::copy(row.begin(), row.end(), m.weights.data.begin() + static_cast<std::ptrdiff_t>(r * m.weights.cols));
    }
    m.training_loss_trace = doc.value("training_loss_trace", std::vector<double>{});
    if (offset != m.feature_count || m.weights.rows != m.class_labels.size()) {
      throw Error(ErrorCode::kInvalidRequest, "model document is inconsistent");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidRequest, std::string("malformed model document: ") + e.what());
  }
  return m;
}

}  // namespace debias
