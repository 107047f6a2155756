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

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "debias/error.hpp"
#include "debias/model.hpp"
#include "debias/rng.hpp"
#include "fixtures.hpp"

namespace debias {
namespace {

Schema xy_schema(size_t classes = 2) {
  std::vector<std::string> labels;
  for (size_t c = 0; c < classes; ++c) labels.push_back("c" + std::to_string(c));
  return Schema({VariableSchema{"x1", VariableKind::kContinuous, VariableRole::kPredictor, {}, BinSpec::equal_width(2)},
                 VariableSchema{"x2", VariableKind::kContinuous, VariableRole::kPredictor, {}, BinSpec::equal_width(2)},
                 VariableSchema{"y", VariableKind::kCategorical, VariableRole::kTarget, labels, {}}});
}

Dataset toy_separable() {
  return Dataset("toy", xy_schema(), {{0, 0, 0}, {0, 1, 0}, {3, 0, 1}, {3, 1, 1}});
}

TEST(Train, SeparableToyFitsPerfectly) {
  const Dataset ds = toy_separable();
  const Model m = train(ds, ModelConfig{});
  for (size_t i = 0; i < ds.size(); ++i) {
    const Prediction p = predict(m, ds.row(i));
    EXPECT_EQ(p.label, static_cast<size_t>(ds.target_value(i)));
    EXPECT_GT(p.confidence, 0.5);
  }
  EXPECT_EQ(m.training_loss_trace.size(), 501u);
}

TEST(Train, ConstantFeaturesGiveClassFrequencies) {
  std::vector<Row> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({1.0, 2.0, i < 7 ? 0.0 : 1.0});
  const Model m = train(Dataset("c", xy_schema(), rows), ModelConfig{});
  EXPECT_EQ(m.feature_count, 0u);
  const Prediction p = predict(m, rows[0]);
  EXPECT_NEAR(p.probabilities[0], 0.7, 1e-3);
  EXPECT_NEAR(p.probabilities[1], 0.3, 1e-3);
}

TEST(Train, Deterministic) {
  const Dataset ds = testing::diabetes_dataset(300, 3);
  ModelConfig cfg;
  cfg.iterations = 100;
  const Model a = train(ds, cfg);
  const Model b = train(ds, cfg);
  EXPECT_EQ(a.weights, b.weights);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(Train, LossNeverIncreases) {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const Schema s = testing::random_schema(rng);
    const Dataset ds = testing::random_dataset(s, 20 + rng() % 100, rng);
    ModelConfig cfg;
    cfg.iterations = 200;
    cfg.learning_rate = 0.1;
    Model m;
    try {
      m = train(ds, cfg);
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), ErrorCode::kDegenerateTarget);
      continue;
    }
    for (size_t i = 1; i < m.training_loss_trace.size(); ++i) {
      EXPECT_LE(m.training_loss_trace[i], m.training_loss_trace[i - 1] + 1e-9);
    }
  }
}

TEST(Train, RowOrderDoesNotMatter) {
  const Dataset ds = testing::diabetes_dataset(200, 8);
  std::vector<Row> shuffled = ds.rows();
  std::mt19937_64 rng(2);
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  ModelConfig cfg;
  cfg.iterations = 150;
  const Model a = train(ds, cfg);
  const Model b = train(Dataset("s", ds.schema(), shuffled), cfg);
  ASSERT_EQ(a.weights.data.size(), b.weights.data.size());
  for (size_t i = 0; i < a.weights.data.size(); ++i) EXPECT_NEAR(a.weights.data[i], b.weights.data[i], 1e-9);
}

TEST(Train, Errors) {
  auto code = [](const std::function<void()>& f) {
    try {
      f();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::kNotFound;
  };
  EXPECT_EQ(code([] { train(Dataset("d", xy_schema(), {{0, 0, 0}}), {}); }), ErrorCode::kTooFewRows);
  EXPECT_EQ(code([] { train(Dataset("d", xy_schema(), {{0, 0, 0}, {1, 1, 0}}), {}); }), ErrorCode::kDegenerateTarget);
  ModelConfig bad;
  bad.learning_rate = 0;
  EXPECT_EQ(code([&] { train(toy_separable(), bad); }), ErrorCode::kInvalidRequest);
  bad = {};
  bad.iterations = 0;
  EXPECT_EQ(code([&] { train(toy_separable(), bad); }), ErrorCode::kInvalidRequest);
  bad = {};
  bad.l2_penalty = -1;
  EXPECT_EQ(code([&] { train(toy_separable(), bad); }), ErrorCode::kInvalidRequest);
}

TEST(Predict, ZeroWeightsAreUniform) {
  Model m = train(Dataset("d", xy_schema(3), {{0, 0, 0}, {1, 1, 1}, {2, 2, 2}}), {});
  std::fill(m.weights.data.begin(), m.weights.data.end(), 0.0);
  const Prediction p = predict(m, {5, -5, 0});
  for (double q : p.probabilities) EXPECT_DOUBLE_EQ(q, 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(p.confidence, 1.0 / 3.0);
}

TEST(Predict, BinaryMatchesSigmoid) {
  const Dataset ds = testing::diabetes_dataset(150, 4);
  const Model m = train(ds, ModelConfig{});
  for (size_t i = 0; i < 30; ++i) {
    const Row& row = ds.row(i);
    // Recompute the encoded features and the logistic link by hand.
    double z = m.weights(1, m.feature_count) - m.weights(0, m.feature_count);
    for (const auto& enc : m.encoding) {
      if (enc.dropped) continue;
      if (enc.kind == VariableKind::kCategorical) {
        const size_t c = static_cast<size_t>(row[enc.schema_index]);
        z += m.weights(1, enc.offset + c) - m.weights(0, enc.offset + c);
      } else {
        const double x = (row[enc.schema_index] - enc.mean) / enc.stddev;
        z += (m.weights(1, enc.offset) - m.weights(0, enc.offset)) * x;
      }
    }
    EXPECT_NEAR(predict(m, row).probabilities[1], 1.0 / (1.0 + std::exp(-z)), 1e-9);
  }
}

TEST(Predict, SimplexAndErrors) {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 20; ++trial) {
    const Schema s = testing::random_schema(rng);
    const Dataset ds = testing::random_dataset(s, 30, rng);
    ModelConfig cfg;
    cfg.iterations = 50;
    cfg.learning_rate = 1.0;
    Model m;
    try {
      m = train(ds, cfg);
    } catch (const Error&) {
      continue;
    }
    for (const Row& r : ds.rows()) {
      const Prediction p = predict(m, r);
      double sum = 0;
      for (double q : p.probabilities) {
        EXPECT_GE(q, 0.0);
        sum += q;
      }
      EXPECT_NEAR(sum, 1.0, 1e-9);
    }
  }
  const Model m = train(toy_separable(), {});
  EXPECT_THROW(predict(m, {1.0}), Error);
}

TEST(Predict, ParseInstance) {
  const Schema s = testing::diabetes_schema();
  const Row r = parse_instance(s, {{"age", "55"}, {"cholesterol", "high"}, {"blood_pressure", "normal"},
                                   {"glucose", "150.5"}});
  EXPECT_EQ(r[0], 55);
  EXPECT_EQ(r[1], 1);
  EXPECT_EQ(r[2], 0);
  EXPECT_EQ(r[3], 150.5);
  try {
    parse_instance(s, {{"age", "55"}, {"cholesterol", "extreme"}, {"blood_pressure", "high"}, {"glucose", "1"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownCategory);
  }
  try {
    parse_instance(s, {{"age", "55"}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kSchemaMismatch);
  }
}

TEST(Model, JsonRoundTrip) {
  const Dataset ds = testing::diabetes_dataset(120, 6);
  ModelConfig cfg;
  cfg.iterations = 40;
  const Model m = train(ds, cfg);
  const Model back = model_from_json(to_json(m));
  EXPECT_EQ(back.weights, m.weights);
  EXPECT_EQ(back.class_labels, m.class_labels);
  for (size_t i = 0; i < 20; ++i) EXPECT_EQ(predict(back, ds.row(i)), predict(m, ds.row(i)));
  EXPECT_THROW(check_compatible(m, testing::education_schema()), Error);
  EXPECT_NO_THROW(check_compatible(m, ds.schema()));
}

// ---------------------------------------------------------------------------
// Gradient

detail::Design random_design(std::mt19937_64& rng, size_t rows, size_t features, size_t classes) {
  std::normal_distribution<double> n(0, 1);
  detail::Design d;
  d.features = features;
  d.classes = classes;
  for (size_t i = 0; i < rows * features; ++i) d.x.push_back(n(rng));
  for (size_t i = 0; i < rows; ++i) d.y.push_back(rng() % classes);
  return d;
}

TEST(Gradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(47);
  std::normal_distribution<double> n(0, 0.5);
  for (int trial = 0; trial < 25; ++trial) {
    const size_t classes = 2 + rng() % 3;
    const detail::Design d = random_design(rng, 3 + rng() % 20, 1 + rng() % 4, classes);
    const double l2 = (rng() % 2) ? 1e-3 : 0.1;
    Matrix w(classes, d.features + 1);
    for (double& v : w.data) v = n(rng);
    const Matrix g = detail::gradient(w, d, l2);
    const double h = 1e-5;
    for (size_t k = 0; k < w.data.size(); ++k) {
      Matrix up = w, down = w;
      up.data[k] += h;
      down.data[k] -= h;
      const double fd = (detail::objective(up, d, l2) - detail::objective(down, d, l2)) / (2 * h);
      const double denom = std::max({std::fabs(fd), std::fabs(g.data[k]), 1e-8});
      EXPECT_LT(std::fabs(fd - g.data[k]) / denom, 1e-5) << "trial " << trial << " k " << k;
    }
  }
}

TEST(Gradient, SymmetricDataHasZeroBiasGradient) {
  detail::Design d;
  d.features = 1;
  d.classes = 2;
  d.x = {-2, -1, 1, 2};
  d.y = {0, 1, 0, 1};
  const Matrix g = detail::gradient(Matrix(2, 2), d, 0.0);
  EXPECT_NEAR(g(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(g(1, 1), 0.0, 1e-12);
}

TEST(Gradient, RegularizerOnly) {
  detail::Design d;
  d.features = 2;
  d.classes = 3;
  Matrix w(3, 3);
  std::iota(w.data.begin(), w.data.end(), -4.0);
  const Matrix g = detail::gradient(w, d, 0.25);
  for (size_t k = 0; k < w.data.size(); ++k) EXPECT_EQ(g.data[k], 0.25 * w.data[k]);
}

// ---------------------------------------------------------------------------
// Cross-validation

TEST(CrossValidation, FoldsAreStratifiedAndSeeded) {
  const Dataset ds = testing::diabetes_dataset(203, 9);
  const auto a = stratified_folds(ds, 5, 1);
  EXPECT_EQ(a, stratified_folds(ds, 5, 1));
  EXPECT_NE(a, stratified_folds(ds, 5, 2));
  for (size_t cls = 0; cls < 2; ++cls) {
    std::vector<size_t> per(5, 0);
    size_t total = 0;
    for (size_t i = 0; i < ds.size(); ++i) {
      if (ds.target_value(i) == static_cast<double>(cls)) {
        ++per[a[i]];
        ++total;
      }
    }
    for (size_t f = 0; f < 5; ++f) {
      EXPECT_GE(per[f], total / 5);
      EXPECT_LE(per[f], total / 5 + 1);
    }
  }
}

TEST(CrossValidation, TooFewRowsPerClass) {
  try {
    cross_validate(toy_separable(), {}, 5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooFewRowsPerClass);
  }
}

TEST(EvaluateBySubgroup, PerfectModel) {
  const Dataset toy = toy_separable();
  std::vector<Row> rows;
  for (int rep = 0; rep < 10; ++rep) {
    for (const Row& r : toy.rows()) rows.push_back(r);
  }
  const auto acc = evaluate_by_subgroup(Dataset("p", xy_schema(), rows), "x1", {}, 5);
  ASSERT_EQ(acc.size(), 2u);
  for (const auto& [k, a] : acc) EXPECT_EQ(a, 1.0);
}

Schema noisy_schema() {
  return Schema({VariableSchema{"education", VariableKind::kCategorical, VariableRole::kPredictor,
                                {"high-school", "bachelor", "master"}, {}},
                 VariableSchema{"score", VariableKind::kContinuous, VariableRole::kPredictor, {}, BinSpec::equal_width(3)},
                 VariableSchema{"label", VariableKind::kCategorical, VariableRole::kTarget, {"no", "yes"}, {}}});
}

TEST(EvaluateBySubgroup, LabelNoiseLowersOneSubgroup) {
  std::mt19937_64 rng(53);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Row> rows;
  const int counts[] = {100, 300, 200};
  for (int g = 0; g < 3; ++g) {
    for (int i = 0; i < counts[g]; ++i) {
      const double score = u(rng);
      double label = score > 0 ? 1 : 0;
      if (g == 0 && rng() % 10 < 4) label = 1 - label;
      rows.push_back({static_cast<double>(g), score, label});
    }
  }
  const Dataset ds("noisy", noisy_schema(), rows);
  const auto acc = evaluate_by_subgroup(ds, "education", {}, 5);
  const double hs = acc.at({"education", "high-school"});
  EXPECT_LT(hs, acc.at({"education", "bachelor"}));
  EXPECT_LT(hs, acc.at({"education", "master"}));
  EXPECT_EQ(acc, evaluate_by_subgroup(ds, "education", {}, 5));

  // Replay the folds by hand: the high-school accuracy is the mean of the
  // held-out hits in that subgroup.
  const CrossValidation cv = cross_validate(ds, {}, 5);
  size_t hits = 0;
  for (size_t i = 0; i < 100; ++i) hits += cv.correct[i];
  EXPECT_DOUBLE_EQ(hs, hits / 100.0);
}

}  // namespace
}  // namespace debias
