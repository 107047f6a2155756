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

#include "fixtures.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "debias/csv.hpp"

namespace debias::testing {

using nlohmann::json;

json education_schema_json() {
  return {{"variables",
           {{{"name", "education"},
             {"kind", "categorical"},
             {"role", "predictor"},
             {"categories", {"high-school", "bachelor", "master"}}},
            {{"name", "label"}, {"kind", "categorical"}, {"role", "target"}, {"categories", {"no", "yes"}}}}}};
}

Schema education_schema() { return schema_from_json(education_schema_json()); }

std::string education_csv(uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::string out = "education,label\n";
  const std::pair<const char*, int> groups[] = {{"high-school", 100}, {"bachelor", 300}, {"master", 200}};
  for (const auto& [level, n] : groups) {
    for (int i = 0; i < n; ++i) {
      out += std::string(level) + "," + (rng() % 3 == 0 ? "yes" : "no") + "\n";
    }
  }
  return out;
}

Dataset education_dataset(uint64_t seed) { return load_dataset(education_csv(seed), education_schema(), "edu"); }

json diabetes_schema_json() {
  return {{"variables",
           {{{"name", "age"},
             {"kind", "numeric-integer"},
             {"role", "predictor"},
             {"binning", {{"strategy", "explicit-edges"}, {"edges", {18, 30, 40, 50, 60, 90}}}}},
            {{"name", "cholesterol"}, {"kind", "categorical"}, {"role", "predictor"}, {"categories", {"normal", "high"}}},
            {{"name", "blood_pressure"},
             {"kind", "categorical"},
             {"role", "predictor"},
             {"categories", {"normal", "high"}}},
            {{"name", "glucose"},
             {"kind", "numeric-continuous"},
             {"role", "predictor"},
             {"binning", {{"strategy", "quantile"}, {"bin_count", 4}}}},
            {{"name", "outcome"},
             {"kind", "categorical"},
             {"role", "target"},
             {"categories", {"healthy", "diabetic"}}}}}};
}

Schema diabetes_schema() { return schema_from_json(diabetes_schema_json()); }

std::string diabetes_csv(size_t rows, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> age(18, 89);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, 12.0);
  std::string out = "age,cholesterol,blood_pressure,glucose,outcome\n";
  for (size_t i = 0; i < rows; ++i) {
    const int a = age(rng);
    const bool chol = unit(rng) < 0.4 + a / 300.0;
    const bool bp = unit(rng) < 0.3 + a / 250.0;
    const double glucose = std::round((85.0 + 0.6 * a + (chol ? 15 : 0) + (bp ? 10 : 0) + noise(rng)) * 10.0) / 10.0;
    const bool diabetic = glucose + noise(rng) * 0.5 > 140.0;
    out += std::to_string(a) + "," + (chol ? "high" : "normal") + "," + (bp ? "high" : "normal") + "," +
           format_number(glucose) + "," + (diabetic ? "diabetic" : "healthy") + "\n";
  }
  return out;
}

Dataset diabetes_dataset(size_t rows, uint64_t seed) {
  return load_dataset(diabetes_csv(rows, seed), diabetes_schema(), "diabetes");
}

AugmentationPlan diabetes_plan(uint64_t seed) {
  AugmentationPlan plan;
  plan.target_class = "diabetic";
  plan.requested_count = 50;
  plan.constraints = {Constraint::interval("age", 50, 60), Constraint::allowed("cholesterol", {"high"}),
                      Constraint::allowed("blood_pressure", {"high"})};
  plan.seed = seed;
  return plan;
}

Schema random_schema(std::mt19937_64& rng) {
  std::vector<VariableSchema> vars;
  const size_t predictors = 1 + rng() % 4;
  for (size_t i = 0; i < predictors; ++i) {
    VariableSchema v;
    v.name = "x" + std::to_string(i);
    switch (rng() % 3) {
      case 0:
        v.kind = VariableKind::kContinuous;
        v.binning = BinSpec::equal_width(2 + static_cast<int>(rng() % 4));
        break;
      case 1:
        v.kind = VariableKind::kInteger;
        v.binning = BinSpec::quantile(2 + static_cast<int>(rng() % 3));
        break;
      default: {
        v.kind = VariableKind::kCategorical;
        const size_t n = 2 + rng() % 3;
        for (size_t c = 0; c < n; ++c) v.categories.push_back("c" + std::to_string(c));
      }
    }
    vars.push_back(std::move(v));
  }
  VariableSchema target;
  target.name = "y";
  target.kind = VariableKind::kCategorical;
  target.role = VariableRole::kTarget;
  const size_t classes = 2 + rng() % 2;
  for (size_t c = 0; c < classes; ++c) target.categories.push_back("k" + std::to_string(c));
  // Target position varies so column order is exercised.
  vars.insert(vars.begin() + static_cast<std::ptrdiff_t>(rng() % (vars.size() + 1)), std::move(target));
  return Schema(std::move(vars));
}

Dataset random_dataset(const Schema& schema, size_t rows, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> cont(-50.0, 150.0);
  std::uniform_int_distribution<int> integer(0, 40);
  std::vector<Row> data(rows, Row(schema.size()));
  for (auto& row : data) {
    for (size_t j = 0; j < schema.size(); ++j) {
      switch (schema[j].kind) {
        case VariableKind::kContinuous: row[j] = std::round(cont(rng) * 1000.0) / 1000.0; break;
        case VariableKind::kInteger: row[j] = integer(rng); break;
        case VariableKind::kCategorical: row[j] = static_cast<double>(rng() % schema[j].categories.size()); break;
      }
    }
  }
  return Dataset("rand", schema, std::move(data));
}

AugmentationPlan random_plan(const Dataset& dataset, std::mt19937_64& rng) {
  const Schema& schema = dataset.schema();
  const size_t anchor = rng() % dataset.size();
  const Row& a = dataset.row(anchor);
  AugmentationPlan plan;
  plan.target_class = schema.target().categories[static_cast<size_t>(a[schema.target_index()])];
  plan.requested_count = 1 + rng() % 150;
  plan.neighbor_k = 1 + rng() % 8;
  plan.seed = rng();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (size_t j = 0; j < schema.size(); ++j) {
    const VariableSchema& v = schema[j];
    if (v.is_target() || unit(rng) < 0.4) continue;
    if (v.is_numeric()) {
      const double span = v.kind == VariableKind::kInteger ? 40.0 : 200.0;
      double lo = a[j] - unit(rng) * span * 0.5;
      double hi = a[j] + unit(rng) * span * 0.5;
      if (v.kind == VariableKind::kInteger && unit(rng) < 0.5) {
        // Fractional bounds on integers exercise the rounding clamp.
        lo = std::floor(lo) + 0.5;
        hi = std::floor(hi) + 0.5;
        if (lo > a[j]) lo -= 1.0;
        if (hi < a[j]) hi += 1.0;
      }
      plan.constraints.push_back(Constraint::interval(v.name, lo, hi));
    } else {
      std::vector<std::string> labels{v.categories[static_cast<size_t>(a[j])]};
      for (const auto& c : v.categories) {
        if (c != labels.front() && unit(rng) < 0.4) labels.push_back(c);
      }
      plan.constraints.push_back(Constraint::allowed(v.name, labels));
    }
  }
  return plan;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << bytes;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("debias-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace debias::testing
