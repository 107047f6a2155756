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
#include <filesystem>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "debias/augment.hpp"
#include "debias/tabular.hpp"

namespace debias::testing {

// education in {high-school, bachelor, master} with counts 100/300/200 and a
// binary label.
nlohmann::json education_schema_json();
Schema education_schema();
std::string education_csv(uint64_t seed = 1);
Dataset education_dataset(uint64_t seed = 1);

// age (integer), cholesterol and blood_pressure {normal, high}, glucose
// (continuous), outcome {healthy, diabetic}. The label depends on glucose.
nlohmann::json diabetes_schema_json();
Schema diabetes_schema();
std::string diabetes_csv(size_t rows, uint64_t seed);
Dataset diabetes_dataset(size_t rows, uint64_t seed);

// The canonical diabetes plan: 50 diabetic samples aged 50-60 with high
// cholesterol and high blood pressure.
AugmentationPlan diabetes_plan(uint64_t seed = 7);

// Random mixed-type schema with 1-4 predictors and a 2-3 class target.
Schema random_schema(std::mt19937_64& rng);
Dataset random_dataset(const Schema& schema, size_t rows, std::mt19937_64& rng);
// Plan around an anchor row so the eligible pool has >= 2 rows when possible.
AugmentationPlan random_plan(const Dataset& dataset, std::mt19937_64& rng);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace debias::testing
