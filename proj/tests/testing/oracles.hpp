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

// Brute-force reference implementations. They share no code with the engine
// beyond Schema accessors and number formatting.

#include <string>
#include <utility>
#include <vector>

#include "debias/augment.hpp"
#include "debias/tabular.hpp"

namespace debias::oracle {

using Counts = std::vector<std::pair<std::string, size_t>>;

// Bin edges recomputed from the raw column; duplicates removed.
std::vector<double> bin_edges(const BinSpec& spec, std::vector<double> column);

// (label, count) per subgroup of `variable` by scanning every row.
Counts subgroup_counts(const Dataset& dataset, const std::string& variable);

std::vector<double> rates(const std::vector<size_t>& counts);

struct Coverage {
  bool met;
  size_t deficit;
};
std::vector<Coverage> coverage(const std::vector<size_t>& counts, size_t threshold);

// Rows of the plan's class that satisfy every constraint, checked by label.
std::vector<size_t> eligible_pool(const Dataset& dataset, const AugmentationPlan& plan);

// All-pairs Gower distances, sorted by (distance, row id).
std::vector<size_t> nearest(const Dataset& dataset, const std::vector<size_t>& pool, size_t base, size_t k);

// True when `values` has the plan's target label and meets every constraint.
bool satisfies(const Row& values, const AugmentationPlan& plan, const Schema& schema);

}  // namespace debias::oracle
