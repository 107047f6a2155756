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

#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "debias/csv.hpp"

namespace debias::oracle {

std::vector<double> bin_edges(const BinSpec& spec, std::vector<double> column) {
  std::sort(column.begin(), column.end());
  std::vector<double> edges;
  if (spec.strategy == BinStrategy::kExplicitEdges) {
    edges = spec.edges;
  } else if (spec.strategy == BinStrategy::kEqualWidth) {
    const double lo = column.front();
    const double hi = column.back();
    const double width = (hi - lo) / spec.bin_count;
    for (int i = 0; i < spec.bin_count; ++i) edges.push_back(lo + width * i);
    edges.push_back(hi);
  } else {
    const double n = static_cast<double>(column.size());
    for (int i = 0; i <= spec.bin_count; ++i) {
      const double h = (n - 1.0) * i / spec.bin_count;
      const auto below = static_cast<size_t>(std::floor(h));
      const size_t above = std::min(below + 1, column.size() - 1);
      edges.push_back(column[below] + (h - std::floor(h)) * (column[above] - column[below]));
    }
    edges.front() = column.front();
    edges.back() = column.back();
  }
  std::vector<double> unique;
  for (double e : edges) {
    if (unique.empty() || unique.back() != e) unique.push_back(e);
  }
  if (unique.size() == 1) unique.push_back(unique.front());
  return unique;
}

Counts subgroup_counts(const Dataset& dataset, const std::string& variable) {
  const Schema& schema = dataset.schema();
  size_t col = 0;
  while (schema[col].name != variable) ++col;
  const VariableSchema& v = schema[col];
  Counts out;
  if (!v.is_numeric()) {
    for (size_t c = 0; c < v.categories.size(); ++c) {
      size_t n = 0;
      for (const Row& r : dataset.rows()) n += static_cast<size_t>(r[col]) == c;
      out.emplace_back(v.categories[c], n);
    }
    return out;
  }
  std::vector<double> column;
  for (const Row& r : dataset.rows()) column.push_back(r[col]);
  const std::vector<double> e = bin_edges(*v.binning, column);
  const size_t bins = e.size() - 1;
  for (size_t b = 0; b < bins; ++b) {
    const bool last = b + 1 == bins;
    out.emplace_back("[" + format_number(e[b]) + ", " + format_number(e[b + 1]) + (last ? "]" : ")"), 0);
  }
  for (double x : column) {
    size_t bin = bins - 1;
    for (size_t b = 0; b + 1 < bins; ++b) {
      if (x < e[b + 1]) {
        bin = b;
        break;
      }
    }
    ++out[bin].second;
  }
  return out;
}

std::vector<double> rates(const std::vector<size_t>& counts) {
  size_t top = 0;
  for (size_t c : counts) top = std::max(top, c);
  std::vector<double> out;
  for (size_t c : counts) out.push_back(static_cast<double>(c) / static_cast<double>(top));
  return out;
}

std::vector<Coverage> coverage(const std::vector<size_t>& counts, size_t threshold) {
  std::vector<Coverage> out;
  for (size_t c : counts) out.push_back({c >= threshold, c >= threshold ? 0 : threshold - c});
  return out;
}

namespace {

bool constraint_ok(const Constraint& c, const Row& values, const Schema& schema) {
  size_t col = 0;
  while (schema[col].name != c.variable) ++col;
  if (const auto* iv = std::get_if<Interval>(&c.body)) return iv->lo <= values[col] && values[col] <= iv->hi;
  const std::string& label = schema[col].categories.at(static_cast<size_t>(values[col]));
  const auto& allowed = std::get<AllowedSet>(c.body).labels;
  return std::find(allowed.begin(), allowed.end(), label) != allowed.end();
}

}  // namespace

bool satisfies(const Row& values, const AugmentationPlan& plan, const Schema& schema) {
  const VariableSchema& t = schema.target();
  const double cell = values[schema.target_index()];
  if (cell < 0 || cell >= static_cast<double>(t.categories.size())) return false;
  if (t.categories[static_cast<size_t>(cell)] != plan.target_class) return false;
  for (const auto& c : plan.constraints) {
    if (!constraint_ok(c, values, schema)) return false;
  }
  return true;
}

std::vector<size_t> eligible_pool(const Dataset& dataset, const AugmentationPlan& plan) {
  std::vector<size_t> out;
  for (size_t i = 0; i < dataset.size(); ++i) {
    if (dataset.origin(i) == Origin::kOriginal && satisfies(dataset.row(i), plan, dataset.schema())) out.push_back(i);
  }
  return out;
}

std::vector<size_t> nearest(const Dataset& dataset, const std::vector<size_t>& pool, size_t base, size_t k) {
  const Schema& schema = dataset.schema();
  std::vector<size_t> predictors;
  for (size_t j = 0; j < schema.size(); ++j) {
    if (!schema[j].is_target()) predictors.push_back(j);
  }
  std::vector<double> range(schema.size(), 0.0);
  for (size_t j : predictors) {
    if (!schema[j].is_numeric()) continue;
    double lo = INFINITY, hi = -INFINITY;
    for (size_t r : pool) {
      lo = std::min(lo, dataset.row(r)[j]);
      hi = std::max(hi, dataset.row(r)[j]);
    }
    range[j] = hi - lo;
  }
  // Full distance matrix, then read the base row.
  std::vector<std::vector<double>> d(pool.size(), std::vector<double>(pool.size(), 0.0));
  for (size_t p = 0; p < pool.size(); ++p) {
    for (size_t q = 0; q < pool.size(); ++q) {
      double sum = 0.0;
      for (size_t j : predictors) {
        const double a = dataset.row(pool[p])[j];
        const double b = dataset.row(pool[q])[j];
        if (!schema[j].is_numeric()) {
          sum += a == b ? 0.0 : 1.0;
        } else if (range[j] > 0) {
          sum += std::fabs(a - b) / range[j];
        }
      }
      d[p][q] = predictors.empty() ? 0.0 : sum / static_cast<double>(predictors.size());
    }
  }
  const size_t bp = static_cast<size_t>(std::find(pool.begin(), pool.end(), base) - pool.begin());
  std::vector<std::tuple<double, size_t>> scored;
  for (size_t q = 0; q < pool.size(); ++q) {
    if (q != bp) scored.emplace_back(d[bp][q], pool[q]);
  }
  std::sort(scored.begin(), scored.end());
  std::vector<size_t> out;
  for (size_t i = 0; i < k && i < scored.size(); ++i) out.push_back(std::get<1>(scored[i]));
  return out;
}

}  // namespace debias::oracle
