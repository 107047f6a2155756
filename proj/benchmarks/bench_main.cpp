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


#include <benchmark/benchmark.h>

#include <random>
#include <string>

#include "debias/augment.hpp"
#include "debias/bias.hpp"
#include "debias/csv.hpp"
#include "debias/model.hpp"
#include "debias/tabular.hpp"

namespace {

using namespace debias;

Schema bench_schema() {
  return schema_from_json(nlohmann::json::array({
      {{"name", "age"}, {"kind", "numeric-integer"}, {"role", "predictor"},
       {"binning", {{"strategy", "equal-width"}, {"bin_count", 6}}}},
      {{"name", "region"}, {"kind", "categorical"}, {"role", "predictor"},
       {"categories", {"north", "south", "east", "west"}}},
      {{"name", "income"}, {"kind", "numeric-continuous"}, {"role", "predictor"},
       {"binning", {{"strategy", "quantile"}, {"bin_count", 4}}}},
      {{"name", "label"}, {"kind", "categorical"}, {"role", "target"}, {"categories", {"no", "yes"}}},
  }));
}

Dataset bench_dataset(size_t rows) {
  std::mt19937_64 rng(rows);
  std::uniform_int_distribution<int> age(18, 90);
  std::normal_distribution<double> income(50, 15);
  const char* regions[] = {"north", "south", "east", "west"};
  std::string csv = "age,region,income,label\n";
  for (size_t i = 0; i < rows; ++i) {
    const int a = age(rng);
    const double inc = std::round(income(rng) * 100) / 100;
    const bool yes = inc + 0.3 * a + std::normal_distribution<double>(0, 8)(rng) > 65;
    csv += std::to_string(a) + "," + regions[rng() % 4] + "," + format_number(inc) + "," + (yes ? "yes" : "no") + "\n";
  }
  return load_dataset(csv, bench_schema(), "bench");
}

void BM_BiasReport(benchmark::State& state) {
  const Dataset ds = bench_dataset(static_cast<size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(bias_report(ds, std::nullopt));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BiasReport)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_Train(benchmark::State& state) {
  const Dataset ds = bench_dataset(static_cast<size_t>(state.range(0)));
  ModelConfig cfg;
  cfg.iterations = 200;
  for (auto _ : state) benchmark::DoNotOptimize(train(ds, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Train)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_Generate(benchmark::State& state) {
  const Dataset ds = bench_dataset(static_cast<size_t>(state.range(0)));
  AugmentationPlan plan;
  plan.target_class = "yes";
  plan.requested_count = 500;
  plan.constraints = {Constraint::interval("age", 40, 70), Constraint::allowed("region", {"north", "east"})};
  for (auto _ : state) benchmark::DoNotOptimize(generate(ds, plan));
  state.SetItemsProcessed(state.iterations() * 500);
}
BENCHMARK(BM_Generate)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
