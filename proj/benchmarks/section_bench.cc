/*
 * Copyright 2026 The slicevis Authors.
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

// Section payload latency at the interactive scale: n up to 100,000 rows,
// p = 30 predictors, a 101-point grid.

#include <memory>
#include <random>
#include <string>
#include <vector>

#include <benchmark/benchmark.h>

#include "slicevis/frame.h"
#include "slicevis/metric.h"
#include "slicevis/model.h"
#include "slicevis/section.h"
#include "slicevis/session.h"
#include "slicevis_tools/simulate.h"

namespace slicevis {
namespace {

constexpr std::size_t kPredictors = 30;

std::shared_ptr<const DataFrame> Data(std::size_t n) {
  tools::SimOptions options;
  options.n = n;
  options.p = kPredictors;
  options.seed = 1;
  DataFrame x = tools::Simulate(options);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> noise(0.0, 0.5);
  Column y{"y", ColumnKind::kNumeric, std::vector<double>(n), {}};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < kPredictors; ++j) {
      y.values[i] += (j % 3 == 0 ? 1.0 : -0.5) * x.column(j).values[i];
    }
    y.values[i] += noise(rng);
  }
  std::vector<Column> cols = x.columns();
  cols.push_back(std::move(y));
  return std::make_shared<const DataFrame>(std::move(cols));
}

std::vector<std::string> Predictors(const DataFrame& frame) {
  std::vector<std::string> names = frame.ColumnNames();
  names.pop_back();
  return names;
}

void BM_SectionPayload(benchmark::State& state, const std::string& spec) {
  const auto frame = Data(static_cast<std::size_t>(state.range(0)));
  const std::vector<ModelHandle> models{
      FitBuiltin(ModelSpec::Parse(spec), *frame, "y", Predictors(*frame), "m")};
  const Roles roles = Roles::Complete(*frame, {"x1"}, {}, "y");
  const SectionPoint point = PointFromRow(*frame, roles, 0);
  const SimilarityConfig config{DistanceKind::kMaxnorm, 1.0, 10};
  for (auto _ : state) {
    SectionPayload payload = AssembleSection(*frame, models, roles, point, config);
    benchmark::DoNotOptimize(payload.visible_count);
  }
}
BENCHMARK_CAPTURE(BM_SectionPayload, linear, std::string("linear"))
    ->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_SectionPayload, knn, std::string("knn:k=10"))
    ->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_SectionPayload, tree, std::string("tree:depth=6"))
    ->Arg(10000)->Arg(100000)->Unit(benchmark::kMillisecond);

// A full interactive round: one mutation followed by the JSON payload.
void BM_SessionMutation(benchmark::State& state) {
  const auto frame = Data(static_cast<std::size_t>(state.range(0)));
  std::vector<ModelHandle> models{
      FitBuiltin(ModelSpec::Parse("linear"), *frame, "y", Predictors(*frame), "m")};
  Session session("bench", frame, std::move(models),
                  Roles::Complete(*frame, {"x1"}, {}, "y"));
  double sigma = 0.5;
  for (auto _ : state) {
    sigma = sigma == 0.5 ? 0.75 : 0.5;
    session.Apply({{"op", "setSigma"}, {"sigma", sigma}});
    benchmark::DoNotOptimize(session.SectionJson().dump().size());
  }
}
BENCHMARK(BM_SessionMutation)->Arg(100000)->Unit(benchmark::kMillisecond);

void BM_Similarity(benchmark::State& state) {
  const auto frame = Data(static_cast<std::size_t>(state.range(0)));
  const Roles roles = Roles::Complete(*frame, {"x1"}, {}, "y");
  const FeatureSpace space(*frame, roles.conditioning);
  const SectionPoint point = PointFromRow(*frame, roles, 0);
  for (auto _ : state) {
    auto result = ComputeSimilarity(space, point, {DistanceKind::kMaxnorm, 1.0, 10});
    benchmark::DoNotOptimize(result.visible.size());
  }
}
BENCHMARK(BM_Similarity)->Arg(100000)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace slicevis

BENCHMARK_MAIN();
