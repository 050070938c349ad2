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

#include "slicevis_tools/simulate.h"

#include <random>
#include <string>

#include "slicevis/error.h"

namespace slicevis::tools {

SimKind ParseSimKind(std::string_view text) {
  if (text == "normal") return SimKind::kNormal;
  if (text == "uniform") return SimKind::kUniform;
  if (text == "mixture") return SimKind::kMixture;
  throw DataError("unknown simulation kind '" + std::string(text) + "'");
}

DataFrame Simulate(const SimOptions& options) {
  if (options.n == 0 || options.p == 0) {
    throw DataError("simulated data needs n >= 1 and p >= 1");
  }
  if (options.kind == SimKind::kMixture && options.components == 0) {
    throw DataError("a mixture needs at least one component");
  }
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  std::vector<std::vector<double>> centers;
  if (options.kind == SimKind::kMixture) {
    centers.assign(options.components, std::vector<double>(options.p));
    for (auto& c : centers) {
      for (double& v : c) v = options.separation * normal(rng);
    }
  }
  std::vector<Column> columns(options.p);
  for (std::size_t j = 0; j < options.p; ++j) {
    columns[j].name = "x" + std::to_string(j + 1);
    columns[j].values.resize(options.n);
  }
  for (std::size_t i = 0; i < options.n; ++i) {
    for (std::size_t j = 0; j < options.p; ++j) {
      double v = 0.0;
      switch (options.kind) {
        case SimKind::kNormal: v = normal(rng); break;
        case SimKind::kUniform: v = uniform(rng); break;
        case SimKind::kMixture:
          v = centers[i % options.components][j] + normal(rng);
          break;
      }
      columns[j].values[i] = v;
    }
  }
  return DataFrame(std::move(columns));
}

}  // namespace slicevis::tools
