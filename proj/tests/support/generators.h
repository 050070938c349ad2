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

// Seeded random datasets for property and acceptance tests.

#ifndef SLICEVIS_TESTS_GENERATORS_H_
#define SLICEVIS_TESTS_GENERATORS_H_

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "slicevis/frame.h"

namespace testgen {

using slicevis::Column;
using slicevis::ColumnKind;
using slicevis::DataFrame;

struct FrameSpec {
  std::size_t rows = 50;
  std::size_t numeric = 3;
  std::size_t categorical = 1;
  std::size_t levels = 3;
  // Numeric values are rounded to this grid (0 keeps them continuous);
  // rounding creates ties.
  double grid = 0.0;
};

// Columns x1.. (numeric) then g1.. (categorical, levels "a","b",...).
inline DataFrame RandomFrame(const FrameSpec& spec, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Column> cols;
  for (std::size_t j = 0; j < spec.numeric; ++j) {
    Column c{"x" + std::to_string(j + 1), ColumnKind::kNumeric, {}, {}};
    for (std::size_t i = 0; i < spec.rows; ++i) {
      double v = normal(rng);
      if (spec.grid > 0.0) v = std::round(v / spec.grid) * spec.grid;
      c.values.push_back(v);
    }
    cols.push_back(std::move(c));
  }
  for (std::size_t j = 0; j < spec.categorical; ++j) {
    Column c{"g" + std::to_string(j + 1), ColumnKind::kCategorical, {}, {}};
    for (std::size_t l = 0; l < spec.levels; ++l) {
      c.levels.push_back(std::string(1, static_cast<char>('a' + l)));
    }
    std::uniform_int_distribution<int> level(0, static_cast<int>(spec.levels) - 1);
    for (std::size_t i = 0; i < spec.rows; ++i) c.values.push_back(level(rng));
    cols.push_back(std::move(c));
  }
  return DataFrame(std::move(cols));
}

// Adds a response column built from `frame`: numeric y = sum of coefficient
// times numeric predictors plus level effects plus noise, or a categorical
// class derived from it by thresholds.
inline DataFrame WithResponse(const DataFrame& frame, std::mt19937_64& rng,
                              bool categorical, double noise = 0.3,
                              std::size_t classes = 3) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> y(frame.num_rows(), 0.0);
  for (const auto& col : frame.columns()) {
    if (col.is_numeric()) {
      const double b = normal(rng);
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += b * col.values[i];
    } else {
      std::vector<double> effect(col.levels.size());
      for (double& e : effect) e = normal(rng);
      for (std::size_t i = 0; i < y.size(); ++i) y[i] += effect[col.code(i)];
    }
  }
  for (double& v : y) v += noise * normal(rng);
  std::vector<Column> cols = frame.columns();
  Column response{"y", categorical ? ColumnKind::kCategorical : ColumnKind::kNumeric,
                  {}, {}};
  if (!categorical) {
    response.values = y;
  } else {
    for (std::size_t l = 0; l < classes; ++l) {
      response.levels.push_back("c" + std::to_string(l));
    }
    for (const double v : y) {
      // Fixed cut points on a logistic squash keep every class populated.
      const double u = 1.0 / (1.0 + std::exp(-v));
      response.values.push_back(
          std::min<double>(classes - 1, std::floor(u * classes)));
    }
  }
  cols.push_back(std::move(response));
  return DataFrame(std::move(cols));
}

}  // namespace testgen

#endif  // SLICEVIS_TESTS_GENERATORS_H_
