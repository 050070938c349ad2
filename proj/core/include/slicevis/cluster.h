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

// k-means and k-medoids (PAM) used to find occupied regions of predictor
// space.

#ifndef SLICEVIS_CLUSTER_H_
#define SLICEVIS_CLUSTER_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <stop_token>
#include <string>
#include <vector>

#include "slicevis/frame.h"
#include "slicevis/metric.h"

namespace slicevis {

// Row-major dense matrix.
struct PointMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  PointMatrix() = default;
  PointMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c) {}
  std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const {
    return {data.data() + i * cols, cols};
  }
};

// Standardizes numeric variables and one-hot encodes categorical ones.
// Constant numeric variables contribute no columns.
class OneHotEncoder {
 public:
  OneHotEncoder(const DataFrame& frame, std::vector<std::string> vars);

  const std::vector<std::string>& vars() const { return vars_; }
  std::size_t width() const { return width_; }

  // Encodes the given rows of `frame` (which must carry the encoder's vars
  // with the same levels).
  PointMatrix Encode(const DataFrame& frame,
                     std::span<const std::size_t> rows) const;
  PointMatrix EncodeAll(const DataFrame& frame) const;
  // Numeric coordinate of `var` decoded from an encoded centre.
  double DecodeNumeric(std::size_t var, std::span<const double> center) const;
  bool is_numeric(std::size_t var) const { return numeric_[var]; }

 private:
  std::vector<std::string> vars_;
  std::vector<bool> numeric_;
  std::vector<double> mean_;
  std::vector<double> sd_;          // 0 marks a constant numeric var
  std::vector<std::size_t> offset_; // first encoded column of each var
  std::vector<std::size_t> levels_; // level count, categorical only
  std::size_t width_ = 0;
};

struct KMeansOptions {
  int restarts = 5;
  int max_iterations = 100;
  std::uint64_t seed = 0;
  std::stop_token stop;
};

struct KMeansResult {
  PointMatrix centers;
  std::vector<int> assignment;
  double within_ss = 0.0;
};

// k-means++ seeding, Lloyd iterations, best of `restarts` by within-cluster
// sum of squares. Throws DataError when k is 0 or exceeds the number of
// distinct points.
KMeansResult KMeans(const PointMatrix& points, std::size_t k,
                    const KMeansOptions& options);

// Index of the nearest centre (lowest index on ties).
int NearestCenter(const PointMatrix& centers, std::span<const double> point);

// Upper-triangular pairwise distances.
class CondensedDistances {
 public:
  CondensedDistances() = default;
  explicit CondensedDistances(std::size_t n)
      : n_(n), d_(n < 2 ? 0 : n * (n - 1) / 2) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const {
    if (i == j) return 0.0;
    if (i > j) std::swap(i, j);
    return d_[Index(i, j)];
  }
  void set(std::size_t i, std::size_t j, double value) {
    if (i > j) std::swap(i, j);
    d_[Index(i, j)] = value;
  }

 private:
  std::size_t Index(std::size_t i, std::size_t j) const {
    return i * n_ - i * (i + 1) / 2 + (j - i - 1);
  }
  std::size_t n_ = 0;
  std::vector<double> d_;
};

// Distances between the given rows of the space's frame.
CondensedDistances PairwiseDistances(const FeatureSpace& space,
                                     std::span<const std::size_t> rows,
                                     DistanceKind kind);

struct PamOptions {
  int max_swaps = 50;
  std::stop_token stop;
  // Called with the fraction of the swap budget used.
  std::function<void(double)> progress;
};

struct PamResult {
  std::vector<std::size_t> medoids;  // indices into the distance matrix
  std::vector<int> assignment;
  double cost = 0.0;
  int swaps = 0;
};

// BUILD then SWAP (best improving swap per pass, evaluated with the
// shared-accumulator update so a pass costs O(n^2)). Throws DataError when
// k is 0 or exceeds n, StateError when cancelled.
PamResult Pam(const CondensedDistances& distances, std::size_t k,
              const PamOptions& options = {});

}  // namespace slicevis

#endif  // SLICEVIS_CLUSTER_H_
