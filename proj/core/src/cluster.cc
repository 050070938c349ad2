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

#include "slicevis/cluster.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "slicevis/error.h"

namespace slicevis {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double SquaredDistance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const double d = a[j] - b[j];
    acc += d * d;
  }
  return acc;
}

std::size_t CountDistinctRows(const PointMatrix& points, std::size_t limit) {
  std::set<std::vector<double>> distinct;
  for (std::size_t i = 0; i < points.rows && distinct.size() < limit; ++i) {
    const auto r = points.row(i);
    distinct.emplace(r.begin(), r.end());
  }
  return distinct.size();
}

void CheckStop(const std::stop_token& stop) {
  if (stop.stop_requested()) throw StateError("clustering cancelled");
}

struct LloydRun {
  PointMatrix centers;
  std::vector<int> assignment;
  double within_ss = kInf;
};

LloydRun RunOnce(const PointMatrix& points, std::size_t k,
                 const KMeansOptions& options, std::mt19937_64& rng) {
  const std::size_t n = points.rows;
  const std::size_t dims = points.cols;
  LloydRun run;
  run.centers = PointMatrix(k, dims);

  // k-means++ seeding.
  std::vector<double> nearest(n, kInf);
  std::uniform_int_distribution<std::size_t> first(0, n - 1);
  std::size_t pick = first(rng);
  for (std::size_t c = 0; c < k; ++c) {
    const auto src = points.row(pick);
    std::copy(src.begin(), src.end(), run.centers.row(c).begin());
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i],
                            SquaredDistance(points.row(i), run.centers.row(c)));
      total += nearest[i];
    }
    if (c + 1 == k) break;
    if (total > 0.0) {
      std::discrete_distribution<std::size_t> weighted(nearest.begin(),
                                                       nearest.end());
      pick = weighted(rng);
    } else {
      pick = first(rng);
    }
  }

  run.assignment.assign(n, -1);
  std::vector<double> sums(k * dims);
  std::vector<std::size_t> counts(k);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    CheckStop(options.stop);
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int c = NearestCenter(run.centers, points.row(i));
      if (c != run.assignment[i]) {
        run.assignment[i] = c;
        changed = true;
      }
    }
    if (!changed && iter > 0) break;

    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(run.assignment[i]);
      ++counts[c];
      const auto r = points.row(i);
      for (std::size_t j = 0; j < dims; ++j) sums[c * dims + j] += r[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // Re-seed an empty cluster at the point worst served by its centre.
        std::size_t worst = 0;
        double worst_d = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d = SquaredDistance(
              points.row(i), run.centers.row(run.assignment[i]));
          if (d > worst_d) {
            worst_d = d;
            worst = i;
          }
        }
        const auto src = points.row(worst);
        std::copy(src.begin(), src.end(), run.centers.row(c).begin());
        run.assignment[worst] = static_cast<int>(c);
        continue;
      }
      auto center = run.centers.row(c);
      for (std::size_t j = 0; j < dims; ++j) {
        center[j] = sums[c * dims + j] / static_cast<double>(counts[c]);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    run.assignment[i] = NearestCenter(run.centers, points.row(i));
  }
  run.within_ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    run.within_ss +=
        SquaredDistance(points.row(i), run.centers.row(run.assignment[i]));
  }
  return run;
}

}  // namespace

OneHotEncoder::OneHotEncoder(const DataFrame& frame,
                             std::vector<std::string> vars)
    : vars_(std::move(vars)) {
  for (const std::string& name : vars_) {
    const Column& col = frame.column(name);
    offset_.push_back(width_);
    if (col.is_numeric()) {
      const NumericStats s = ScalingStats::ComputeColumn(col);
      numeric_.push_back(true);
      mean_.push_back(s.mean);
      sd_.push_back(s.constant() ? 0.0 : s.sd);
      levels_.push_back(0);
      if (!s.constant()) ++width_;
    } else {
      numeric_.push_back(false);
      mean_.push_back(0.0);
      sd_.push_back(0.0);
      levels_.push_back(col.levels.size());
      width_ += col.levels.size();
    }
  }
}

PointMatrix OneHotEncoder::Encode(const DataFrame& frame,
                                  std::span<const std::size_t> rows) const {
  PointMatrix out(rows.size(), width_);
  for (std::size_t v = 0; v < vars_.size(); ++v) {
    const auto& values = frame.column(vars_[v]).values;
    const std::size_t off = offset_[v];
    if (numeric_[v]) {
      if (sd_[v] == 0.0) continue;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        out.data[i * width_ + off] = (values[rows[i]] - mean_[v]) / sd_[v];
      }
    } else {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto code = static_cast<std::size_t>(values[rows[i]]);
        if (code >= levels_[v]) throw DataError("level code out of range");
        out.data[i * width_ + off + code] = 1.0;
      }
    }
  }
  return out;
}

PointMatrix OneHotEncoder::EncodeAll(const DataFrame& frame) const {
  std::vector<std::size_t> rows(frame.num_rows());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return Encode(frame, rows);
}

double OneHotEncoder::DecodeNumeric(std::size_t var,
                                    std::span<const double> center) const {
  if (sd_[var] == 0.0) return mean_[var];
  return center[offset_[var]] * sd_[var] + mean_[var];
}

int NearestCenter(const PointMatrix& centers, std::span<const double> point) {
  int best = 0;
  double best_d = kInf;
  for (std::size_t c = 0; c < centers.rows; ++c) {
    const double d = SquaredDistance(point, centers.row(c));
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

KMeansResult KMeans(const PointMatrix& points, std::size_t k,
                    const KMeansOptions& options) {
  if (k == 0) throw DataError("k-means needs k >= 1");
  if (points.rows == 0) throw DataError("k-means on zero rows");
  if (CountDistinctRows(points, k) < k) {
    throw DataError("k-means: k = " + std::to_string(k) +
                    " exceeds the number of distinct rows");
  }
  std::mt19937_64 rng(options.seed);
  LloydRun best;
  for (int r = 0; r < std::max(1, options.restarts); ++r) {
    LloydRun run = RunOnce(points, k, options, rng);
    if (run.within_ss < best.within_ss) best = std::move(run);
  }
  return {std::move(best.centers), std::move(best.assignment), best.within_ss};
}

CondensedDistances PairwiseDistances(const FeatureSpace& space,
                                     std::span<const std::size_t> rows,
                                     DistanceKind kind) {
  const std::size_t n = rows.size();
  const std::size_t dims = space.dims();
  std::vector<double> coords(n * dims);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = space.RowCoordinates(rows[i]);
    std::copy(c.begin(), c.end(), coords.begin() + i * dims);
  }
  CondensedDistances out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::span<const double> a(coords.data() + i * dims, dims);
    for (std::size_t j = i + 1; j < n; ++j) {
      out.set(i, j,
              space.Distance(a, {coords.data() + j * dims, dims}, kind));
    }
  }
  return out;
}

PamResult Pam(const CondensedDistances& d, std::size_t k,
              const PamOptions& options) {
  const std::size_t n = d.size();
  if (k == 0 || k > n) {
    throw DataError("k-medoids: k = " + std::to_string(k) +
                    " must lie in [1, " + std::to_string(n) + "]");
  }
  PamResult result;
  std::vector<char> is_medoid(n, 0);

  // BUILD: start from the overall medoid, then add the point that lowers
  // the total cost the most.
  std::vector<double> nearest(n, kInf);
  {
    std::size_t best = 0;
    double best_total = kInf;
    for (std::size_t i = 0; i < n; ++i) {
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) total += d(i, j);
      if (total < best_total) {
        best_total = total;
        best = i;
      }
    }
    result.medoids.push_back(best);
    is_medoid[best] = 1;
    for (std::size_t j = 0; j < n; ++j) nearest[j] = d(best, j);
  }
  while (result.medoids.size() < k) {
    if (options.stop.stop_requested()) throw StateError("k-medoids cancelled");
    std::size_t best = n;
    double best_gain = -1.0;
    for (std::size_t c = 0; c < n; ++c) {
      if (is_medoid[c]) continue;
      double gain = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        gain += std::max(0.0, nearest[j] - d(c, j));
      }
      if (gain > best_gain) {
        best_gain = gain;
        best = c;
      }
    }
    result.medoids.push_back(best);
    is_medoid[best] = 1;
    for (std::size_t j = 0; j < n; ++j) {
      nearest[j] = std::min(nearest[j], d(best, j));
    }
  }

  // SWAP.
  std::vector<std::size_t> near_idx(n);
  std::vector<double> d1(n), d2(n);
  auto refresh = [&] {
    for (std::size_t o = 0; o < n; ++o) {
      double a = kInf, b = kInf;
      std::size_t ai = 0;
      for (std::size_t m = 0; m < k; ++m) {
        const double v = d(o, result.medoids[m]);
        if (v < a) {
          b = a;
          a = v;
          ai = m;
        } else if (v < b) {
          b = v;
        }
      }
      near_idx[o] = ai;
      d1[o] = a;
      d2[o] = b;
    }
  };
  refresh();
  double cost = std::accumulate(d1.begin(), d1.end(), 0.0);

  std::vector<double> delta(k);
  while (result.swaps < options.max_swaps) {
    double best_delta = 0.0;
    std::size_t best_m = k;
    std::size_t best_c = n;
    for (std::size_t c = 0; c < n; ++c) {
      if (is_medoid[c]) continue;
      if (options.stop.stop_requested()) {
        throw StateError("k-medoids cancelled");
      }
      std::fill(delta.begin(), delta.end(), 0.0);
      double shared = 0.0;
      for (std::size_t o = 0; o < n; ++o) {
        const double doc = d(o, c);
        const std::size_t nm = near_idx[o];
        // Removing o's nearest medoid sends o to the candidate or to its
        // second nearest medoid.
        delta[nm] += std::min(doc, d2[o]) - d1[o];
        if (doc < d1[o]) {
          // Any other removal: o moves to the closer candidate.
          shared += doc - d1[o];
          delta[nm] -= doc - d1[o];
        }
      }
      for (std::size_t m = 0; m < k; ++m) {
        const double total = delta[m] + shared;
        if (total < best_delta) {
          best_delta = total;
          best_m = m;
          best_c = c;
        }
      }
    }
    if (best_m == k || !(best_delta < -1e-12 * std::max(1.0, cost))) break;
    is_medoid[result.medoids[best_m]] = 0;
    result.medoids[best_m] = best_c;
    is_medoid[best_c] = 1;
    ++result.swaps;
    refresh();
    cost = std::accumulate(d1.begin(), d1.end(), 0.0);
    if (options.progress) {
      options.progress(static_cast<double>(result.swaps) /
                       static_cast<double>(std::max(1, options.max_swaps)));
    }
  }
  result.assignment.resize(n);
  for (std::size_t o = 0; o < n; ++o) {
    result.assignment[o] = static_cast<int>(near_idx[o]);
  }
  result.cost = cost;
  if (options.progress) options.progress(1.0);
  return result;
}

}  // namespace slicevis
