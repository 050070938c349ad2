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

// Tours: ordered sequences of section points, chosen to visit where the data
// live (random, kmeans, kmed), where fits are poor or disagree (lof,
// diffits), where the response is extreme, or along one variable. Also path
// ordering, interpolation between stops, and slice occupancy.

#ifndef SLICEVIS_TOUR_H_
#define SLICEVIS_TOUR_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stop_token>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "slicevis/frame.h"
#include "slicevis/metric.h"
#include "slicevis/model.h"

namespace slicevis {

enum class TourKind {
  kRandom,
  kKmeans,
  kKmed,
  kLof,
  kDiffits,
  kHiResponse,
  kLoResponse,
  kAlongVar
};

std::string_view TourKindName(TourKind kind);
TourKind ParseTourKind(std::string_view text);

struct Occupancy {
  std::vector<std::size_t> visible;        // per tour point
  std::vector<double> total_similarity;    // per tour point
  std::vector<double> max_similarity;      // per observation, over the tour
  double mean_visible = 0.0;
  double mean_total_similarity = 0.0;
  double fraction_visited = 0.0;  // observations with max similarity > 0
};

struct Tour {
  TourKind kind = TourKind::kRandom;
  std::vector<SectionPoint> points;
  // Source observation of each point, for tours built from rows.
  std::vector<std::size_t> rows;
  std::vector<SectionPoint> interpolated;
  std::size_t length_requested = 0;
  std::uint64_t seed = 0;
  std::optional<std::string> var;  // alongVar only
  std::optional<Occupancy> diagnostics;
};

struct TourRequest {
  TourKind kind = TourKind::kRandom;
  std::size_t length = 10;
  std::uint64_t seed = 0;
  std::size_t cap = 4000;          // kmed distance-matrix rows
  std::optional<std::string> var;  // alongVar
  int steps_per_segment = 1;       // > 1 fills `interpolated`
  std::stop_token stop;
  std::function<void(double)> progress;
};

// Builds, orders and deduplicates a tour. Points take conditioning
// coordinates from the chosen rows or centres, and hidden coordinates from
// `base`. Throws DataError or ModelError when the kind's preconditions fail
// and StateError when cancelled.
Tour BuildTour(const DataFrame& frame, const Roles& roles,
               const SectionPoint& base, std::span<const ModelHandle> models,
               const TourRequest& request);

// Row selections, in rank order (before path ordering).
//
// Largest max-over-fits absolute residual, ties to the lower row; rows with
// zero residual are never chosen. For a categorical response: rows any fit
// misclassifies, ranked by the largest 1 - P(true class) over probability
// fits (dataset order when there are none).
std::vector<std::size_t> SelectLackOfFit(
    const Column& response, std::span<const Predictions> predictions,
    std::size_t l);
// Largest max pairwise absolute fit difference, ties to the lower row. For
// class-valued fits: most distinct predicted classes, then largest pairwise
// total-variation distance between probability rows.
std::vector<std::size_t> SelectDiffits(std::span<const Predictions> predictions,
                                       std::size_t l);
std::vector<std::size_t> SelectExtremeResponse(const Column& response,
                                               std::size_t l, bool high);

// Shortest-path style ordering of n points given a row-major n x n distance
// matrix: average-linkage clustering whose merges place the two leaf orders
// (each possibly reversed) so the joining distance is smallest, followed by a
// 2-opt pass. Deterministic; identity for n <= 2.
std::vector<std::size_t> Seriate(std::span<const double> distances,
                                 std::size_t n);
// Seriation of section points in the conditioning space.
std::vector<std::size_t> SeriatePoints(const FeatureSpace& space,
                                       std::span<const SectionPoint> points);
double PathLength(std::span<const double> distances, std::size_t n,
                  std::span<const std::size_t> order);

// Inserts m - 1 points between consecutive stops: numeric coordinates move
// linearly in j / m; categorical ones switch to the next level once
// j / m >= 1/2. Returns (l - 1) m + 1 points.
std::vector<SectionPoint> Interpolate(const DataFrame& frame,
                                      std::span<const SectionPoint> points,
                                      int m);

// Slice occupancy over the conditioning variables.
Occupancy ComputeOccupancy(const DataFrame& frame, const Roles& roles,
                           std::span<const SectionPoint> points,
                           const SimilarityConfig& config);

nlohmann::json TourToJson(const Tour& tour, const DataFrame& frame);

}  // namespace slicevis

#endif  // SLICEVIS_TOUR_H_
