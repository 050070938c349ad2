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

// Distances from a section point to observations, similarity scores, fading
// and visible-set extraction.

#ifndef SLICEVIS_METRIC_H_
#define SLICEVIS_METRIC_H_

#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slicevis/frame.h"

namespace slicevis {

enum class DistanceKind { kEuclidean, kMaxnorm, kGower };

std::string_view DistanceName(DistanceKind kind);
DistanceKind ParseDistanceKind(std::string_view text);

// Sigma value meaning "show every observation".
inline constexpr double kShowAll = std::numeric_limits<double>::infinity();

struct SimilarityConfig {
  DistanceKind distance = DistanceKind::kMaxnorm;
  double sigma = 1.0;  // standardized units; kShowAll for the slider maximum
  int fade_bins = 10;

  bool show_all() const { return sigma == kShowAll; }
  // Throws DataError when sigma < 0 (or NaN) or fade_bins < 1.
  void Validate() const;
};

// A set of variables together with the per-variable scales used to compare
// coordinates. Numeric variables are divided by their standard deviation for
// Euclidean/maxnorm and by their range for Gower; both are taken from the
// full frame. Numeric variables with zero spread are excluded and reported.
//
// Holds a reference to `frame`, which must outlive the space.
class FeatureSpace {
 public:
  FeatureSpace(const DataFrame& frame, std::vector<std::string> vars);

  const DataFrame& frame() const { return *frame_; }
  // Retained variables, in the order coordinates are laid out.
  const std::vector<std::string>& vars() const { return vars_; }
  // Constant numeric variables left out of every distance.
  const std::vector<std::string>& excluded() const { return excluded_; }
  std::size_t dims() const { return vars_.size(); }
  bool all_numeric() const { return all_numeric_; }
  ColumnKind kind(std::size_t dim) const { return kinds_[dim]; }
  double sd(std::size_t dim) const { return sd_[dim]; }
  double range(std::size_t dim) const { return range_[dim]; }

  // Standardized Euclidean for all-numeric spaces, Gower otherwise. Used for
  // medoids, k-medoids and seriation.
  DistanceKind clustering_distance() const {
    return all_numeric_ ? DistanceKind::kEuclidean : DistanceKind::kGower;
  }

  // Reads conditioning, then hidden coordinates by name. Throws DataError if
  // a variable is missing from the point.
  std::vector<double> PointCoordinates(const SectionPoint& point) const;
  std::vector<double> RowCoordinates(std::size_t row) const;

  // Euclidean and maxnorm return infinity on any categorical mismatch.
  double Distance(std::span<const double> u, std::span<const double> v,
                  DistanceKind kind) const;
  double RowDistance(std::size_t a, std::size_t b, DistanceKind kind) const;
  // Distance from `u` to every row of the frame.
  std::vector<double> DistancesToRows(std::span<const double> u,
                                     DistanceKind kind) const;

 private:
  const DataFrame* frame_;
  std::vector<std::string> vars_;
  std::vector<std::string> excluded_;
  std::vector<std::size_t> columns_;
  std::vector<ColumnKind> kinds_;
  std::vector<double> sd_;
  std::vector<double> range_;
  bool all_numeric_ = true;
};

// max(0, 1 - d / sigma). With sigma == 0 only d == 0 scores 1; with
// sigma == kShowAll every observation scores 1.
double SimilarityScore(double distance, double sigma);
std::vector<double> Similarity(std::span<const double> distances,
                               double sigma);

struct FadeResult {
  std::vector<std::size_t> visible;  // indices with score > 0
  std::vector<int> level;            // 1..bins, per visible index
  std::vector<double> alpha;         // level / bins, per visible index
};

// Bins positive scores into `bins` equal-width intervals over (0, 1]. The
// right-most interval keeps full opacity.
FadeResult Fade(std::span<const double> scores, int bins);

struct SimilarityResult {
  std::vector<double> scores;  // one per row
  std::vector<std::size_t> visible;
  std::vector<int> fade_level;
  std::vector<double> alpha;
};

// Similarity of every row of the space's frame to `point`.
SimilarityResult ComputeSimilarity(const FeatureSpace& space,
                                   const SectionPoint& point,
                                   const SimilarityConfig& config);

}  // namespace slicevis

#endif  // SLICEVIS_METRIC_H_
