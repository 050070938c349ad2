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

#include "slicevis/metric.h"

#include <algorithm>
#include <cmath>

#include "slicevis/error.h"

namespace slicevis {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

std::string_view DistanceName(DistanceKind kind) {
  switch (kind) {
    case DistanceKind::kEuclidean:
      return "euclidean";
    case DistanceKind::kMaxnorm:
      return "maxnorm";
    case DistanceKind::kGower:
      return "gower";
  }
  return "maxnorm";
}

DistanceKind ParseDistanceKind(std::string_view text) {
  if (text == "euclidean") return DistanceKind::kEuclidean;
  if (text == "maxnorm") return DistanceKind::kMaxnorm;
  if (text == "gower") return DistanceKind::kGower;
  throw DataError("unknown distance '" + std::string(text) + "'");
}

void SimilarityConfig::Validate() const {
  if (!(sigma >= 0.0)) throw DataError("sigma must be nonnegative");
  if (fade_bins < 1) throw DataError("fade bins must be at least 1");
}

FeatureSpace::FeatureSpace(const DataFrame& frame,
                           std::vector<std::string> vars)
    : frame_(&frame) {
  for (std::string& name : vars) {
    const auto index = frame.IndexOf(name);
    if (!index) throw DataError("unknown variable '" + name + "'");
    const Column& col = frame.column(*index);
    if (col.is_numeric()) {
      const NumericStats stats = ScalingStats::ComputeColumn(col);
      if (stats.constant()) {
        excluded_.push_back(std::move(name));
        continue;
      }
      sd_.push_back(stats.sd);
      range_.push_back(stats.range());
    } else {
      all_numeric_ = false;
      sd_.push_back(1.0);
      range_.push_back(1.0);
    }
    columns_.push_back(*index);
    kinds_.push_back(col.kind);
    vars_.push_back(std::move(name));
  }
}

std::vector<double> FeatureSpace::PointCoordinates(
    const SectionPoint& point) const {
  std::vector<double> out;
  out.reserve(vars_.size());
  for (const std::string& name : vars_) {
    if (auto it = point.conditioning.find(name);
        it != point.conditioning.end()) {
      out.push_back(it->second);
    } else if (auto jt = point.hidden.find(name); jt != point.hidden.end()) {
      out.push_back(jt->second);
    } else {
      throw DataError("section point has no value for '" + name + "'");
    }
  }
  return out;
}

std::vector<double> FeatureSpace::RowCoordinates(std::size_t row) const {
  std::vector<double> out;
  out.reserve(columns_.size());
  for (const std::size_t c : columns_) {
    out.push_back(frame_->column(c).values[row]);
  }
  return out;
}

double FeatureSpace::Distance(std::span<const double> u,
                              std::span<const double> v,
                              DistanceKind kind) const {
  double acc = 0.0;
  for (std::size_t j = 0; j < kinds_.size(); ++j) {
    if (kinds_[j] == ColumnKind::kCategorical) {
      if (u[j] != v[j]) {
        if (kind != DistanceKind::kGower) return kInf;
        acc += 1.0;
      }
      continue;
    }
    const double diff = std::abs(u[j] - v[j]);
    switch (kind) {
      case DistanceKind::kEuclidean: {
        const double z = diff / sd_[j];
        acc += z * z;
        break;
      }
      case DistanceKind::kMaxnorm:
        acc = std::max(acc, diff / sd_[j]);
        break;
      case DistanceKind::kGower:
        acc += diff / range_[j];
        break;
    }
  }
  return kind == DistanceKind::kEuclidean ? std::sqrt(acc) : acc;
}

double FeatureSpace::RowDistance(std::size_t a, std::size_t b,
                                 DistanceKind kind) const {
  double acc = 0.0;
  for (std::size_t j = 0; j < kinds_.size(); ++j) {
    const auto& values = frame_->column(columns_[j]).values;
    const double x = values[a];
    const double y = values[b];
    if (kinds_[j] == ColumnKind::kCategorical) {
      if (x != y) {
        if (kind != DistanceKind::kGower) return kInf;
        acc += 1.0;
      }
      continue;
    }
    const double diff = std::abs(x - y);
    switch (kind) {
      case DistanceKind::kEuclidean: {
        const double z = diff / sd_[j];
        acc += z * z;
        break;
      }
      case DistanceKind::kMaxnorm:
        acc = std::max(acc, diff / sd_[j]);
        break;
      case DistanceKind::kGower:
        acc += diff / range_[j];
        break;
    }
  }
  return kind == DistanceKind::kEuclidean ? std::sqrt(acc) : acc;
}

std::vector<double> FeatureSpace::DistancesToRows(std::span<const double> u,
                                                  DistanceKind kind) const {
  const std::size_t n = frame_->num_rows();
  std::vector<double> acc(n, 0.0);
  for (std::size_t j = 0; j < kinds_.size(); ++j) {
    const auto& values = frame_->column(columns_[j]).values;
    const double target = u[j];
    if (kinds_[j] == ColumnKind::kCategorical) {
      const double penalty = kind == DistanceKind::kGower ? 1.0 : kInf;
      for (std::size_t i = 0; i < n; ++i) {
        if (values[i] != target) acc[i] += penalty;
      }
      continue;
    }
    switch (kind) {
      case DistanceKind::kEuclidean: {
        const double inv = 1.0 / sd_[j];
        for (std::size_t i = 0; i < n; ++i) {
          const double z = (values[i] - target) * inv;
          acc[i] += z * z;
        }
        break;
      }
      case DistanceKind::kMaxnorm: {
        const double inv = 1.0 / sd_[j];
        for (std::size_t i = 0; i < n; ++i) {
          acc[i] = std::max(acc[i], std::abs(values[i] - target) * inv);
        }
        break;
      }
      case DistanceKind::kGower: {
        const double inv = 1.0 / range_[j];
        for (std::size_t i = 0; i < n; ++i) {
          acc[i] += std::abs(values[i] - target) * inv;
        }
        break;
      }
    }
  }
  if (kind == DistanceKind::kEuclidean) {
    for (double& d : acc) d = std::sqrt(d);
  }
  return acc;
}

double SimilarityScore(double distance, double sigma) {
  if (sigma == kShowAll) return 1.0;
  if (sigma <= 0.0) return distance == 0.0 ? 1.0 : 0.0;
  return std::max(0.0, 1.0 - distance / sigma);
}

std::vector<double> Similarity(std::span<const double> distances,
                               double sigma) {
  std::vector<double> out;
  out.reserve(distances.size());
  for (const double d : distances) out.push_back(SimilarityScore(d, sigma));
  return out;
}

FadeResult Fade(std::span<const double> scores, int bins) {
  if (bins < 1) throw DataError("fade bins must be at least 1");
  FadeResult out;
  const double k = static_cast<double>(bins);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double s = scores[i];
    if (!(s > 0.0)) continue;
    // Interval b covers ((b-1)/k, b/k].
    int level = static_cast<int>(std::ceil(s * k - 1e-12));
    level = std::clamp(level, 1, bins);
    out.visible.push_back(i);
    out.level.push_back(level);
    out.alpha.push_back(static_cast<double>(level) / k);
  }
  return out;
}

SimilarityResult ComputeSimilarity(const FeatureSpace& space,
                                   const SectionPoint& point,
                                   const SimilarityConfig& config) {
  config.Validate();
  const auto u = space.PointCoordinates(point);
  SimilarityResult result;
  result.scores =
      Similarity(space.DistancesToRows(u, config.distance), config.sigma);
  FadeResult fade = Fade(result.scores, config.fade_bins);
  result.visible = std::move(fade.visible);
  result.fade_level = std::move(fade.level);
  result.alpha = std::move(fade.alpha);
  return result;
}

}  // namespace slicevis
