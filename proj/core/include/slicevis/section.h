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

// Section plots: the grid over the section variables, fits evaluated on it at
// the current section point, the observations near the slice, and the
// condition-selector panels used to steer the point.

#ifndef SLICEVIS_SECTION_H_
#define SLICEVIS_SECTION_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "slicevis/frame.h"
#include "slicevis/metric.h"
#include "slicevis/model.h"

namespace slicevis {

inline constexpr int kDefaultResolution1d = 101;
inline constexpr int kDefaultResolution2d = 51;

struct GridAxis {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  // Numeric grid values, or level codes for a categorical axis.
  std::vector<double> values;
  std::vector<std::string> levels;
};

struct SectionGrid {
  std::vector<GridAxis> axes;

  std::size_t size() const;
  // Value on `axis` of grid row `row`; the first axis varies fastest.
  double value(std::size_t row, std::size_t axis) const;
  // Product of the numeric axis spacings (1 for an all-categorical grid).
  double CellMeasure() const;
};

// Numeric axes get `resolution` equally spaced values over [min, max]
// (default 101 for one axis, 51 per axis for two); categorical axes get their
// levels. Throws DataError for |vars| outside 1..2, a resolution below 2, or
// a numeric variable with zero range.
SectionGrid BuildGrid(const DataFrame& frame, std::span<const std::string> vars,
                      std::span<const int> resolution = {});

// Grid rows completed with the point's conditioning and hidden coordinates.
DataFrame GridFrame(const DataFrame& frame, const SectionGrid& grid,
                    const SectionPoint& point);

// One prediction set per model, aligned with the grid rows. Densities are
// renormalized to integrate to 1 over the grid.
std::vector<Predictions> EvaluateSection(const DataFrame& frame,
                                         std::span<const ModelHandle> models,
                                         const SectionGrid& grid,
                                         const SectionPoint& point);

// Section plot layouts:
//   a      one numeric section var, numeric-like fit (curve)
//   b      one section var, binary class probability (curve)
//   b_bars one section var, class probabilities for 3+ levels (bar array)
//   c      a categorical and another section var, numeric-like fit
//          (one curve per level)
//   d      a categorical and another section var, class probabilities for
//          3+ levels (bar array)
//   e      two numeric section vars, numeric-like fit (image)
//   f      two numeric section vars, class probabilities for 3+ levels
//          (bar array)
// Class labels and cluster ids are drawn on a numeric axis by level index; a
// binary probability matrix is drawn as the probability of the second level.
enum class PlotType { kA, kB, kBBars, kC, kD, kE, kF };

std::string_view PlotTypeName(PlotType type);
PlotType ClassifyPlot(std::span<const ColumnKind> section_kinds,
                      PredictionKind kind, std::size_t num_levels);
bool IsBarPlot(PlotType type);

struct BarCell {
  // Per axis: level code, or bin index on a numeric axis.
  std::vector<int> index;
  std::vector<double> probabilities;  // mean over the grid rows in the cell
};

struct SectionFit {
  std::string model;
  PredictionKind kind = PredictionKind::kNumeric;
  std::vector<double> values;         // per grid row, as drawn
  std::vector<double> probabilities;  // probMatrix: grid rows x levels
  std::vector<std::string> levels;
  std::vector<BarCell> bars;          // bar-array plots only
};

struct VisiblePoint {
  std::size_t row = 0;
  std::vector<double> section;  // section var values (codes if categorical)
  std::optional<double> response;
  std::optional<double> color;
  double similarity = 0.0;
  int fade = 0;
  double alpha = 0.0;
  double shrink = 1.0;
};

struct SectionOptions {
  std::vector<int> resolution;
  int bar_bins = 10;
  std::optional<std::string> color_var;
};

struct SectionPayload {
  PlotType plot_type = PlotType::kA;
  SectionGrid grid;
  std::vector<SectionFit> fits;
  // Rows with similarity > 0, in row order. Left empty on bar-array plots,
  // where `visible_count` still reports the slice occupancy.
  std::vector<VisiblePoint> points;
  std::size_t visible_count = 0;
  double total_similarity = 0.0;
  SectionPoint point;
  SimilarityConfig similarity;
  std::optional<std::string> response;
  std::optional<std::string> color_var;
  std::vector<std::vector<double>> bin_edges;  // per axis, bar plots only
  std::vector<std::string> excluded;           // constant conditioning vars
};

// Throws ModelError when the models would need different plot layouts.
SectionPayload AssembleSection(const DataFrame& frame,
                               std::span<const ModelHandle> models,
                               const Roles& roles, const SectionPoint& point,
                               const SimilarityConfig& config,
                               const SectionOptions& options = {});

nlohmann::json SectionPayloadToJson(const SectionPayload& payload,
                                    const DataFrame& frame);
// A cell as JSON: a number, or the level label for a categorical column.
nlohmann::json ValueToJson(const Column& column, double value);
// Accepts numbers for numeric columns and labels or integer codes for
// categorical ones. Throws DataError otherwise.
double ValueFromJson(const Column& column, const nlohmann::json& value);

nlohmann::json PointToJson(const SectionPoint& point, const DataFrame& frame);
// Inverse of PointToJson. Accepts numbers for numeric vars and labels (or
// integer codes) for categorical ones.
SectionPoint PointFromJson(const nlohmann::json& j, const DataFrame& frame,
                           const Roles& roles);

// |Pearson r| for two numeric columns, the correlation ratio for a numeric
// and a categorical one, Cramer's V for two categoricals; restricted to
// `rows`. Degenerate inputs give 0.
double Association(const Column& a, const Column& b,
                   std::span<const std::size_t> rows);

enum class PanelType { kScatter, kBoxplot, kMosaic, kHistogram, kBarplot };
std::string_view PanelTypeName(PanelType type);

struct ConditionPanel {
  std::vector<std::string> vars;  // numeric var first in a boxplot panel
  PanelType type = PanelType::kScatter;
  double association = 0.0;
  std::vector<double> marker;  // section point coordinates
  std::vector<std::vector<int>> counts;  // mosaic panels
};

struct ConditionOptions {
  std::size_t cap = 1000;
  std::uint64_t seed = 0;
  // When set, rows inside the current slice are flagged.
  std::optional<SimilarityConfig> similarity;
};

struct ConditionPayload {
  std::vector<ConditionPanel> panels;
  std::vector<std::size_t> rows;  // capped sample, sorted
  std::vector<std::string> vars;  // conditioning vars, parallel-axis order
  std::vector<char> in_slice;     // per sampled row, when requested
  SectionPoint point;
  std::uint64_t seed = 0;
  std::size_t total_rows = 0;
};

// Pairs the conditioning variables greedily by descending association into
// ceil(p/2) panels; an odd variable out gets a one-variable panel last.
ConditionPayload BuildConditionPayload(const DataFrame& frame,
                                       const Roles& roles,
                                       const SectionPoint& point,
                                       const ConditionOptions& options = {});

nlohmann::json ConditionPayloadToJson(const ConditionPayload& payload,
                                      const DataFrame& frame);

enum class ClickKind { kSingle, kDouble };

// Single click: only the panel vars take the clicked coordinates. Double
// click: the rows nearest to the click in the panel's standardized space
// (categorical vars compare by level code) are found, and the point moves to
// the conditioning coordinates of their medoid. Hidden coordinates never
// change.
SectionPoint SnapPoint(const DataFrame& frame, const Roles& roles,
                       const SectionPoint& current,
                       std::span<const std::string> panel_vars,
                       std::span<const double> coords, ClickKind click);

}  // namespace slicevis

#endif  // SLICEVIS_SECTION_H_
