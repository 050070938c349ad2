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

#include "slicevis/section.h"

#include <algorithm>
#include <cmath>
#include <future>
#include <map>
#include <numeric>
#include <tuple>

#include "slicevis/error.h"

namespace slicevis {
namespace {

using nlohmann::json;

std::vector<std::size_t> AxisIndices(const SectionGrid& grid, std::size_t row) {
  std::vector<std::size_t> index(grid.axes.size());
  for (std::size_t a = 0; a < grid.axes.size(); ++a) {
    const std::size_t len = grid.axes[a].values.size();
    index[a] = row % len;
    row /= len;
  }
  return index;
}

std::vector<int> BarKey(const SectionGrid& grid, std::size_t row, int bins) {
  const auto index = AxisIndices(grid, row);
  std::vector<int> key(index.size());
  for (std::size_t a = 0; a < index.size(); ++a) {
    const GridAxis& axis = grid.axes[a];
    if (axis.kind == ColumnKind::kCategorical) {
      key[a] = static_cast<int>(axis.values[index[a]]);
      continue;
    }
    // Position along the axis from the grid index, not the value, so points
    // sitting exactly on a bin edge are not misplaced by rounding.
    const double t = static_cast<double>(index[a]) /
                     static_cast<double>(axis.values.size() - 1);
    key[a] = std::min(bins - 1, static_cast<int>(std::floor(t * bins + 1e-9)));
  }
  return key;
}

std::vector<BarCell> Bars(const SectionGrid& grid, const Predictions& p,
                          int bins) {
  const std::size_t levels = p.levels.size();
  std::map<std::vector<int>, std::pair<std::vector<double>, std::size_t>> cells;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    auto& [sum, count] = cells[BarKey(grid, r, bins)];
    if (sum.empty()) sum.assign(levels, 0.0);
    const auto row = p.ProbabilityRow(r);
    for (std::size_t l = 0; l < levels; ++l) sum[l] += row[l];
    ++count;
  }
  std::vector<BarCell> bars;
  bars.reserve(cells.size());
  for (auto& [key, acc] : cells) {
    BarCell cell{key, std::move(acc.first)};
    for (double& v : cell.probabilities) v /= static_cast<double>(acc.second);
    bars.push_back(std::move(cell));
  }
  return bars;
}

SectionFit MakeFit(const ModelHandle& model, Predictions p, PlotType type,
                   const SectionGrid& grid, int bins) {
  SectionFit fit;
  fit.model = model.id;
  fit.kind = p.kind;
  fit.levels = p.levels;
  const std::size_t n = p.size();
  fit.values.resize(n);
  if (p.kind == PredictionKind::kProbMatrix && p.levels.size() == 2) {
    for (std::size_t i = 0; i < n; ++i) fit.values[i] = p.ProbabilityRow(i)[1];
  } else {
    for (std::size_t i = 0; i < n; ++i) fit.values[i] = p.AsNumeric(i);
  }
  if (IsBarPlot(type)) fit.bars = Bars(grid, p, bins);
  fit.probabilities = std::move(p.probabilities);
  return fit;
}

double Pearson(const Column& a, const Column& b,
               std::span<const std::size_t> rows) {
  const double n = static_cast<double>(rows.size());
  double ma = 0.0, mb = 0.0;
  for (const auto r : rows) {
    ma += a.values[r];
    mb += b.values[r];
  }
  ma /= n;
  mb /= n;
  double saa = 0.0, sbb = 0.0, sab = 0.0;
  for (const auto r : rows) {
    const double da = a.values[r] - ma;
    const double db = b.values[r] - mb;
    saa += da * da;
    sbb += db * db;
    sab += da * db;
  }
  if (!(saa > 0.0) || !(sbb > 0.0)) return 0.0;
  return std::min(1.0, std::abs(sab) / std::sqrt(saa * sbb));
}

double CorrelationRatio(const Column& x, const Column& g,
                        std::span<const std::size_t> rows) {
  const std::size_t k = g.levels.size();
  std::vector<double> sum(k, 0.0);
  std::vector<double> count(k, 0.0);
  double total = 0.0;
  for (const auto r : rows) {
    sum[g.code(r)] += x.values[r];
    count[g.code(r)] += 1.0;
    total += x.values[r];
  }
  const double mean = total / static_cast<double>(rows.size());
  double ss_total = 0.0;
  for (const auto r : rows) {
    const double d = x.values[r] - mean;
    ss_total += d * d;
  }
  if (!(ss_total > 0.0)) return 0.0;
  double ss_between = 0.0;
  for (std::size_t l = 0; l < k; ++l) {
    if (count[l] == 0.0) continue;
    const double d = sum[l] / count[l] - mean;
    ss_between += count[l] * d * d;
  }
  return std::sqrt(std::clamp(ss_between / ss_total, 0.0, 1.0));
}

std::vector<std::vector<int>> Crosstab(const Column& a, const Column& b,
                                       std::span<const std::size_t> rows) {
  std::vector<std::vector<int>> table(a.levels.size(),
                                      std::vector<int>(b.levels.size(), 0));
  for (const auto r : rows) ++table[a.code(r)][b.code(r)];
  return table;
}

double CramersV(const Column& a, const Column& b,
                std::span<const std::size_t> rows) {
  const auto table = Crosstab(a, b, rows);
  std::vector<double> ra(a.levels.size(), 0.0);
  std::vector<double> cb(b.levels.size(), 0.0);
  for (std::size_t i = 0; i < ra.size(); ++i) {
    for (std::size_t j = 0; j < cb.size(); ++j) {
      ra[i] += table[i][j];
      cb[j] += table[i][j];
    }
  }
  const auto nonzero = [](const std::vector<double>& v) {
    return static_cast<std::size_t>(
        std::count_if(v.begin(), v.end(), [](double x) { return x > 0.0; }));
  };
  const std::size_t k = std::min(nonzero(ra), nonzero(cb));
  if (k < 2) return 0.0;
  const double n = static_cast<double>(rows.size());
  double chi2 = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    for (std::size_t j = 0; j < cb.size(); ++j) {
      const double expected = ra[i] * cb[j] / n;
      if (expected <= 0.0) continue;
      const double d = table[i][j] - expected;
      chi2 += d * d / expected;
    }
  }
  return std::sqrt(std::clamp(chi2 / (n * static_cast<double>(k - 1)), 0.0, 1.0));
}

json PointMapToJson(const std::map<std::string, double>& values,
                    const DataFrame& frame) {
  json out = json::object();
  for (const auto& [name, value] : values) {
    out[name] = ValueToJson(frame.column(name), value);
  }
  return out;
}

}  // namespace

std::size_t SectionGrid::size() const {
  if (axes.empty()) return 0;
  std::size_t n = 1;
  for (const auto& axis : axes) n *= axis.values.size();
  return n;
}

double SectionGrid::value(std::size_t row, std::size_t axis) const {
  for (std::size_t a = 0; a < axis; ++a) row /= axes[a].values.size();
  return axes[axis].values[row % axes[axis].values.size()];
}

double SectionGrid::CellMeasure() const {
  double measure = 1.0;
  for (const auto& axis : axes) {
    if (axis.kind == ColumnKind::kNumeric) {
      measure *= (axis.values.back() - axis.values.front()) /
                 static_cast<double>(axis.values.size() - 1);
    }
  }
  return measure;
}

SectionGrid BuildGrid(const DataFrame& frame, std::span<const std::string> vars,
                      std::span<const int> resolution) {
  if (vars.empty() || vars.size() > 2) {
    throw DataError("a section needs one or two variables");
  }
  if (!resolution.empty() && resolution.size() != vars.size()) {
    throw DataError("one resolution per section variable is required");
  }
  SectionGrid grid;
  for (std::size_t a = 0; a < vars.size(); ++a) {
    const Column& col = frame.column(vars[a]);
    GridAxis axis{col.name, col.kind, {}, col.levels};
    if (col.is_numeric()) {
      const int res = resolution.empty()
                          ? (vars.size() == 1 ? kDefaultResolution1d
                                              : kDefaultResolution2d)
                          : resolution[a];
      if (res < 2) {
        throw DataError("grid resolution for '" + col.name +
                        "' must be at least 2");
      }
      const auto [lo, hi] =
          std::minmax_element(col.values.begin(), col.values.end());
      if (!(*hi > *lo)) {
        throw DataError("section variable '" + col.name + "' has zero range");
      }
      axis.values.resize(res);
      for (int i = 0; i < res; ++i) {
        axis.values[i] = *lo + (*hi - *lo) * i / (res - 1);
      }
      axis.values.back() = *hi;
    } else {
      axis.values.resize(col.levels.size());
      std::iota(axis.values.begin(), axis.values.end(), 0.0);
    }
    grid.axes.push_back(std::move(axis));
  }
  return grid;
}

DataFrame GridFrame(const DataFrame& frame, const SectionGrid& grid,
                    const SectionPoint& point) {
  const std::size_t n = grid.size();
  std::vector<Column> columns;
  for (std::size_t a = 0; a < grid.axes.size(); ++a) {
    const GridAxis& axis = grid.axes[a];
    Column col{axis.name, axis.kind, std::vector<double>(n), axis.levels};
    for (std::size_t r = 0; r < n; ++r) col.values[r] = grid.value(r, a);
    columns.push_back(std::move(col));
  }
  for (const auto* values : {&point.conditioning, &point.hidden}) {
    for (const auto& [name, value] : *values) {
      const Column& source = frame.column(name);
      columns.push_back(
          {name, source.kind, std::vector<double>(n, value), source.levels});
    }
  }
  return DataFrame(std::move(columns));
}

std::vector<Predictions> EvaluateSection(const DataFrame& frame,
                                         std::span<const ModelHandle> models,
                                         const SectionGrid& grid,
                                         const SectionPoint& point) {
  const DataFrame rows = GridFrame(frame, grid, point);
  const double cell = grid.CellMeasure();
  const auto evaluate = [&](const ModelHandle& model) {
    Predictions p = model.Predict(rows);
    if (p.kind == PredictionKind::kDensity) {
      p.values = RenormalizeDensity(p.values, cell);
    }
    return p;
  };
  std::vector<Predictions> out;
  out.reserve(models.size());
  if (models.size() < 2) {
    for (const auto& model : models) out.push_back(evaluate(model));
    return out;
  }
  std::vector<std::future<Predictions>> pending;
  for (const auto& model : models) {
    pending.push_back(std::async(std::launch::async, evaluate, std::cref(model)));
  }
  for (auto& f : pending) out.push_back(f.get());
  return out;
}

std::string_view PlotTypeName(PlotType type) {
  switch (type) {
    case PlotType::kA: return "a";
    case PlotType::kB: return "b";
    case PlotType::kBBars: return "b_bars";
    case PlotType::kC: return "c";
    case PlotType::kD: return "d";
    case PlotType::kE: return "e";
    case PlotType::kF: return "f";
  }
  return "a";
}

PlotType ClassifyPlot(std::span<const ColumnKind> section_kinds,
                      PredictionKind kind, std::size_t num_levels) {
  const bool prob = kind == PredictionKind::kProbMatrix;
  const bool multi = prob && num_levels > 2;
  if (section_kinds.size() == 1) {
    if (multi) return PlotType::kBBars;
    return prob ? PlotType::kB : PlotType::kA;
  }
  if (section_kinds.size() != 2) {
    throw DataError("a section needs one or two variables");
  }
  const bool any_categorical =
      std::ranges::any_of(section_kinds, [](ColumnKind k) {
        return k == ColumnKind::kCategorical;
      });
  if (any_categorical) return multi ? PlotType::kD : PlotType::kC;
  return multi ? PlotType::kF : PlotType::kE;
}

bool IsBarPlot(PlotType type) {
  return type == PlotType::kBBars || type == PlotType::kD ||
         type == PlotType::kF;
}

SectionPayload AssembleSection(const DataFrame& frame,
                               std::span<const ModelHandle> models,
                               const Roles& roles, const SectionPoint& point,
                               const SimilarityConfig& config,
                               const SectionOptions& options) {
  roles.Validate(frame);
  config.Validate();
  ValidatePoint(frame, roles, point);
  if (options.bar_bins < 1) throw DataError("bar bins must be at least 1");

  SectionPayload payload;
  payload.grid = BuildGrid(frame, roles.section, options.resolution);
  payload.point = point;
  payload.similarity = config;
  payload.response = roles.response;
  payload.color_var = options.color_var;

  std::vector<ColumnKind> kinds;
  for (const auto& axis : payload.grid.axes) kinds.push_back(axis.kind);
  auto predictions = EvaluateSection(frame, models, payload.grid, point);
  payload.plot_type = ClassifyPlot(kinds, PredictionKind::kNumeric, 0);
  for (std::size_t m = 0; m < predictions.size(); ++m) {
    const PlotType type = ClassifyPlot(kinds, predictions[m].kind,
                                       predictions[m].levels.size());
    if (m == 0) {
      payload.plot_type = type;
    } else if (type != payload.plot_type) {
      throw ModelError("models '" + models[0].id + "' and '" + models[m].id +
                       "' need different section plot types");
    }
  }
  for (std::size_t m = 0; m < predictions.size(); ++m) {
    payload.fits.push_back(MakeFit(models[m], std::move(predictions[m]),
                                   payload.plot_type, payload.grid,
                                   options.bar_bins));
  }
  const bool bars = IsBarPlot(payload.plot_type);
  if (bars) {
    for (const auto& axis : payload.grid.axes) {
      std::vector<double> edges;
      if (axis.kind == ColumnKind::kNumeric) {
        const double lo = axis.values.front();
        const double hi = axis.values.back();
        for (int b = 0; b <= options.bar_bins; ++b) {
          edges.push_back(lo + (hi - lo) * b / options.bar_bins);
        }
        edges.back() = hi;
      }
      payload.bin_edges.push_back(std::move(edges));
    }
  }

  const FeatureSpace space(frame, roles.conditioning);
  payload.excluded = space.excluded();
  const SimilarityResult sim = ComputeSimilarity(space, point, config);
  payload.visible_count = sim.visible.size();
  for (const std::size_t i : sim.visible) {
    payload.total_similarity += sim.scores[i];
  }
  if (bars) return payload;

  std::vector<const Column*> section_cols;
  for (const auto& name : roles.section) {
    section_cols.push_back(&frame.column(name));
  }
  const Column* response =
      roles.response ? &frame.column(*roles.response) : nullptr;
  const Column* color =
      options.color_var ? &frame.column(*options.color_var) : nullptr;
  const bool image = payload.plot_type == PlotType::kE;
  payload.points.reserve(sim.visible.size());
  for (std::size_t k = 0; k < sim.visible.size(); ++k) {
    const std::size_t row = sim.visible[k];
    VisiblePoint vp;
    vp.row = row;
    for (const Column* col : section_cols) vp.section.push_back(col->values[row]);
    if (response) vp.response = response->values[row];
    if (color) vp.color = color->values[row];
    vp.similarity = sim.scores[row];
    vp.fade = sim.fade_level[k];
    if (image) {
      vp.alpha = 1.0;
      vp.shrink = vp.similarity;
    } else {
      vp.alpha = sim.alpha[k];
    }
    payload.points.push_back(std::move(vp));
  }
  return payload;
}

json ValueToJson(const Column& column, double value) {
  if (column.is_numeric()) return value;
  return column.levels.at(static_cast<std::size_t>(value));
}

double ValueFromJson(const Column& column, const json& value) {
  if (column.is_numeric()) {
    if (!value.is_number()) {
      throw DataError("'" + column.name + "' expects a number");
    }
    const double v = value.get<double>();
    if (!std::isfinite(v)) {
      throw DataError("'" + column.name + "' expects a finite number");
    }
    return v;
  }
  if (value.is_string()) {
    const auto code = column.LevelCode(value.get<std::string>());
    if (!code) {
      throw DataError("unknown level '" + value.get<std::string>() +
                      "' for '" + column.name + "'");
    }
    return *code;
  }
  if (value.is_number_integer()) {
    const auto code = value.get<long long>();
    if (code < 0 || code >= static_cast<long long>(column.levels.size())) {
      throw DataError("level code out of range for '" + column.name + "'");
    }
    return static_cast<double>(code);
  }
  throw DataError("'" + column.name + "' expects a level label");
}

json PointToJson(const SectionPoint& point, const DataFrame& frame) {
  return {{"conditioning", PointMapToJson(point.conditioning, frame)},
          {"hidden", PointMapToJson(point.hidden, frame)}};
}

SectionPoint PointFromJson(const json& j, const DataFrame& frame,
                           const Roles& roles) {
  if (!j.is_object()) throw DataError("a section point must be an object");
  SectionPoint point;
  for (const auto& [key, target] :
       {std::pair{"conditioning", &point.conditioning},
        std::pair{"hidden", &point.hidden}}) {
    if (!j.contains(key)) continue;
    if (!j[key].is_object()) {
      throw DataError(std::string("'") + key + "' must be an object");
    }
    for (const auto& [name, value] : j[key].items()) {
      (*target)[name] = ValueFromJson(frame.column(name), value);
    }
  }
  ValidatePoint(frame, roles, point);
  return point;
}

json SectionPayloadToJson(const SectionPayload& payload,
                          const DataFrame& frame) {
  json axes = json::array();
  json section_vars = json::array();
  for (const auto& axis : payload.grid.axes) {
    json a = {{"name", axis.name}, {"kind", KindName(axis.kind)}};
    if (axis.kind == ColumnKind::kNumeric) {
      a["values"] = axis.values;
    } else {
      a["levels"] = axis.levels;
    }
    axes.push_back(std::move(a));
    section_vars.push_back(axis.name);
  }

  json fits = json::array();
  for (const auto& fit : payload.fits) {
    json f = {{"model", fit.model},
              {"kind", PredictionKindName(fit.kind)},
              {"values", fit.values}};
    if (!fit.levels.empty()) f["levels"] = fit.levels;
    if (fit.kind == PredictionKind::kProbMatrix) {
      json rows = json::array();
      const std::size_t k = fit.levels.size();
      for (std::size_t i = 0; i < fit.values.size(); ++i) {
        rows.push_back(std::vector<double>(
            fit.probabilities.begin() + static_cast<std::ptrdiff_t>(i * k),
            fit.probabilities.begin() + static_cast<std::ptrdiff_t>((i + 1) * k)));
      }
      f["probabilities"] = std::move(rows);
    }
    if (!fit.bars.empty()) {
      json bars = json::array();
      for (const auto& cell : fit.bars) {
        bars.push_back({{"index", cell.index},
                        {"probabilities", cell.probabilities}});
      }
      f["bars"] = std::move(bars);
    }
    fits.push_back(std::move(f));
  }

  const Column* response =
      payload.response ? &frame.column(*payload.response) : nullptr;
  const Column* color =
      payload.color_var ? &frame.column(*payload.color_var) : nullptr;
  json points = json::array();
  for (const auto& vp : payload.points) {
    json section = json::array();
    for (std::size_t a = 0; a < vp.section.size(); ++a) {
      section.push_back(
          ValueToJson(frame.column(payload.grid.axes[a].name), vp.section[a]));
    }
    json p = {{"row", vp.row},
              {"section", std::move(section)},
              {"similarity", vp.similarity},
              {"fade", vp.fade},
              {"alpha", vp.alpha},
              {"shrink", vp.shrink}};
    if (vp.response) p["response"] = ValueToJson(*response, *vp.response);
    if (vp.color) p["color"] = ValueToJson(*color, *vp.color);
    points.push_back(std::move(p));
  }

  json out = {
      {"schema", "v1"},
      {"plotType", PlotTypeName(payload.plot_type)},
      {"sectionVars", std::move(section_vars)},
      {"response", payload.response ? json(*payload.response) : json()},
      {"colorVar", payload.color_var ? json(*payload.color_var) : json()},
      {"grid", {{"size", payload.grid.size()}, {"axes", std::move(axes)}}},
      {"fits", std::move(fits)},
      {"points", std::move(points)},
      {"visibleCount", payload.visible_count},
      {"totalSimilarity", payload.total_similarity},
      {"emptySlice", payload.visible_count == 0},
      {"sectionPoint", PointToJson(payload.point, frame)},
      {"similarity",
       {{"distance", DistanceName(payload.similarity.distance)},
        {"sigma", payload.similarity.show_all()
                      ? json("inf")
                      : json(payload.similarity.sigma)},
        {"fadeBins", payload.similarity.fade_bins}}},
      {"excluded", payload.excluded}};
  if (!payload.bin_edges.empty()) {
    json edges = json::object();
    for (std::size_t a = 0; a < payload.bin_edges.size(); ++a) {
      if (!payload.bin_edges[a].empty()) {
        edges[payload.grid.axes[a].name] = payload.bin_edges[a];
      }
    }
    out["binEdges"] = std::move(edges);
  }
  return out;
}

double Association(const Column& a, const Column& b,
                   std::span<const std::size_t> rows) {
  if (rows.size() < 2) return 0.0;
  if (a.is_numeric() && b.is_numeric()) return Pearson(a, b, rows);
  if (a.is_numeric()) return CorrelationRatio(a, b, rows);
  if (b.is_numeric()) return CorrelationRatio(b, a, rows);
  return CramersV(a, b, rows);
}

std::string_view PanelTypeName(PanelType type) {
  switch (type) {
    case PanelType::kScatter: return "scatter";
    case PanelType::kBoxplot: return "boxplot";
    case PanelType::kMosaic: return "mosaic";
    case PanelType::kHistogram: return "histogram";
    case PanelType::kBarplot: return "barplot";
  }
  return "scatter";
}

ConditionPayload BuildConditionPayload(const DataFrame& frame,
                                       const Roles& roles,
                                       const SectionPoint& point,
                                       const ConditionOptions& options) {
  ValidatePoint(frame, roles, point);
  ConditionPayload payload;
  payload.point = point;
  payload.seed = options.seed;
  payload.total_rows = frame.num_rows();
  payload.vars = roles.conditioning;
  payload.rows = SampleRows(frame.num_rows(), options.cap, options.seed);

  const auto& vars = roles.conditioning;
  const std::size_t p = vars.size();
  std::vector<const Column*> cols;
  for (const auto& name : vars) cols.push_back(&frame.column(name));

  struct Candidate {
    double association;
    std::size_t i, j;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = i + 1; j < p; ++j) {
      candidates.push_back({Association(*cols[i], *cols[j], payload.rows), i, j});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& x, const Candidate& y) {
                     return x.association > y.association;
                   });
  std::vector<bool> used(p, false);
  const auto marker = [&](std::size_t v) {
    return point.conditioning.at(vars[v]);
  };
  for (const auto& c : candidates) {
    if (used[c.i] || used[c.j]) continue;
    used[c.i] = used[c.j] = true;
    std::size_t first = c.i, second = c.j;
    ConditionPanel panel;
    panel.association = c.association;
    const bool ni = cols[c.i]->is_numeric();
    const bool nj = cols[c.j]->is_numeric();
    if (ni && nj) {
      panel.type = PanelType::kScatter;
    } else if (!ni && !nj) {
      panel.type = PanelType::kMosaic;
      panel.counts = Crosstab(*cols[c.i], *cols[c.j], payload.rows);
    } else {
      panel.type = PanelType::kBoxplot;
      if (!ni) std::swap(first, second);
    }
    panel.vars = {vars[first], vars[second]};
    panel.marker = {marker(first), marker(second)};
    payload.panels.push_back(std::move(panel));
  }
  for (std::size_t v = 0; v < p; ++v) {
    if (used[v]) continue;
    ConditionPanel panel;
    panel.type =
        cols[v]->is_numeric() ? PanelType::kHistogram : PanelType::kBarplot;
    panel.vars = {vars[v]};
    panel.marker = {marker(v)};
    payload.panels.push_back(std::move(panel));
  }

  if (options.similarity) {
    const FeatureSpace space(frame, vars);
    const SimilarityResult sim =
        ComputeSimilarity(space, point, *options.similarity);
    payload.in_slice.reserve(payload.rows.size());
    for (const auto r : payload.rows) {
      payload.in_slice.push_back(sim.scores[r] > 0.0 ? 1 : 0);
    }
  }
  return payload;
}

json ConditionPayloadToJson(const ConditionPayload& payload,
                            const DataFrame& frame) {
  json panels = json::array();
  for (const auto& panel : payload.panels) {
    json marker = json::array();
    for (std::size_t v = 0; v < panel.vars.size(); ++v) {
      marker.push_back(ValueToJson(frame.column(panel.vars[v]), panel.marker[v]));
    }
    json p = {{"vars", panel.vars},
              {"type", PanelTypeName(panel.type)},
              {"association", panel.association},
              {"marker", std::move(marker)}};
    if (!panel.counts.empty()) p["counts"] = panel.counts;
    panels.push_back(std::move(p));
  }
  json columns = json::object();
  json highlight = json::array();
  for (const auto& name : payload.vars) {
    const Column& col = frame.column(name);
    json values = json::array();
    for (const auto r : payload.rows) {
      values.push_back(ValueToJson(col, col.values[r]));
    }
    columns[name] = std::move(values);
    highlight.push_back(ValueToJson(col, payload.point.conditioning.at(name)));
  }
  json out = {{"schema", "v1"},
              {"panels", std::move(panels)},
              {"rows", payload.rows},
              {"columns", std::move(columns)},
              {"parallel",
               {{"vars", payload.vars}, {"highlight", std::move(highlight)}}},
              {"sectionPoint", PointToJson(payload.point, frame)},
              {"sampleSeed", payload.seed},
              {"totalRows", payload.total_rows},
              {"sampled", payload.rows.size() < payload.total_rows}};
  if (!payload.in_slice.empty()) {
    json flags = json::array();
    for (const char f : payload.in_slice) flags.push_back(f != 0);
    out["inSlice"] = std::move(flags);
  }
  return out;
}

SectionPoint SnapPoint(const DataFrame& frame, const Roles& roles,
                       const SectionPoint& current,
                       std::span<const std::string> panel_vars,
                       std::span<const double> coords, ClickKind click) {
  if (panel_vars.empty() || panel_vars.size() > 2 ||
      panel_vars.size() != coords.size()) {
    throw DataError("a click names one or two panel variables and their "
                    "coordinates");
  }
  for (const auto& name : panel_vars) {
    if (!current.conditioning.contains(name)) {
      throw DataError("'" + name + "' is not a conditioning variable");
    }
  }
  SectionPoint next = current;
  if (click == ClickKind::kSingle) {
    for (std::size_t v = 0; v < panel_vars.size(); ++v) {
      next.conditioning[panel_vars[v]] = coords[v];
    }
    ValidatePoint(frame, roles, next);
    return next;
  }

  std::vector<const Column*> cols;
  std::vector<double> scale;
  for (const auto& name : panel_vars) {
    const Column& col = frame.column(name);
    double s = 1.0;
    if (col.is_numeric()) {
      const double sd = ScalingStats::ComputeColumn(col).sd;
      if (sd > 0.0) s = sd;
    }
    cols.push_back(&col);
    scale.push_back(s);
  }
  std::vector<double> dist(frame.num_rows(), 0.0);
  for (std::size_t v = 0; v < cols.size(); ++v) {
    for (std::size_t r = 0; r < dist.size(); ++r) {
      const double z = (cols[v]->values[r] - coords[v]) / scale[v];
      dist[r] += z * z;
    }
  }
  const double best = *std::min_element(dist.begin(), dist.end());
  std::vector<std::size_t> nearest;
  for (std::size_t r = 0; r < dist.size(); ++r) {
    if (dist[r] <= best * (1.0 + 2e-9)) nearest.push_back(r);
  }
  const std::size_t row = nearest.size() == 1
                              ? nearest.front()
                              : MedoidOfRows(frame, roles.conditioning, nearest);
  for (auto& [name, value] : next.conditioning) {
    value = frame.column(name).values[row];
  }
  return next;
}

}  // namespace slicevis
