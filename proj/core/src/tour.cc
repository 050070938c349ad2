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

#include "slicevis/tour.h"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <set>
#include <thread>

#include "slicevis/cluster.h"
#include "slicevis/error.h"
#include "slicevis/section.h"

namespace slicevis {
namespace {

using nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

SectionPoint PointAtRow(const DataFrame& frame, const SectionPoint& base,
                        std::size_t row) {
  SectionPoint p = base;
  for (auto& [name, value] : p.conditioning) {
    value = frame.column(name).values[row];
  }
  return p;
}

// Indices sorted by the key (descending), ties to the lower index, cut to l.
template <typename Key>
std::vector<std::size_t> TopRows(std::vector<std::size_t> rows,
                                 const std::vector<Key>& key, std::size_t l) {
  std::stable_sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
    return key[a] > key[b];
  });
  if (rows.size() > l) rows.resize(l);
  return rows;
}

bool IsNumericKind(PredictionKind k) {
  return k == PredictionKind::kNumeric || k == PredictionKind::kDensity;
}

bool IsClassKind(PredictionKind k) {
  return k == PredictionKind::kClass || k == PredictionKind::kProbMatrix;
}

std::vector<std::size_t> TwoOpt(std::span<const double> d, std::size_t n,
                                std::vector<std::size_t> path) {
  const auto D = [&](std::size_t a, std::size_t b) { return d[a * n + b]; };
  bool improved = true;
  while (improved) {
    improved = false;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        double delta = 0.0;
        if (i > 0) delta += D(path[i - 1], path[j]) - D(path[i - 1], path[i]);
        if (j + 1 < n) delta += D(path[i], path[j + 1]) - D(path[j], path[j + 1]);
        if (delta < -1e-12) {
          std::reverse(path.begin() + static_cast<std::ptrdiff_t>(i),
                       path.begin() + static_cast<std::ptrdiff_t>(j) + 1);
          improved = true;
        }
      }
    }
  }
  return path;
}

std::vector<SectionPoint> KMeansPoints(const DataFrame& frame,
                                       const Roles& roles,
                                       const SectionPoint& base,
                                       const TourRequest& request) {
  const OneHotEncoder encoder(frame, roles.conditioning);
  const PointMatrix points = encoder.EncodeAll(frame);
  KMeansOptions options;
  options.seed = request.seed;
  options.stop = request.stop;
  const KMeansResult fit = KMeans(points, request.length, options);
  const std::size_t k = fit.centers.rows;

  std::vector<SectionPoint> out(k, base);
  for (std::size_t v = 0; v < encoder.vars().size(); ++v) {
    const std::string& name = encoder.vars()[v];
    if (encoder.is_numeric(v)) {
      for (std::size_t c = 0; c < k; ++c) {
        out[c].conditioning[name] = encoder.DecodeNumeric(v, fit.centers.row(c));
      }
      continue;
    }
    const Column& col = frame.column(name);
    std::vector<std::vector<std::size_t>> counts(
        k, std::vector<std::size_t>(col.levels.size(), 0));
    for (std::size_t r = 0; r < frame.num_rows(); ++r) {
      ++counts[fit.assignment[r]][col.code(r)];
    }
    for (std::size_t c = 0; c < k; ++c) {
      const auto mode = std::max_element(counts[c].begin(), counts[c].end());
      out[c].conditioning[name] =
          static_cast<double>(mode - counts[c].begin());
    }
  }
  return out;
}

std::vector<std::size_t> KmedRows(const DataFrame& frame, const Roles& roles,
                                  const TourRequest& request) {
  const std::size_t n = frame.num_rows();
  if (request.length > std::min(n, request.cap)) {
    throw DataError("kmed tour length exceeds the number of usable rows");
  }
  std::vector<std::size_t> rows;
  if (n > request.cap) {
    rows = SampleRows(n, request.cap, request.seed);
  } else {
    rows.resize(n);
    std::iota(rows.begin(), rows.end(), 0);
  }
  const FeatureSpace space(frame, roles.conditioning);
  const CondensedDistances d =
      PairwiseDistances(space, rows, space.clustering_distance());
  PamOptions options;
  options.stop = request.stop;
  options.progress = request.progress;
  const PamResult pam = Pam(d, request.length, options);
  std::vector<std::size_t> out;
  for (const auto m : pam.medoids) out.push_back(rows[m]);
  return out;
}

std::vector<SectionPoint> AlongVarPoints(const DataFrame& frame,
                                         const Roles& roles,
                                         const SectionPoint& base,
                                         const TourRequest& request) {
  if (!request.var) throw DataError("an alongVar tour needs a variable");
  const std::string& name = *request.var;
  if (std::find(roles.conditioning.begin(), roles.conditioning.end(), name) ==
      roles.conditioning.end()) {
    throw DataError("'" + name + "' is not a conditioning variable");
  }
  const Column& col = frame.column(name);
  std::vector<double> values;
  if (col.is_numeric()) {
    if (request.length < 2) {
      throw DataError("an alongVar tour over a numeric variable needs at "
                      "least two steps");
    }
    const auto [lo, hi] = std::minmax_element(col.values.begin(), col.values.end());
    const std::size_t l = request.length;
    for (std::size_t i = 0; i < l; ++i) {
      values.push_back(*lo + (*hi - *lo) * static_cast<double>(i) /
                                 static_cast<double>(l - 1));
    }
    values.back() = *hi;
  } else {
    for (std::size_t c = 0; c < col.levels.size(); ++c) {
      values.push_back(static_cast<double>(c));
    }
  }
  std::vector<SectionPoint> out;
  for (const double v : values) {
    SectionPoint p = base;
    p.conditioning[name] = v;
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<Predictions> PredictAll(const DataFrame& frame,
                                    std::span<const ModelHandle> models) {
  std::vector<Predictions> out;
  for (const auto& m : models) out.push_back(m.Predict(frame));
  return out;
}

const Column& ResponseColumn(const DataFrame& frame, const Roles& roles) {
  if (!roles.response) throw DataError("this tour needs a response variable");
  return frame.column(*roles.response);
}

}  // namespace

std::string_view TourKindName(TourKind kind) {
  switch (kind) {
    case TourKind::kRandom: return "random";
    case TourKind::kKmeans: return "kmeans";
    case TourKind::kKmed: return "kmed";
    case TourKind::kLof: return "lof";
    case TourKind::kDiffits: return "diffits";
    case TourKind::kHiResponse: return "hiResponse";
    case TourKind::kLoResponse: return "loResponse";
    case TourKind::kAlongVar: return "alongVar";
  }
  return "random";
}

TourKind ParseTourKind(std::string_view text) {
  for (const auto kind :
       {TourKind::kRandom, TourKind::kKmeans, TourKind::kKmed, TourKind::kLof,
        TourKind::kDiffits, TourKind::kHiResponse, TourKind::kLoResponse,
        TourKind::kAlongVar}) {
    if (text == TourKindName(kind)) return kind;
  }
  throw DataError("unknown tour kind '" + std::string(text) + "'");
}

std::vector<std::size_t> SelectLackOfFit(
    const Column& response, std::span<const Predictions> predictions,
    std::size_t l) {
  if (predictions.empty()) throw ModelError("lack of fit needs a model");
  const std::size_t n = response.values.size();
  std::vector<std::size_t> candidates;
  std::vector<double> score(n, 0.0);
  if (response.is_numeric()) {
    for (const auto& p : predictions) {
      if (p.kind != PredictionKind::kNumeric) {
        throw ModelError("lack of fit on a numeric response needs numeric "
                         "predictions");
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& p : predictions) {
        score[i] = std::max(score[i], std::abs(response.values[i] - p.values[i]));
      }
      if (score[i] > 0.0) candidates.push_back(i);
    }
    return TopRows(std::move(candidates), score, l);
  }
  for (const auto& p : predictions) {
    if (!IsClassKind(p.kind) || p.levels != response.levels) {
      throw ModelError("lack of fit on a categorical response needs class "
                       "predictions over the response levels");
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const int truth = response.code(i);
    bool wrong = false;
    for (const auto& p : predictions) {
      if (p.labels[i] != truth) wrong = true;
      if (p.kind == PredictionKind::kProbMatrix) {
        score[i] = std::max(score[i], 1.0 - p.ProbabilityRow(i)[truth]);
      }
    }
    if (wrong) candidates.push_back(i);
  }
  return TopRows(std::move(candidates), score, l);
}

std::vector<std::size_t> SelectDiffits(std::span<const Predictions> predictions,
                                       std::size_t l) {
  if (predictions.size() < 2) {
    throw ModelError("comparing fits needs at least two models");
  }
  const std::size_t n = predictions.front().size();
  const std::size_t m = predictions.size();
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), 0);
  if (std::ranges::all_of(predictions,
                          [](const auto& p) { return IsNumericKind(p.kind); })) {
    std::vector<double> score(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t f = 0; f < m; ++f) {
        for (std::size_t g = f + 1; g < m; ++g) {
          score[i] = std::max(score[i], std::abs(predictions[f].values[i] -
                                                 predictions[g].values[i]));
        }
      }
    }
    return TopRows(std::move(rows), score, l);
  }
  if (!std::ranges::all_of(predictions,
                           [](const auto& p) { return IsClassKind(p.kind); })) {
    throw ModelError("fits to compare must all be numeric or all class-valued");
  }
  for (const auto& p : predictions) {
    if (p.levels != predictions.front().levels) {
      throw ModelError("class-valued fits to compare must share levels");
    }
  }
  std::vector<std::pair<std::size_t, double>> score(n, {0, 0.0});
  const std::size_t k = predictions.front().levels.size();
  for (std::size_t i = 0; i < n; ++i) {
    std::set<int> distinct;
    for (const auto& p : predictions) distinct.insert(p.labels[i]);
    score[i].first = distinct.size();
    for (std::size_t f = 0; f < m; ++f) {
      if (predictions[f].kind != PredictionKind::kProbMatrix) continue;
      for (std::size_t g = f + 1; g < m; ++g) {
        if (predictions[g].kind != PredictionKind::kProbMatrix) continue;
        const auto a = predictions[f].ProbabilityRow(i);
        const auto b = predictions[g].ProbabilityRow(i);
        double tv = 0.0;
        for (std::size_t c = 0; c < k; ++c) tv += std::abs(a[c] - b[c]);
        score[i].second = std::max(score[i].second, 0.5 * tv);
      }
    }
  }
  return TopRows(std::move(rows), score, l);
}

std::vector<std::size_t> SelectExtremeResponse(const Column& response,
                                               std::size_t l, bool high) {
  if (!response.is_numeric()) {
    throw DataError("extreme-response tours need a numeric response");
  }
  std::vector<double> key = response.values;
  if (!high) {
    for (double& v : key) v = -v;
  }
  std::vector<std::size_t> rows(key.size());
  std::iota(rows.begin(), rows.end(), 0);
  return TopRows(std::move(rows), key, l);
}

std::vector<std::size_t> Seriate(std::span<const double> distances,
                                 std::size_t n) {
  if (distances.size() != n * n) {
    throw DataError("seriation needs an n x n distance matrix");
  }
  std::vector<std::size_t> identity(n);
  std::iota(identity.begin(), identity.end(), 0);
  if (n <= 2) return identity;

  const auto leaf = [&](std::size_t a, std::size_t b) {
    return distances[a * n + b];
  };
  std::vector<double> d(distances.begin(), distances.end());
  std::vector<std::vector<std::size_t>> order(n);
  std::vector<double> size(n, 1.0);
  std::vector<bool> active(n, true);
  for (std::size_t i = 0; i < n; ++i) order[i] = {i};

  // Nearest-neighbour chain; the predecessor wins ties so reciprocal pairs
  // are always found.
  std::vector<std::size_t> chain;
  std::size_t remaining = n;
  while (remaining > 1) {
    if (chain.empty()) {
      chain.push_back(static_cast<std::size_t>(
          std::find(active.begin(), active.end(), true) - active.begin()));
    }
    const std::size_t a = chain.back();
    std::size_t b = n;
    double best = kInf;
    if (chain.size() >= 2) {
      b = chain[chain.size() - 2];
      best = d[a * n + b];
    }
    for (std::size_t c = 0; c < n; ++c) {
      if (!active[c] || c == a) continue;
      if (b == n || d[a * n + c] < best) {
        best = d[a * n + c];
        b = c;
      }
    }
    if (chain.size() < 2 || b != chain[chain.size() - 2]) {
      chain.push_back(b);
      continue;
    }
    chain.pop_back();
    chain.pop_back();
    const std::size_t i = std::min(a, b);
    const std::size_t j = std::max(a, b);
    auto& left = order[i];
    auto& right = order[j];
    const double options[4] = {leaf(left.back(), right.front()),
                               leaf(left.back(), right.back()),
                               leaf(left.front(), right.front()),
                               leaf(left.front(), right.back())};
    const int pick =
        static_cast<int>(std::min_element(options, options + 4) - options);
    if (pick >= 2) std::reverse(left.begin(), left.end());
    if (pick % 2 == 1) std::reverse(right.begin(), right.end());
    left.insert(left.end(), right.begin(), right.end());
    right.clear();
    for (std::size_t c = 0; c < n; ++c) {
      if (!active[c] || c == i || c == j) continue;
      const double merged =
          (size[i] * d[i * n + c] + size[j] * d[j * n + c]) / (size[i] + size[j]);
      d[i * n + c] = d[c * n + i] = merged;
    }
    size[i] += size[j];
    active[j] = false;
    --remaining;
  }
  const std::size_t root = static_cast<std::size_t>(
      std::find(active.begin(), active.end(), true) - active.begin());
  return TwoOpt(distances, n, std::move(order[root]));
}

std::vector<std::size_t> SeriatePoints(const FeatureSpace& space,
                                       std::span<const SectionPoint> points) {
  const std::size_t n = points.size();
  std::vector<std::vector<double>> coords;
  for (const auto& p : points) coords.push_back(space.PointCoordinates(p));
  const DistanceKind kind = space.clustering_distance();
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      d[i * n + j] = d[j * n + i] = space.Distance(coords[i], coords[j], kind);
    }
  }
  return Seriate(d, n);
}

double PathLength(std::span<const double> distances, std::size_t n,
                  std::span<const std::size_t> order) {
  double total = 0.0;
  for (std::size_t i = 1; i < order.size(); ++i) {
    total += distances[order[i - 1] * n + order[i]];
  }
  return total;
}

std::vector<SectionPoint> Interpolate(const DataFrame& frame,
                                      std::span<const SectionPoint> points,
                                      int m) {
  if (m < 1) throw DataError("steps per segment must be at least 1");
  std::vector<SectionPoint> out;
  if (points.empty()) return out;
  out.reserve((points.size() - 1) * static_cast<std::size_t>(m) + 1);
  const auto blend = [&](const std::map<std::string, double>& a,
                         const std::map<std::string, double>& b, int j) {
    std::map<std::string, double> result;
    for (const auto& [name, va] : a) {
      const double vb = b.at(name);
      if (frame.column(name).is_numeric()) {
        result[name] = va + (vb - va) * (static_cast<double>(j) / m);
      } else {
        result[name] = 2 * j >= m ? vb : va;
      }
    }
    return result;
  };
  for (std::size_t s = 0; s + 1 < points.size(); ++s) {
    out.push_back(points[s]);
    for (int j = 1; j < m; ++j) {
      out.push_back({blend(points[s].conditioning, points[s + 1].conditioning, j),
                     blend(points[s].hidden, points[s + 1].hidden, j)});
    }
  }
  out.push_back(points.back());
  return out;
}

Occupancy ComputeOccupancy(const DataFrame& frame, const Roles& roles,
                           std::span<const SectionPoint> points,
                           const SimilarityConfig& config) {
  config.Validate();
  const FeatureSpace space(frame, roles.conditioning);
  const std::size_t n = frame.num_rows();
  const std::size_t l = points.size();
  Occupancy occ;
  occ.visible.assign(l, 0);
  occ.total_similarity.assign(l, 0.0);
  occ.max_similarity.assign(n, 0.0);
  if (l == 0) return occ;

  const auto work = [&](std::size_t begin, std::size_t end) {
    std::vector<double> max_sim(n, 0.0);
    for (std::size_t k = begin; k < end; ++k) {
      const auto u = space.PointCoordinates(points[k]);
      const auto scores =
          Similarity(space.DistancesToRows(u, config.distance), config.sigma);
      for (std::size_t i = 0; i < n; ++i) {
        if (scores[i] > 0.0) {
          ++occ.visible[k];
          occ.total_similarity[k] += scores[i];
        }
        max_sim[i] = std::max(max_sim[i], scores[i]);
      }
    }
    return max_sim;
  };
  const std::size_t threads = std::clamp<std::size_t>(
      std::thread::hardware_concurrency(), 1, l);
  std::vector<std::future<std::vector<double>>> parts;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t begin = l * t / threads;
    const std::size_t end = l * (t + 1) / threads;
    parts.push_back(std::async(threads == 1 ? std::launch::deferred
                                            : std::launch::async,
                               work, begin, end));
  }
  for (auto& part : parts) {
    const auto max_sim = part.get();
    for (std::size_t i = 0; i < n; ++i) {
      occ.max_similarity[i] = std::max(occ.max_similarity[i], max_sim[i]);
    }
  }
  occ.mean_visible =
      std::accumulate(occ.visible.begin(), occ.visible.end(), 0.0) / l;
  occ.mean_total_similarity =
      std::accumulate(occ.total_similarity.begin(), occ.total_similarity.end(),
                      0.0) / l;
  occ.fraction_visited =
      static_cast<double>(std::count_if(occ.max_similarity.begin(),
                                        occ.max_similarity.end(),
                                        [](double s) { return s > 0.0; })) / n;
  return occ;
}

Tour BuildTour(const DataFrame& frame, const Roles& roles,
               const SectionPoint& base, std::span<const ModelHandle> models,
               const TourRequest& request) {
  // Section variables play no part in a tour, so roles without any are
  // accepted here (occupancy studies condition on every predictor).
  if (roles.conditioning.empty()) {
    throw DataError("a tour needs at least one conditioning variable");
  }
  ValidatePoint(frame, roles, base);
  if (request.length == 0) throw DataError("tour length must be at least 1");

  Tour tour;
  tour.kind = request.kind;
  tour.length_requested = request.length;
  tour.seed = request.seed;
  const std::size_t l = request.length;
  bool from_rows = true;
  std::vector<std::size_t> rows;
  switch (request.kind) {
    case TourKind::kRandom:
      rows = SampleRows(frame.num_rows(), l, request.seed);
      break;
    case TourKind::kKmeans:
      from_rows = false;
      tour.points = KMeansPoints(frame, roles, base, request);
      break;
    case TourKind::kKmed:
      rows = KmedRows(frame, roles, request);
      break;
    case TourKind::kLof:
      rows = SelectLackOfFit(ResponseColumn(frame, roles),
                             PredictAll(frame, models), l);
      break;
    case TourKind::kDiffits:
      rows = SelectDiffits(PredictAll(frame, models), l);
      break;
    case TourKind::kHiResponse:
    case TourKind::kLoResponse:
      rows = SelectExtremeResponse(ResponseColumn(frame, roles), l,
                                   request.kind == TourKind::kHiResponse);
      break;
    case TourKind::kAlongVar:
      from_rows = false;
      tour.var = request.var;
      tour.points = AlongVarPoints(frame, roles, base, request);
      break;
  }
  if (from_rows) {
    for (const auto r : rows) tour.points.push_back(PointAtRow(frame, base, r));
    tour.rows = rows;
  }

  if (request.kind != TourKind::kAlongVar && tour.points.size() > 2) {
    const FeatureSpace space(frame, roles.conditioning);
    const auto order = SeriatePoints(space, tour.points);
    std::vector<SectionPoint> points;
    std::vector<std::size_t> ordered_rows;
    for (const auto i : order) {
      points.push_back(std::move(tour.points[i]));
      if (from_rows) ordered_rows.push_back(tour.rows[i]);
    }
    tour.points = std::move(points);
    tour.rows = std::move(ordered_rows);
  }

  std::vector<SectionPoint> points;
  std::vector<std::size_t> kept_rows;
  for (std::size_t i = 0; i < tour.points.size(); ++i) {
    if (!points.empty() && points.back() == tour.points[i]) continue;
    points.push_back(std::move(tour.points[i]));
    if (from_rows) kept_rows.push_back(tour.rows[i]);
  }
  tour.points = std::move(points);
  tour.rows = std::move(kept_rows);

  if (request.steps_per_segment > 1 && tour.points.size() > 1) {
    tour.interpolated =
        Interpolate(frame, tour.points, request.steps_per_segment);
  }
  return tour;
}

json TourToJson(const Tour& tour, const DataFrame& frame) {
  json points = json::array();
  for (const auto& p : tour.points) points.push_back(PointToJson(p, frame));
  json out = {{"schema", "v1"},
              {"kind", TourKindName(tour.kind)},
              {"lengthRequested", tour.length_requested},
              {"length", tour.points.size()},
              {"seed", tour.seed},
              {"points", std::move(points)},
              {"rows", tour.rows}};
  if (tour.var) out["var"] = *tour.var;
  if (!tour.interpolated.empty()) {
    json dense = json::array();
    for (const auto& p : tour.interpolated) dense.push_back(PointToJson(p, frame));
    out["interpolated"] = std::move(dense);
  }
  if (tour.diagnostics) {
    const Occupancy& d = *tour.diagnostics;
    out["diagnostics"] = {{"visible", d.visible},
                          {"totalSimilarity", d.total_similarity},
                          {"meanVisible", d.mean_visible},
                          {"meanTotalSimilarity", d.mean_total_similarity},
                          {"fractionVisited", d.fraction_visited}};
  }
  return out;
}

}  // namespace slicevis
