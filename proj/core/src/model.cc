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

#include "slicevis/model.h"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "slicevis/cluster.h"
#include "slicevis/error.h"

namespace slicevis {
namespace {

int ParseInt(std::string_view key, std::string_view text) {
  int value = 0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ModelError("model option '" + std::string(key) +
                     "' expects an integer, got '" + std::string(text) + "'");
  }
  return value;
}

double ParseDouble(std::string_view key, std::string_view text) {
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw ModelError("model option '" + std::string(key) +
                     "' expects a number, got '" + std::string(text) + "'");
  }
  return value;
}

// Shared by the classifiers: turns per-row class weights into the requested
// output kind.
Predictions ClassOutput(PredictionKind kind,
                        const std::vector<std::string>& levels,
                        std::vector<double> probabilities) {
  Predictions out;
  out.kind = kind;
  out.levels = levels;
  const std::size_t L = levels.size();
  const std::size_t n = L == 0 ? 0 : probabilities.size() / L;
  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto* row = probabilities.data() + i * L;
    out.labels[i] = static_cast<int>(std::max_element(row, row + L) - row);
  }
  if (kind == PredictionKind::kProbMatrix) {
    out.probabilities = std::move(probabilities);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Linear least squares with one-hot coding (first level dropped).

class LinearModel : public Model {
 public:
  LinearModel(InputSchema schema, LinearCoefficients coefficients)
      : schema_(std::move(schema)), coef_(std::move(coefficients)) {}

  Predictions Predict(const DataFrame& rows) const override {
    Predictions out;
    out.kind = PredictionKind::kNumeric;
    out.values.assign(rows.num_rows(), coef_.beta[0]);
    std::size_t term = 1;
    for (std::size_t v = 0; v < schema_.size(); ++v) {
      const Column& col = rows.column(v);
      if (schema_[v].kind == ColumnKind::kNumeric) {
        const double b = coef_.beta[term++];
        for (std::size_t i = 0; i < rows.num_rows(); ++i) {
          out.values[i] += b * col.values[i];
        }
      } else {
        const std::size_t dummies = schema_[v].levels.size() - 1;
        for (std::size_t i = 0; i < rows.num_rows(); ++i) {
          const int code = col.code(i);
          if (code > 0) out.values[i] += coef_.beta[term + code - 1];
        }
        term += dummies;
      }
    }
    return out;
  }

  const LinearCoefficients& coefficients() const { return coef_; }

 private:
  InputSchema schema_;
  LinearCoefficients coef_;
};

Eigen::MatrixXd LinearDesign(const DataFrame& frame,
                             const std::vector<std::string>& predictors,
                             std::vector<std::string>* terms) {
  std::size_t width = 1;
  for (const auto& name : predictors) {
    const Column& col = frame.column(name);
    width += col.is_numeric() ? 1 : (col.levels.size() - 1);
  }
  const auto n = static_cast<Eigen::Index>(frame.num_rows());
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(width));
  x.col(0).setOnes();
  terms->push_back("(intercept)");
  Eigen::Index term = 1;
  for (const auto& name : predictors) {
    const Column& col = frame.column(name);
    if (col.is_numeric()) {
      for (Eigen::Index i = 0; i < n; ++i) x(i, term) = col.values[i];
      terms->push_back(name);
      ++term;
    } else {
      for (std::size_t l = 1; l < col.levels.size(); ++l) {
        terms->push_back(name + "=" + col.levels[l]);
      }
      for (Eigen::Index i = 0; i < n; ++i) {
        const int code = col.code(i);
        if (code > 0) x(i, term + code - 1) = 1.0;
      }
      term += static_cast<Eigen::Index>(col.levels.size() - 1);
    }
  }
  return x;
}

std::shared_ptr<LinearModel> FitLinear(const DataFrame& frame,
                                       const Column& response,
                                       const std::vector<std::string>& predictors,
                                       const InputSchema& schema) {
  if (!response.is_numeric()) {
    throw ModelError("linear model needs a numeric response");
  }
  if (frame.num_rows() < 2) throw ModelError("linear model needs >= 2 rows");
  LinearCoefficients coef;
  const Eigen::MatrixXd x = LinearDesign(frame, predictors, &coef.terms);
  const Eigen::Map<const Eigen::VectorXd> y(
      response.values.data(), static_cast<Eigen::Index>(response.values.size()));

  constexpr double kRankThreshold = 1e-10;
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(kRankThreshold);
  if (qr.rank() < x.cols()) {
    // Name the first term that adds nothing to the span of the ones before.
    Eigen::Index previous = 0;
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      Eigen::ColPivHouseholderQR<Eigen::MatrixXd> partial(x.leftCols(j + 1));
      partial.setThreshold(kRankThreshold);
      if (partial.rank() == previous) {
        throw ModelError("singular design matrix: term '" + coef.terms[j] +
                         "' is collinear with the preceding terms");
      }
      previous = partial.rank();
    }
    throw ModelError("singular design matrix");
  }
  const Eigen::VectorXd beta = qr.solve(y);
  coef.beta.assign(beta.data(), beta.data() + beta.size());
  return std::make_shared<LinearModel>(schema, std::move(coef));
}

// ---------------------------------------------------------------------------
// k nearest neighbours in standardized predictor space.

class KnnModel : public Model {
 public:
  KnnModel(const DataFrame& train, const InputSchema& schema,
           const Column& response, std::size_t k, PredictionKind kind)
      : k_(k), kind_(kind) {
    for (const auto& field : schema) {
      const Column& col = train.column(field.name);
      columns_.push_back(col.values);
      numeric_.push_back(col.is_numeric());
      if (col.is_numeric()) {
        const NumericStats s = ScalingStats::ComputeColumn(col);
        inv_sd_.push_back(s.constant() ? 0.0 : 1.0 / s.sd);
      } else {
        inv_sd_.push_back(1.0);
      }
    }
    response_ = response.values;
    levels_ = response.levels;
    rows_ = train.num_rows();
  }

  Predictions Predict(const DataFrame& rows) const override {
    // Queries are processed in batches against cache-sized blocks of training
    // rows, so each training column streams through memory once per batch.
    constexpr std::size_t kBatch = 8;
    constexpr std::size_t kBlock = 1024;
    const std::size_t q = rows.num_rows();
    std::vector<double> numeric(q);
    std::vector<double> probs(levels_.empty() ? 0 : q * levels_.size());
    std::vector<double> dist(kBatch * kBlock);
    std::vector<std::vector<std::pair<double, std::size_t>>> nearest(kBatch);
    for (std::size_t r0 = 0; r0 < q; r0 += kBatch) {
      const std::size_t nq = std::min(kBatch, q - r0);
      for (auto& heap : nearest) heap.clear();
      for (std::size_t b0 = 0; b0 < rows_; b0 += kBlock) {
        const std::size_t nb = std::min(kBlock, rows_ - b0);
        std::fill(dist.begin(), dist.end(), 0.0);
        for (std::size_t v = 0; v < columns_.size(); ++v) {
          const double* train = columns_[v].data() + b0;
          const auto& targets = rows.column(v).values;
          for (std::size_t j = 0; j < nq; ++j) {
            const double target = targets[r0 + j];
            double* d = dist.data() + j * kBlock;
            if (numeric_[v]) {
              const double inv = inv_sd_[v];
              for (std::size_t i = 0; i < nb; ++i) {
                const double z = (train[i] - target) * inv;
                d[i] += z * z;
              }
            } else {
              for (std::size_t i = 0; i < nb; ++i) {
                d[i] += train[i] != target ? 1.0 : 0.0;
              }
            }
          }
        }
        // Keep the k smallest (distance, row) pairs per query as a max-heap.
        for (std::size_t j = 0; j < nq; ++j) {
          auto& heap = nearest[j];
          const double* d = dist.data() + j * kBlock;
          for (std::size_t i = 0; i < nb; ++i) {
            if (heap.size() < k_) {
              heap.emplace_back(d[i], b0 + i);
              std::push_heap(heap.begin(), heap.end());
            } else if (d[i] < heap.front().first) {
              std::pop_heap(heap.begin(), heap.end());
              heap.back() = {d[i], b0 + i};
              std::push_heap(heap.begin(), heap.end());
            }
          }
        }
      }
      for (std::size_t j = 0; j < nq; ++j) {
        auto& heap = nearest[j];
        std::sort_heap(heap.begin(), heap.end());
        const std::size_t r = r0 + j;
        if (levels_.empty()) {
          double sum = 0.0;
          for (const auto& [d, i] : heap) sum += response_[i];
          numeric[r] = sum / static_cast<double>(k_);
        } else {
          double* row = probs.data() + r * levels_.size();
          for (const auto& [d, i] : heap) {
            row[static_cast<std::size_t>(response_[i])] += 1.0 / static_cast<double>(k_);
          }
        }
      }
    }
    if (levels_.empty()) {
      Predictions out;
      out.values = std::move(numeric);
      return out;
    }
    return ClassOutput(kind_, levels_, std::move(probs));
  }

 private:
  std::size_t k_;
  PredictionKind kind_;
  std::vector<std::vector<double>> columns_;
  std::vector<bool> numeric_;
  std::vector<double> inv_sd_;
  std::vector<double> response_;
  std::vector<std::string> levels_;
  std::size_t rows_ = 0;
};

// ---------------------------------------------------------------------------
// Greedy binary regression / classification tree.

class TreeModel : public Model {
 public:
  struct Node {
    int var = -1;  // -1 marks a leaf
    bool numeric = true;
    double threshold = 0.0;  // numeric: x <= threshold goes left
    int level = 0;           // categorical: code == level goes left
    int left = -1;
    int right = -1;
    std::vector<double> value;  // mean, or class proportions
  };

  TreeModel(const DataFrame& train, const InputSchema& schema,
            const Column& response, int max_depth, int min_leaf,
            PredictionKind kind)
      : kind_(kind), levels_(response.levels) {
    for (const auto& field : schema) {
      const Column& col = train.column(field.name);
      columns_.push_back(&col.values);
      numeric_.push_back(col.is_numeric());
      num_levels_.push_back(col.levels.size());
    }
    response_ = &response.values;
    min_leaf_ = std::max(1, min_leaf);
    std::vector<std::size_t> rows(train.num_rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    Grow(rows, 0, std::max(0, max_depth));
    columns_.clear();
    response_ = nullptr;
  }

  Predictions Predict(const DataFrame& rows) const override {
    const std::size_t q = rows.num_rows();
    std::vector<double> values;
    std::vector<double> probs;
    for (std::size_t r = 0; r < q; ++r) {
      int node = 0;
      while (nodes_[node].var >= 0) {
        const Node& n = nodes_[node];
        const double x = rows.column(n.var).values[r];
        const bool left = n.numeric ? x <= n.threshold
                                    : static_cast<int>(x) == n.level;
        node = left ? n.left : n.right;
      }
      const auto& v = nodes_[node].value;
      if (levels_.empty()) {
        values.push_back(v[0]);
      } else {
        probs.insert(probs.end(), v.begin(), v.end());
      }
    }
    if (levels_.empty()) {
      Predictions out;
      out.values = std::move(values);
      return out;
    }
    return ClassOutput(kind_, levels_, std::move(probs));
  }

 private:
  bool classification() const { return !levels_.empty(); }

  std::vector<double> LeafValue(const std::vector<std::size_t>& rows) const {
    if (!classification()) {
      double sum = 0.0;
      for (const auto r : rows) sum += (*response_)[r];
      return {sum / static_cast<double>(rows.size())};
    }
    std::vector<double> p(levels_.size(), 0.0);
    for (const auto r : rows) p[static_cast<std::size_t>((*response_)[r])] += 1.0;
    for (double& x : p) x /= static_cast<double>(rows.size());
    return p;
  }

  // Impurity summaries: SSE for regression, n * Gini for classification.
  struct Stats {
    double n = 0.0, sum = 0.0, sum_sq = 0.0;
    std::vector<double> counts;
    void Add(double y, bool cls) {
      n += 1.0;
      if (cls) {
        counts[static_cast<std::size_t>(y)] += 1.0;
      } else {
        sum += y;
        sum_sq += y * y;
      }
    }
    void Remove(double y, bool cls) {
      n -= 1.0;
      if (cls) {
        counts[static_cast<std::size_t>(y)] -= 1.0;
      } else {
        sum -= y;
        sum_sq -= y * y;
      }
    }
    double Impurity(bool cls) const {
      if (n <= 0.0) return 0.0;
      if (!cls) return std::max(0.0, sum_sq - sum * sum / n);
      double g = 0.0;
      for (const double c : counts) g += c * c;
      return n - g / n;
    }
  };

  Stats Summarize(const std::vector<std::size_t>& rows) const {
    Stats s;
    s.counts.assign(levels_.size(), 0.0);
    for (const auto r : rows) s.Add((*response_)[r], classification());
    return s;
  }

  int Grow(const std::vector<std::size_t>& rows, int depth, int max_depth) {
    const int index = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    nodes_[index].value = LeafValue(rows);
    const bool cls = classification();
    const Stats total = Summarize(rows);
    const double parent = total.Impurity(cls);
    if (depth >= max_depth ||
        rows.size() < 2 * static_cast<std::size_t>(min_leaf_) ||
        parent <= 1e-12) {
      return index;
    }

    double best_gain = 1e-12 * std::max(1.0, parent);
    Node best;
    for (std::size_t v = 0; v < columns_.size(); ++v) {
      const auto& x = *columns_[v];
      if (numeric_[v]) {
        std::vector<std::size_t> order = rows;
        std::stable_sort(order.begin(), order.end(),
                         [&](auto a, auto b) { return x[a] < x[b]; });
        Stats left;
        left.counts.assign(levels_.size(), 0.0);
        Stats right = total;
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
          const double y = (*response_)[order[i]];
          left.Add(y, cls);
          right.Remove(y, cls);
          if (x[order[i]] == x[order[i + 1]]) continue;
          if (i + 1 < static_cast<std::size_t>(min_leaf_) ||
              order.size() - i - 1 < static_cast<std::size_t>(min_leaf_)) {
            continue;
          }
          const double gain = parent - left.Impurity(cls) - right.Impurity(cls);
          if (gain > best_gain) {
            best_gain = gain;
            best.var = static_cast<int>(v);
            best.numeric = true;
            best.threshold = 0.5 * (x[order[i]] + x[order[i + 1]]);
          }
        }
      } else {
        for (std::size_t level = 0; level < num_levels_[v]; ++level) {
          Stats left;
          left.counts.assign(levels_.size(), 0.0);
          Stats right;
          right.counts.assign(levels_.size(), 0.0);
          for (const auto r : rows) {
            (static_cast<std::size_t>(x[r]) == level ? left : right)
                .Add((*response_)[r], cls);
          }
          if (left.n < min_leaf_ || right.n < min_leaf_) continue;
          const double gain = parent - left.Impurity(cls) - right.Impurity(cls);
          if (gain > best_gain) {
            best_gain = gain;
            best.var = static_cast<int>(v);
            best.numeric = false;
            best.level = static_cast<int>(level);
          }
        }
      }
    }
    if (best.var < 0) return index;

    std::vector<std::size_t> left_rows, right_rows;
    const auto& x = *columns_[best.var];
    for (const auto r : rows) {
      const bool left = best.numeric ? x[r] <= best.threshold
                                     : static_cast<int>(x[r]) == best.level;
      (left ? left_rows : right_rows).push_back(r);
    }
    nodes_[index].var = best.var;
    nodes_[index].numeric = best.numeric;
    nodes_[index].threshold = best.threshold;
    nodes_[index].level = best.level;
    const int l = Grow(left_rows, depth + 1, max_depth);
    const int r = Grow(right_rows, depth + 1, max_depth);
    nodes_[index].left = l;
    nodes_[index].right = r;
    return index;
  }

  PredictionKind kind_;
  std::vector<std::string> levels_;
  std::vector<Node> nodes_;
  // Only valid while growing.
  std::vector<const std::vector<double>*> columns_;
  std::vector<bool> numeric_;
  std::vector<std::size_t> num_levels_;
  const std::vector<double>* response_ = nullptr;
  int min_leaf_ = 1;
};

// ---------------------------------------------------------------------------
// Gaussian product-kernel density estimate; categorical predictors act as
// exact-match indicators.

class KdeModel : public Model {
 public:
  KdeModel(const DataFrame& train, const InputSchema& schema,
           double bandwidth) {
    std::size_t numeric_dims = 0;
    for (const auto& field : schema) {
      if (field.kind == ColumnKind::kNumeric) ++numeric_dims;
    }
    const double n = static_cast<double>(train.num_rows());
    const double factor =
        bandwidth > 0.0
            ? bandwidth
            : std::pow(n, -1.0 / (static_cast<double>(numeric_dims) + 4.0));
    for (const auto& field : schema) {
      const Column& col = train.column(field.name);
      columns_.push_back(col.values);
      numeric_.push_back(col.is_numeric());
      if (col.is_numeric()) {
        const NumericStats s = ScalingStats::ComputeColumn(col);
        const double sd = s.constant() ? 1.0 : s.sd;
        h_.push_back(factor * sd);
      } else {
        h_.push_back(1.0);
      }
    }
    rows_ = train.num_rows();
  }

  Predictions Predict(const DataFrame& rows) const override {
    Predictions out;
    out.kind = PredictionKind::kDensity;
    out.values.resize(rows.num_rows());
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    for (std::size_t r = 0; r < rows.num_rows(); ++r) {
      double total = 0.0;
      for (std::size_t i = 0; i < rows_; ++i) {
        double k = 1.0;
        for (std::size_t v = 0; v < columns_.size() && k > 0.0; ++v) {
          const double x = rows.column(v).values[r];
          if (numeric_[v]) {
            const double z = (x - columns_[v][i]) / h_[v];
            k *= inv_sqrt_2pi * std::exp(-0.5 * z * z) / h_[v];
          } else if (x != columns_[v][i]) {
            k = 0.0;
          }
        }
        total += k;
      }
      out.values[r] = total / static_cast<double>(rows_);
    }
    return out;
  }

 private:
  std::vector<std::vector<double>> columns_;
  std::vector<bool> numeric_;
  std::vector<double> h_;
  std::size_t rows_ = 0;
};

// ---------------------------------------------------------------------------
// k-means cluster assignment.

class KMeansModel : public Model {
 public:
  KMeansModel(const DataFrame& train, const InputSchema& schema, std::size_t k,
              std::uint64_t seed)
      : encoder_(train, NamesOf(schema)) {
    KMeansOptions options;
    options.seed = seed;
    centers_ = KMeans(encoder_.EncodeAll(train), k, options).centers;
    for (std::size_t c = 0; c < k; ++c) levels_.push_back(std::to_string(c + 1));
  }

  Predictions Predict(const DataFrame& rows) const override {
    Predictions out;
    out.kind = PredictionKind::kClusterId;
    out.levels = levels_;
    const PointMatrix encoded = encoder_.EncodeAll(rows);
    out.labels.resize(rows.num_rows());
    for (std::size_t r = 0; r < rows.num_rows(); ++r) {
      out.labels[r] = NearestCenter(centers_, encoded.row(r));
    }
    return out;
  }

 private:
  static std::vector<std::string> NamesOf(const InputSchema& schema) {
    std::vector<std::string> names;
    for (const auto& f : schema) names.push_back(f.name);
    return names;
  }

  OneHotEncoder encoder_;
  PointMatrix centers_;
  std::vector<std::string> levels_;
};

}  // namespace

std::string_view PredictionKindName(PredictionKind kind) {
  switch (kind) {
    case PredictionKind::kNumeric:
      return "numeric";
    case PredictionKind::kClass:
      return "class";
    case PredictionKind::kProbMatrix:
      return "probMatrix";
    case PredictionKind::kDensity:
      return "density";
    case PredictionKind::kClusterId:
      return "clusterId";
  }
  return "numeric";
}

PredictionKind ParsePredictionKind(std::string_view text) {
  for (const auto kind :
       {PredictionKind::kNumeric, PredictionKind::kClass,
        PredictionKind::kProbMatrix, PredictionKind::kDensity,
        PredictionKind::kClusterId}) {
    if (PredictionKindName(kind) == text) return kind;
  }
  throw ModelError("unknown prediction kind '" + std::string(text) + "'");
}

std::size_t Predictions::size() const {
  switch (kind) {
    case PredictionKind::kNumeric:
    case PredictionKind::kDensity:
      return values.size();
    default:
      return labels.size();
  }
}

double Predictions::AsNumeric(std::size_t row) const {
  switch (kind) {
    case PredictionKind::kNumeric:
    case PredictionKind::kDensity:
      return values[row];
    default:
      return static_cast<double>(labels[row]);
  }
}

InputSchema SchemaOf(const DataFrame& frame,
                     std::span<const std::string> names) {
  InputSchema schema;
  for (const auto& name : names) {
    const Column& col = frame.column(name);
    schema.push_back({col.name, col.kind, col.levels});
  }
  return schema;
}

Predictions ModelHandle::Predict(const DataFrame& rows) const {
  if (!impl) throw ModelError("model '" + id + "' has no implementation");
  std::vector<Column> projected;
  projected.reserve(schema.size());
  for (const auto& field : schema) {
    const auto index = rows.IndexOf(field.name);
    if (!index) {
      throw ModelError("model '" + id + "': input is missing column '" +
                       field.name + "'");
    }
    const Column& col = rows.column(*index);
    if (col.kind != field.kind ||
        (field.kind == ColumnKind::kCategorical && col.levels != field.levels)) {
      throw ModelError("model '" + id + "': column '" + field.name +
                       "' does not match the input schema");
    }
    projected.push_back(col);
  }
  const DataFrame input(std::move(projected));
  Predictions out = impl->Predict(input);
  if (out.kind != kind) {
    throw ModelError("model '" + id + "' returned " +
                     std::string(PredictionKindName(out.kind)) + ", expected " +
                     std::string(PredictionKindName(kind)));
  }
  if (out.size() != rows.num_rows()) {
    throw ModelError("model '" + id + "' returned " +
                     std::to_string(out.size()) + " predictions for " +
                     std::to_string(rows.num_rows()) + " rows");
  }
  if (kind == PredictionKind::kProbMatrix) {
    if (out.probabilities.size() != out.size() * out.levels.size()) {
      throw ModelError("model '" + id + "': probability matrix has wrong shape");
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
      double sum = 0.0;
      for (const double p : out.ProbabilityRow(i)) {
        if (!(p >= 0.0)) {
          throw ModelError("model '" + id + "': negative probability");
        }
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9) {
        throw ModelError("model '" + id + "': probabilities do not sum to 1");
      }
    }
  }
  return out;
}

ModelSpec ModelSpec::Parse(std::string_view text) {
  ModelSpec spec;
  const auto colon = text.find(':');
  const std::string_view type = text.substr(0, colon);
  if (type == "linear") {
    spec.type = Type::kLinear;
  } else if (type == "knn") {
    spec.type = Type::kKnn;
  } else if (type == "tree") {
    spec.type = Type::kTree;
  } else if (type == "kde") {
    spec.type = Type::kKde;
  } else if (type == "kmeans") {
    spec.type = Type::kKmeans;
  } else if (type == "external") {
    spec.type = Type::kExternal;
  } else {
    throw ModelError("unknown model type '" + std::string(type) + "'");
  }
  std::string_view rest =
      colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = rest.substr(0, comma);
    rest = comma == std::string_view::npos ? std::string_view{}
                                           : rest.substr(comma + 1);
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw ModelError("model option '" + std::string(item) +
                       "' must be key=value");
    }
    const std::string_view key = item.substr(0, eq);
    const std::string_view value = item.substr(eq + 1);
    if (key == "k") {
      spec.k = ParseInt(key, value);
    } else if (key == "depth") {
      spec.max_depth = ParseInt(key, value);
    } else if (key == "leaf") {
      spec.min_leaf = ParseInt(key, value);
    } else if (key == "bw") {
      spec.bandwidth = ParseDouble(key, value);
    } else if (key == "url") {
      spec.endpoint = std::string(value);
    } else if (key == "kind" || key == "output") {
      spec.output = ParsePredictionKind(value);
      spec.output_set = true;
    } else if (key == "timeout") {
      spec.timeout_ms = ParseInt(key, value);
    } else if (key == "inflight") {
      spec.max_in_flight = ParseInt(key, value);
    } else if (key == "seed") {
      spec.seed = static_cast<std::uint64_t>(ParseInt(key, value));
    } else {
      throw ModelError("unknown model option '" + std::string(key) + "'");
    }
  }
  if (spec.type == Type::kExternal && spec.endpoint.empty()) {
    throw ModelError("external model needs url=...");
  }
  return spec;
}

std::string ModelSpec::ToString() const {
  std::ostringstream out;
  switch (type) {
    case Type::kLinear:
      out << "linear";
      break;
    case Type::kKnn:
      out << "knn:k=" << k;
      break;
    case Type::kTree:
      out << "tree:depth=" << max_depth << ",leaf=" << min_leaf;
      break;
    case Type::kKde:
      out << "kde:bw=" << FormatNumber(bandwidth);
      break;
    case Type::kKmeans:
      out << "kmeans:k=" << k << ",seed=" << seed;
      break;
    case Type::kExternal:
      out << "external:url=" << endpoint << ",kind=" << PredictionKindName(output)
          << ",timeout=" << timeout_ms;
      break;
  }
  if (output_set && type != Type::kExternal) {
    out << (type == Type::kLinear ? ":" : ",") << "output="
        << PredictionKindName(output);
  }
  return out.str();
}

ModelHandle FitBuiltin(const ModelSpec& spec, const DataFrame& frame,
                       const std::optional<std::string>& response,
                       std::vector<std::string> predictors, std::string id) {
  if (spec.type == ModelSpec::Type::kExternal) {
    throw ModelError("external models are registered, not fitted");
  }
  const bool supervised = spec.type == ModelSpec::Type::kLinear ||
                          spec.type == ModelSpec::Type::kKnn ||
                          spec.type == ModelSpec::Type::kTree;
  if (supervised && !response) {
    throw ModelError(spec.ToString() + " needs a response variable");
  }
  if (predictors.empty()) {
    for (const auto& name : frame.ColumnNames()) {
      if (!response || name != *response) predictors.push_back(name);
    }
  }
  for (const auto& name : predictors) {
    if (!frame.HasColumn(name)) {
      throw ModelError("unknown predictor '" + name + "'");
    }
    if (response && name == *response && supervised) {
      throw ModelError("the response cannot also be a predictor");
    }
  }
  if (frame.num_rows() == 0) throw ModelError("cannot fit on zero rows");

  ModelHandle handle;
  handle.id = std::move(id);
  handle.schema = SchemaOf(frame, predictors);
  handle.source = "builtin:" + spec.ToString();

  const Column* y = supervised ? &frame.column(*response) : nullptr;
  PredictionKind class_kind = PredictionKind::kProbMatrix;
  if (spec.output_set) {
    if (spec.output != PredictionKind::kClass &&
        spec.output != PredictionKind::kProbMatrix) {
      throw ModelError("output must be class or probMatrix");
    }
    class_kind = spec.output;
  }

  switch (spec.type) {
    case ModelSpec::Type::kLinear:
      handle.kind = PredictionKind::kNumeric;
      handle.impl = FitLinear(frame, *y, predictors, handle.schema);
      break;
    case ModelSpec::Type::kKnn:
      if (spec.k < 1 || static_cast<std::size_t>(spec.k) > frame.num_rows()) {
        throw ModelError("knn needs 1 <= k <= n");
      }
      handle.kind = y->is_numeric() ? PredictionKind::kNumeric : class_kind;
      handle.impl = std::make_shared<KnnModel>(
          frame, handle.schema, *y, static_cast<std::size_t>(spec.k),
          handle.kind);
      break;
    case ModelSpec::Type::kTree:
      handle.kind = y->is_numeric() ? PredictionKind::kNumeric : class_kind;
      handle.impl = std::make_shared<TreeModel>(frame, handle.schema, *y,
                                                spec.max_depth, spec.min_leaf,
                                                handle.kind);
      break;
    case ModelSpec::Type::kKde:
      handle.kind = PredictionKind::kDensity;
      handle.impl =
          std::make_shared<KdeModel>(frame, handle.schema, spec.bandwidth);
      break;
    case ModelSpec::Type::kKmeans:
      if (spec.k < 1) throw ModelError("kmeans needs k >= 1");
      handle.kind = PredictionKind::kClusterId;
      try {
        handle.impl = std::make_shared<KMeansModel>(
            frame, handle.schema, static_cast<std::size_t>(spec.k), spec.seed);
      } catch (const DataError& e) {
        throw ModelError(e.what());
      }
      break;
    case ModelSpec::Type::kExternal:
      break;
  }
  return handle;
}

const LinearCoefficients& LinearCoefficientsOf(const ModelHandle& model) {
  const auto* linear = dynamic_cast<const LinearModel*>(model.impl.get());
  if (!linear) throw ModelError("model '" + model.id + "' is not linear");
  return linear->coefficients();
}

std::vector<double> RenormalizeDensity(std::span<const double> values,
                                       double cell_measure) {
  if (!(cell_measure > 0.0)) throw ModelError("cell measure must be positive");
  double total = 0.0;
  for (const double v : values) {
    if (!(v >= 0.0)) throw ModelError("density values must be nonnegative");
    total += v;
  }
  if (total <= 0.0) throw ModelError("density is zero over the whole grid");
  std::vector<double> out;
  out.reserve(values.size());
  const double scale = 1.0 / (total * cell_measure);
  for (const double v : values) out.push_back(v * scale);
  return out;
}

}  // namespace slicevis
