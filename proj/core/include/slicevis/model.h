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

// Uniform prediction interface over built-in learners and external model
// servers. Every fit, whatever its origin, is driven through ModelHandle.

#ifndef SLICEVIS_MODEL_H_
#define SLICEVIS_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "slicevis/frame.h"

namespace slicevis {

enum class PredictionKind { kNumeric, kClass, kProbMatrix, kDensity, kClusterId };

std::string_view PredictionKindName(PredictionKind kind);
PredictionKind ParsePredictionKind(std::string_view text);

struct Predictions {
  PredictionKind kind = PredictionKind::kNumeric;
  // kNumeric and kDensity.
  std::vector<double> values;
  // Level index for kClass, cluster id for kClusterId, argmax (first level on
  // ties) for kProbMatrix.
  std::vector<int> labels;
  // kProbMatrix only: row-major, size() x levels.size().
  std::vector<double> probabilities;
  // Class labels for kClass / kProbMatrix; cluster names for kClusterId.
  std::vector<std::string> levels;

  std::size_t size() const;
  std::span<const double> ProbabilityRow(std::size_t row) const {
    return {probabilities.data() + row * levels.size(), levels.size()};
  }
  // Value used when a prediction is drawn on a numeric axis: the number
  // itself, or the level index for factor-like outputs.
  double AsNumeric(std::size_t row) const;
};

struct SchemaField {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  std::vector<std::string> levels;

  bool operator==(const SchemaField&) const = default;
};
using InputSchema = std::vector<SchemaField>;

// Schema of the named columns of `frame`.
InputSchema SchemaOf(const DataFrame& frame,
                     std::span<const std::string> names);

class Model {
 public:
  virtual ~Model() = default;
  // `rows` holds exactly the schema columns, in schema order.
  virtual Predictions Predict(const DataFrame& rows) const = 0;
};

// Immutable after fit or registration; Predict may be called concurrently.
struct ModelHandle {
  std::string id;
  PredictionKind kind = PredictionKind::kNumeric;
  InputSchema schema;
  // "builtin:<spec>" or the external endpoint URL.
  std::string source;
  std::shared_ptr<const Model> impl;

  // Projects `rows` onto the input schema (extra columns are ignored) and
  // checks the output. Throws ModelError on a schema mismatch or a result of
  // the wrong length or kind.
  Predictions Predict(const DataFrame& rows) const;
};

struct ModelSpec {
  enum class Type { kLinear, kKnn, kTree, kKde, kKmeans, kExternal };

  Type type = Type::kLinear;
  int k = 5;           // knn neighbours, kmeans clusters
  int max_depth = 4;   // tree
  int min_leaf = 5;    // tree
  double bandwidth = 0.0;  // kde, standardized units; 0 picks Scott's rule
  // For a categorical response: kProbMatrix (default) or kClass. For an
  // external model: the kind the server is expected to return.
  PredictionKind output = PredictionKind::kProbMatrix;
  bool output_set = false;
  std::string endpoint;     // external
  int timeout_ms = 10000;   // external
  int max_in_flight = 4;    // external
  std::uint64_t seed = 0;   // kmeans

  // "linear", "knn:k=5", "tree:depth=3,leaf=10", "kde:bw=0.5", "kmeans:k=4",
  // "external:url=http://host:port,kind=numeric,timeout=10000".
  static ModelSpec Parse(std::string_view text);
  std::string ToString() const;
};

// Fits a built-in learner on `predictors` (all non-response columns when
// empty). kde and kmeans ignore the response. Throws ModelError on a
// singular design (naming the collinear column), bad k, or a response of the
// wrong kind.
ModelHandle FitBuiltin(const ModelSpec& spec, const DataFrame& frame,
                       const std::optional<std::string>& response,
                       std::vector<std::string> predictors, std::string id);

// Registers a model served over the predict protocol. `response_levels`
// maps class labels back to codes for class-valued kinds.
ModelHandle ConnectExternal(const ModelSpec& spec, InputSchema schema,
                            std::vector<std::string> response_levels,
                            std::string id);

// Builtin linear fit, exposed for closed-form checks: coefficients in the
// order intercept, then one block per predictor (one-hot without the first
// level for categoricals).
struct LinearCoefficients {
  std::vector<std::string> terms;
  std::vector<double> beta;
};
// Throws ModelError if `model` is not a builtin linear fit.
const LinearCoefficients& LinearCoefficientsOf(const ModelHandle& model);

// values / (sum(values) * cell_measure). Throws ModelError for negative
// values or an all-zero density.
std::vector<double> RenormalizeDensity(std::span<const double> values,
                                       double cell_measure);

}  // namespace slicevis

#endif  // SLICEVIS_MODEL_H_
