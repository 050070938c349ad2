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

// Tabular dataset model: typed columns, CSV ingestion, variable roles,
// scaling statistics and the medoid used as the default section point.

#ifndef SLICEVIS_FRAME_H_
#define SLICEVIS_FRAME_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace slicevis {

enum class ColumnKind { kNumeric, kCategorical };

std::string_view KindName(ColumnKind kind);
// Accepts "numeric" / "categorical" (and the short forms "num" / "cat").
ColumnKind ParseColumnKind(std::string_view text);

struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  // Numeric values, or level codes (0-based, stored as exact integers) for
  // categorical columns.
  std::vector<double> values;
  // Ordered level labels, categorical only.
  std::vector<std::string> levels;

  bool is_numeric() const { return kind == ColumnKind::kNumeric; }
  int code(std::size_t row) const { return static_cast<int>(values[row]); }
  const std::string& label(std::size_t row) const { return levels[code(row)]; }
  std::optional<int> LevelCode(std::string_view label) const;
};

// Immutable after construction; safe for concurrent readers.
class DataFrame {
 public:
  DataFrame() = default;
  // Throws DataError on unequal column lengths, duplicate names, or
  // categorical codes outside the level list.
  explicit DataFrame(std::vector<Column> columns);

  std::size_t num_rows() const { return num_rows_; }
  std::size_t num_columns() const { return columns_.size(); }
  const std::vector<Column>& columns() const { return columns_; }
  const Column& column(std::size_t index) const { return columns_[index]; }
  // Throws DataError for an unknown name.
  const Column& column(std::string_view name) const;
  std::optional<std::size_t> IndexOf(std::string_view name) const;
  bool HasColumn(std::string_view name) const {
    return IndexOf(name).has_value();
  }
  std::vector<std::string> ColumnNames() const;

  // Rows in the given order; levels are kept as-is so codes stay comparable.
  DataFrame SelectRows(std::span<const std::size_t> rows) const;
  DataFrame SelectColumns(std::span<const std::string> names) const;

 private:
  std::vector<Column> columns_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t num_rows_ = 0;
};

// Column kind overrides, parsed from "name=kind" lines.
using SchemaOverride = std::map<std::string, ColumnKind, std::less<>>;

// Parses a plain-text key=value section. Blank lines, '#' comments and an
// optional "[schema]" header are ignored.
SchemaOverride ParseSchemaOverride(std::string_view text);

struct IngestResult {
  DataFrame frame;
  std::size_t dropped_rows = 0;
};

// RFC-4180 style CSV with a header row. A column is numeric iff every
// non-missing cell parses as a number, unless overridden. Empty cells and
// "NA" are missing; rows with any missing cell are dropped and counted.
// Categorical levels are sorted lexicographically.
IngestResult IngestCsv(std::string_view bytes,
                       const SchemaOverride& schema_override = {});
IngestResult IngestCsvFile(const std::filesystem::path& path,
                           const SchemaOverride& schema_override = {});

// Writes the frame back as CSV. Numbers use round-trip precision; fields are
// quoted only when needed.
std::string WriteCsv(const DataFrame& frame);

// Formats a double with the shortest representation that round-trips.
std::string FormatNumber(double value);

// Variable roles. `conditioning` holds the visible conditioning predictors
// (C without F); `hidden` holds the frozen predictors F.
struct Roles {
  std::vector<std::string> section;
  std::vector<std::string> conditioning;
  std::vector<std::string> hidden;
  std::optional<std::string> response;

  // Builds roles where every column not named in section, hidden or response
  // becomes a conditioning predictor.
  static Roles Complete(const DataFrame& frame,
                        std::vector<std::string> section,
                        std::vector<std::string> hidden,
                        std::optional<std::string> response);

  // Throws DataError unless |S| is 1 or 2, all names exist, roles are
  // disjoint, and together they cover every column.
  void Validate(const DataFrame& frame) const;

  // S, then C, then F.
  std::vector<std::string> Predictors() const;
};

// Coordinates of a slice: values for the visible conditioning predictors and
// the frozen hidden ones. Categorical values are level codes.
struct SectionPoint {
  std::map<std::string, double> conditioning;
  std::map<std::string, double> hidden;

  bool operator==(const SectionPoint&) const = default;
};

// Conditioning and hidden coordinates copied from one observation.
SectionPoint PointFromRow(const DataFrame& frame, const Roles& roles,
                          std::size_t row);

// Throws DataError if the point's keys are not exactly C and F, or a
// categorical value is not a valid level code.
void ValidatePoint(const DataFrame& frame, const Roles& roles,
                   const SectionPoint& point);

struct NumericStats {
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation (n - 1)
  double min = 0.0;
  double max = 0.0;

  double range() const { return max - min; }
  bool constant() const { return !(sd > 0.0); }
};

class ScalingStats {
 public:
  static ScalingStats Compute(const DataFrame& frame);
  static NumericStats ComputeColumn(const Column& column);

  // Throws DataError when the column is unknown or not numeric.
  const NumericStats& at(std::string_view name) const;
  const std::map<std::string, NumericStats, std::less<>>& columns() const {
    return stats_;
  }

 private:
  std::map<std::string, NumericStats, std::less<>> stats_;
};

struct MedoidOptions {
  std::size_t cap = 4000;
  std::uint64_t seed = 0;
};

// Row minimizing total distance to all rows (or to a seeded subsample of
// `cap` rows when the frame is larger). Standardized Euclidean when all vars
// are numeric, Gower otherwise. Ties go to the lowest row index. Throws
// DataError when no variable carries distance information.
std::size_t Medoid(const DataFrame& frame, std::span<const std::string> vars,
                   const MedoidOptions& options = {});

// Medoid restricted to the candidate rows (the returned index is a row of
// `frame`). Distances are still scaled with full-frame statistics.
std::size_t MedoidOfRows(const DataFrame& frame,
                         std::span<const std::string> vars,
                         std::span<const std::size_t> rows);

// Sorted seeded sample of min(cap, n) distinct row indices.
std::vector<std::size_t> SampleRows(std::size_t num_rows, std::size_t cap,
                                    std::uint64_t seed);

}  // namespace slicevis

#endif  // SLICEVIS_FRAME_H_
