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

#include "slicevis/frame.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <utility>

#include "slicevis/error.h"
#include "slicevis/metric.h"

namespace slicevis {
namespace {

std::string_view Trim(std::string_view s) {
  const auto not_space = [](char c) {
    return c != ' ' && c != '\t' && c != '\r' && c != '\n';
  };
  while (!s.empty() && !not_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && !not_space(s.back())) s.remove_suffix(1);
  return s;
}

bool IsMissing(std::string_view cell) {
  cell = Trim(cell);
  return cell.empty() || cell == "NA";
}

std::optional<double> ParseNumber(std::string_view cell) {
  cell = Trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  if (cell.empty()) return std::nullopt;
  double value = 0.0;
  const auto [ptr, ec] =
      std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    return std::nullopt;
  }
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

// Splits RFC-4180 records. Quoted fields may contain separators, doubled
// quotes and line breaks.
std::vector<std::vector<std::string>> ParseRecords(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_quoted = false;
  bool any_in_record = false;

  auto end_field = [&] {
    record.push_back(field_quoted ? field : std::string(Trim(field)));
    field.clear();
    field_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = record.size() == 1 && record[0].empty() &&
                       !any_in_record;
    if (!blank) records.push_back(std::move(record));
    record.clear();
    any_in_record = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (Trim(field).empty()) {
          field.clear();
          in_quotes = true;
          field_quoted = true;
          any_in_record = true;
        } else {
          field.push_back(c);
        }
        break;
      case ',':
        end_field();
        any_in_record = true;
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
        end_record();
        break;
      case '\n':
        end_record();
        break;
      default:
        field.push_back(c);
        any_in_record = true;
    }
  }
  if (in_quotes) throw DataError("unterminated quoted field in CSV");
  if (!field.empty() || any_in_record || !record.empty()) end_record();
  return records;
}

bool NeedsQuoting(std::string_view s) {
  if (s.empty()) return false;
  if (s.front() == ' ' || s.back() == ' ') return true;
  return s.find_first_of(",\"\r\n") != std::string_view::npos;
}

void AppendField(std::string& out, std::string_view s) {
  if (!NeedsQuoting(s)) {
    out.append(s);
    return;
  }
  out.push_back('"');
  for (const char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

}  // namespace

std::string_view KindName(ColumnKind kind) {
  return kind == ColumnKind::kNumeric ? "numeric" : "categorical";
}

ColumnKind ParseColumnKind(std::string_view text) {
  text = Trim(text);
  if (text == "numeric" || text == "num") return ColumnKind::kNumeric;
  if (text == "categorical" || text == "cat" || text == "factor") {
    return ColumnKind::kCategorical;
  }
  throw DataError("unknown column kind '" + std::string(text) + "'");
}

std::optional<int> Column::LevelCode(std::string_view label) const {
  const auto it = std::find(levels.begin(), levels.end(), label);
  if (it == levels.end()) return std::nullopt;
  return static_cast<int>(it - levels.begin());
}

DataFrame::DataFrame(std::vector<Column> columns)
    : columns_(std::move(columns)) {
  num_rows_ = columns_.empty() ? 0 : columns_.front().values.size();
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    const Column& col = columns_[i];
    if (col.values.size() != num_rows_) {
      throw DataError("column '" + col.name + "' has " +
                      std::to_string(col.values.size()) + " values, expected " +
                      std::to_string(num_rows_));
    }
    if (!index_.emplace(col.name, i).second) {
      throw DataError("duplicate column name '" + col.name + "'");
    }
    if (col.kind == ColumnKind::kCategorical) {
      const double limit = static_cast<double>(col.levels.size());
      for (const double v : col.values) {
        if (!(v >= 0.0 && v < limit) || v != std::floor(v)) {
          throw DataError("column '" + col.name +
                          "' holds a code outside its levels");
        }
      }
    }
  }
}

const Column& DataFrame::column(std::string_view name) const {
  const auto index = IndexOf(name);
  if (!index) throw DataError("unknown column '" + std::string(name) + "'");
  return columns_[*index];
}

std::optional<std::size_t> DataFrame::IndexOf(std::string_view name) const {
  const auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> DataFrame::ColumnNames() const {
  std::vector<std::string> names;
  names.reserve(columns_.size());
  for (const Column& col : columns_) names.push_back(col.name);
  return names;
}

DataFrame DataFrame::SelectRows(std::span<const std::size_t> rows) const {
  std::vector<Column> out;
  out.reserve(columns_.size());
  for (const Column& col : columns_) {
    Column copy{col.name, col.kind, {}, col.levels};
    copy.values.reserve(rows.size());
    for (const std::size_t r : rows) copy.values.push_back(col.values.at(r));
    out.push_back(std::move(copy));
  }
  return DataFrame(std::move(out));
}

DataFrame DataFrame::SelectColumns(std::span<const std::string> names) const {
  std::vector<Column> out;
  out.reserve(names.size());
  for (const std::string& name : names) out.push_back(column(name));
  return DataFrame(std::move(out));
}

SchemaOverride ParseSchemaOverride(std::string_view text) {
  SchemaOverride result;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    std::string_view view = Trim(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = Trim(view.substr(0, hash));
    }
    if (view.empty() || view.front() == '[') continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw DataError("schema override line " + std::to_string(line_number) +
                      ": expected name=kind");
    }
    result[std::string(Trim(view.substr(0, eq)))] =
        ParseColumnKind(view.substr(eq + 1));
  }
  return result;
}

IngestResult IngestCsv(std::string_view bytes,
                       const SchemaOverride& schema_override) {
  if (bytes.size() >= 3 && bytes.substr(0, 3) == "\xEF\xBB\xBF") {
    bytes.remove_prefix(3);
  }
  if (Trim(bytes).empty()) throw DataError("empty file");
  auto records = ParseRecords(bytes);
  if (records.empty()) throw DataError("empty file");

  const std::vector<std::string> header = records.front();
  const std::size_t width = header.size();
  std::set<std::string> seen;
  for (const std::string& name : header) {
    if (name.empty()) throw DataError("empty column name in header");
    if (!seen.insert(name).second) {
      throw DataError("duplicate column name '" + name + "'");
    }
  }
  for (const auto& [name, kind] : schema_override) {
    if (!seen.count(name)) {
      throw DataError("schema override names unknown column '" + name + "'");
    }
  }

  std::vector<const std::vector<std::string>*> complete;
  std::size_t dropped = 0;
  for (std::size_t r = 1; r < records.size(); ++r) {
    const auto& rec = records[r];
    if (rec.size() != width) {
      throw DataError("CSV record " + std::to_string(r + 1) + " has " +
                      std::to_string(rec.size()) + " fields, header has " +
                      std::to_string(width));
    }
    if (std::any_of(rec.begin(), rec.end(), IsMissing)) {
      ++dropped;
      continue;
    }
    complete.push_back(&rec);
  }
  if (complete.empty()) throw DataError("zero usable rows");

  std::vector<Column> columns;
  columns.reserve(width);
  for (std::size_t c = 0; c < width; ++c) {
    Column col;
    col.name = header[c];
    const auto override_it = schema_override.find(col.name);
    bool numeric = true;
    if (override_it != schema_override.end()) {
      numeric = override_it->second == ColumnKind::kNumeric;
    } else {
      for (const auto* rec : complete) {
        if (!ParseNumber((*rec)[c])) {
          numeric = false;
          break;
        }
      }
    }
    col.values.reserve(complete.size());
    if (numeric) {
      col.kind = ColumnKind::kNumeric;
      for (const auto* rec : complete) {
        const auto value = ParseNumber((*rec)[c]);
        if (!value) {
          throw DataError("column '" + col.name + "' is declared numeric but '" +
                          (*rec)[c] + "' is not a number");
        }
        col.values.push_back(*value);
      }
    } else {
      col.kind = ColumnKind::kCategorical;
      std::set<std::string> levels;
      for (const auto* rec : complete) levels.insert((*rec)[c]);
      col.levels.assign(levels.begin(), levels.end());
      for (const auto* rec : complete) {
        const auto it = std::lower_bound(col.levels.begin(), col.levels.end(),
                                         (*rec)[c]);
        col.values.push_back(static_cast<double>(it - col.levels.begin()));
      }
    }
    columns.push_back(std::move(col));
  }
  return {DataFrame(std::move(columns)), dropped};
}

IngestResult IngestCsvFile(const std::filesystem::path& path,
                           const SchemaOverride& schema_override) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return IngestCsv(buffer.str(), schema_override);
}

std::string FormatNumber(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) return std::to_string(value);
  return std::string(buf, ptr);
}

std::string WriteCsv(const DataFrame& frame) {
  std::string out;
  for (std::size_t c = 0; c < frame.num_columns(); ++c) {
    if (c) out.push_back(',');
    AppendField(out, frame.column(c).name);
  }
  out.push_back('\n');
  for (std::size_t r = 0; r < frame.num_rows(); ++r) {
    for (std::size_t c = 0; c < frame.num_columns(); ++c) {
      if (c) out.push_back(',');
      const Column& col = frame.column(c);
      if (col.is_numeric()) {
        out += FormatNumber(col.values[r]);
      } else {
        AppendField(out, col.label(r));
      }
    }
    out.push_back('\n');
  }
  return out;
}

Roles Roles::Complete(const DataFrame& frame, std::vector<std::string> section,
                      std::vector<std::string> hidden,
                      std::optional<std::string> response) {
  Roles roles;
  roles.section = std::move(section);
  roles.hidden = std::move(hidden);
  roles.response = std::move(response);
  for (const std::string& name : frame.ColumnNames()) {
    const bool taken =
        std::find(roles.section.begin(), roles.section.end(), name) !=
            roles.section.end() ||
        std::find(roles.hidden.begin(), roles.hidden.end(), name) !=
            roles.hidden.end() ||
        (roles.response && *roles.response == name);
    if (!taken) roles.conditioning.push_back(name);
  }
  return roles;
}

void Roles::Validate(const DataFrame& frame) const {
  if (section.empty() || section.size() > 2) {
    throw DataError("section variables must number 1 or 2, got " +
                    std::to_string(section.size()));
  }
  std::set<std::string> seen;
  auto claim = [&](const std::string& name, std::string_view role) {
    if (!frame.HasColumn(name)) {
      throw DataError("unknown " + std::string(role) + " variable '" + name +
                      "'");
    }
    if (!seen.insert(name).second) {
      throw DataError("variable '" + name + "' is assigned to more than one role");
    }
  };
  for (const auto& name : section) claim(name, "section");
  for (const auto& name : conditioning) claim(name, "conditioning");
  for (const auto& name : hidden) claim(name, "hidden");
  if (response) claim(*response, "response");
  for (const std::string& name : frame.ColumnNames()) {
    if (!seen.count(name)) {
      throw DataError("column '" + name + "' has no role");
    }
  }
}

std::vector<std::string> Roles::Predictors() const {
  std::vector<std::string> out = section;
  out.insert(out.end(), conditioning.begin(), conditioning.end());
  out.insert(out.end(), hidden.begin(), hidden.end());
  return out;
}

SectionPoint PointFromRow(const DataFrame& frame, const Roles& roles,
                          std::size_t row) {
  if (row >= frame.num_rows()) {
    throw DataError("row " + std::to_string(row) + " out of range");
  }
  SectionPoint point;
  for (const auto& name : roles.conditioning) {
    point.conditioning[name] = frame.column(name).values[row];
  }
  for (const auto& name : roles.hidden) {
    point.hidden[name] = frame.column(name).values[row];
  }
  return point;
}

void ValidatePoint(const DataFrame& frame, const Roles& roles,
                   const SectionPoint& point) {
  auto check = [&](const std::map<std::string, double>& values,
                   const std::vector<std::string>& names,
                   std::string_view role) {
    if (values.size() != names.size()) {
      throw DataError("section point must set exactly the " +
                      std::string(role) + " variables");
    }
    for (const auto& name : names) {
      const auto it = values.find(name);
      if (it == values.end()) {
        throw DataError("section point is missing " + std::string(role) +
                        " variable '" + name + "'");
      }
      const Column& col = frame.column(name);
      const double v = it->second;
      if (!std::isfinite(v)) {
        throw DataError("section point value for '" + name + "' is not finite");
      }
      if (!col.is_numeric() &&
          (v != std::floor(v) || v < 0 ||
           v >= static_cast<double>(col.levels.size()))) {
        throw DataError("invalid level for '" + name + "'");
      }
    }
  };
  check(point.conditioning, roles.conditioning, "conditioning");
  check(point.hidden, roles.hidden, "hidden");
}

NumericStats ScalingStats::ComputeColumn(const Column& column) {
  NumericStats s;
  const auto& v = column.values;
  if (v.empty()) return s;
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  s.min = *lo;
  s.max = *hi;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) /
           static_cast<double>(v.size());
  if (v.size() > 1 && s.max > s.min) {
    double ss = 0.0;
    for (const double x : v) ss += (x - s.mean) * (x - s.mean);
    s.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return s;
}

ScalingStats ScalingStats::Compute(const DataFrame& frame) {
  ScalingStats stats;
  for (const Column& col : frame.columns()) {
    if (col.is_numeric()) stats.stats_[col.name] = ComputeColumn(col);
  }
  return stats;
}

const NumericStats& ScalingStats::at(std::string_view name) const {
  const auto it = stats_.find(name);
  if (it == stats_.end()) {
    throw DataError("no numeric statistics for '" + std::string(name) + "'");
  }
  return it->second;
}

std::vector<std::size_t> SampleRows(std::size_t num_rows, std::size_t cap,
                                    std::uint64_t seed) {
  std::vector<std::size_t> rows(num_rows);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  if (cap >= num_rows) return rows;
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < cap; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, num_rows - 1);
    std::swap(rows[i], rows[pick(rng)]);
  }
  rows.resize(cap);
  std::sort(rows.begin(), rows.end());
  return rows;
}

namespace {

std::size_t MedoidInSpace(const FeatureSpace& space,
                          std::span<const std::size_t> rows) {
  const std::size_t m = rows.size();
  const std::size_t dims = space.dims();
  const DistanceKind kind = space.clustering_distance();
  std::vector<double> coords(m * dims);
  for (std::size_t i = 0; i < m; ++i) {
    const auto c = space.RowCoordinates(rows[i]);
    std::copy(c.begin(), c.end(), coords.begin() + i * dims);
  }
  std::vector<double> total(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    std::span<const double> a(coords.data() + i * dims, dims);
    for (std::size_t j = i + 1; j < m; ++j) {
      const double d =
          space.Distance(a, {coords.data() + j * dims, dims}, kind);
      total[i] += d;
      total[j] += d;
    }
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < m; ++i) {
    if (total[i] < total[best] ||
        (total[i] == total[best] && rows[i] < rows[best])) {
      best = i;
    }
  }
  return rows[best];
}

}  // namespace

std::size_t Medoid(const DataFrame& frame, std::span<const std::string> vars,
                   const MedoidOptions& options) {
  if (vars.empty()) throw DataError("medoid needs at least one variable");
  if (options.cap < 1) throw DataError("medoid cap must be at least 1");
  if (frame.num_rows() == 0) throw DataError("medoid of an empty frame");
  FeatureSpace space(frame, {vars.begin(), vars.end()});
  if (space.dims() == 0) {
    throw DataError("medoid undefined: every variable is constant");
  }
  const auto rows = SampleRows(frame.num_rows(), options.cap, options.seed);
  return MedoidInSpace(space, rows);
}

std::size_t MedoidOfRows(const DataFrame& frame,
                         std::span<const std::string> vars,
                         std::span<const std::size_t> rows) {
  if (rows.empty()) throw DataError("medoid of an empty row set");
  FeatureSpace space(frame, {vars.begin(), vars.end()});
  if (space.dims() == 0) return *std::min_element(rows.begin(), rows.end());
  return MedoidInSpace(space, rows);
}

}  // namespace slicevis
