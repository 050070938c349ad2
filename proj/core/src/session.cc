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

#include "slicevis/session.h"

#include <algorithm>
#include <chrono>
#include <set>

#include "slicevis/error.h"

namespace slicevis {
namespace {

using nlohmann::json;

std::int64_t WallClockMs() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

const json& Field(const json& j, const char* key) {
  if (!j.contains(key)) {
    throw DataError(std::string("mutation is missing '") + key + "'");
  }
  return j.at(key);
}

std::string StringField(const json& j, const char* key) {
  const json& v = Field(j, key);
  if (!v.is_string()) {
    throw DataError(std::string("'") + key + "' must be a string");
  }
  return v.get<std::string>();
}

std::vector<std::string> StringList(const json& v, const char* key) {
  if (!v.is_array()) throw DataError(std::string("'") + key + "' must be a list");
  std::vector<std::string> out;
  for (const auto& item : v) {
    if (!item.is_string()) {
      throw DataError(std::string("'") + key + "' must hold names");
    }
    out.push_back(item.get<std::string>());
  }
  return out;
}

std::size_t IndexField(const json& j, const char* key) {
  const json& v = Field(j, key);
  if (!v.is_number_integer() || v.get<long long>() < 0) {
    throw DataError(std::string("'") + key + "' must be a non-negative integer");
  }
  return v.get<std::size_t>();
}

double SigmaFromJson(const json& v) {
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf" || s == "Infinity" || s == "max") return kShowAll;
    throw DataError("sigma must be a number or \"inf\"");
  }
  if (!v.is_number()) throw DataError("sigma must be a number or \"inf\"");
  return v.get<double>();
}

bool Contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

}  // namespace

const std::vector<SectionPoint>* SessionState::path() const {
  if (!tour) return nullptr;
  return tour->interpolated.empty() ? &tour->points : &tour->interpolated;
}

Session::Session(std::string id, std::shared_ptr<const DataFrame> frame,
                 std::vector<ModelHandle> models, Roles roles,
                 SessionOptions options)
    : id_(std::move(id)),
      frame_(std::move(frame)),
      models_(std::move(models)),
      options_(std::move(options)) {
  if (!frame_) throw DataError("session needs a dataset");
  if (!options_.clock) options_.clock = WallClockMs;
  roles.Validate(*frame_);
  options_.similarity.Validate();
  const auto predictors = roles.Predictors();
  for (const auto& model : models_) {
    for (const auto& field : model.schema) {
      if (!Contains(predictors, field.name)) {
        throw ModelError("model '" + model.id + "' needs '" + field.name +
                         "', which is not a predictor");
      }
    }
  }
  if (options_.color_var) frame_->column(*options_.color_var);

  auto state = std::make_shared<SessionState>();
  try {
    anchor_row_ = Medoid(*frame_, predictors, {4000, options_.seed});
  } catch (const DataError&) {
    if (!options_.initial_point) throw;
  }
  if (options_.initial_point) {
    ValidatePoint(*frame_, roles, *options_.initial_point);
    state->point = *options_.initial_point;
  } else {
    state->point = PointFromRow(*frame_, roles, anchor_row_);
  }
  state->roles = std::move(roles);
  state->similarity = options_.similarity;
  state->color_var = options_.color_var;
  Record("initial", state->point);
  state_ = std::move(state);
}

std::shared_ptr<const SessionState> Session::state() const {
  std::lock_guard lock(state_mu_);
  return state_;
}

void Session::Record(const std::string& event, const SectionPoint& point) {
  visited_.push_back({visited_.size() + 1, options_.clock(), event, point});
}

MutationResult Session::Apply(const json& mutation) {
  std::lock_guard write(write_mu_);
  if (!mutation.is_object()) throw DataError("a mutation must be an object");
  const std::string op = StringField(mutation, "op");
  const DataFrame& frame = *frame_;
  auto next = std::make_shared<SessionState>(*state());
  MutationResult result;
  std::string event;

  if (op == "setPoint") {
    const json& values = Field(mutation, "values");
    if (!values.is_object()) throw DataError("'values' must be an object");
    for (const auto& [name, value] : values.items()) {
      if (!next->point.conditioning.contains(name)) {
        throw DataError("'" + name + "' is not a conditioning variable");
      }
      next->point.conditioning[name] = ValueFromJson(frame.column(name), value);
    }
    ValidatePoint(frame, next->roles, next->point);
    event = op;
  } else if (op == "snap") {
    const auto vars = StringList(Field(mutation, "vars"), "vars");
    const json& raw = Field(mutation, "coords");
    if (!raw.is_array() || raw.size() != vars.size()) {
      throw DataError("'coords' must give one value per variable");
    }
    std::vector<double> coords;
    for (std::size_t v = 0; v < vars.size(); ++v) {
      coords.push_back(ValueFromJson(frame.column(vars[v]), raw[v]));
    }
    const std::string click =
        mutation.contains("click") ? StringField(mutation, "click") : "double";
    if (click != "single" && click != "double") {
      throw DataError("'click' must be \"single\" or \"double\"");
    }
    next->point = SnapPoint(frame, next->roles, next->point, vars, coords,
                            click == "single" ? ClickKind::kSingle
                                              : ClickKind::kDouble);
    event = op;
  } else if (op == "selectObservation") {
    const std::size_t row = IndexField(mutation, "row");
    if (row >= frame.num_rows()) throw DataError("row out of range");
    for (auto& [name, value] : next->point.conditioning) {
      value = frame.column(name).values[row];
    }
    event = op;
  } else if (op == "setSigma") {
    next->similarity.sigma = SigmaFromJson(Field(mutation, "sigma"));
    next->similarity.Validate();
  } else if (op == "setDistance") {
    next->similarity.distance = ParseDistanceKind(StringField(mutation, "distance"));
  } else if (op == "setSectionVars") {
    const auto vars = StringList(Field(mutation, "vars"), "vars");
    Roles& roles = next->roles;
    for (const auto& v : vars) {
      frame.column(v);
      if (Contains(roles.hidden, v) || (roles.response && *roles.response == v)) {
        throw DataError("'" + v + "' cannot be a section variable");
      }
    }
    if (vars.empty() || vars.size() > 2 ||
        (vars.size() == 2 && vars[0] == vars[1])) {
      throw DataError("a section needs one or two distinct variables");
    }
    std::vector<std::string> conditioning;
    for (const auto& v : roles.conditioning) {
      if (!Contains(vars, v)) conditioning.push_back(v);
    }
    for (const auto& v : roles.section) {
      if (!Contains(vars, v)) {
        conditioning.push_back(v);
        next->point.conditioning[v] = frame.column(v).values[anchor_row_];
      }
    }
    for (const auto& v : vars) next->point.conditioning.erase(v);
    roles.section = vars;
    roles.conditioning = std::move(conditioning);
    roles.Validate(frame);
    ValidatePoint(frame, roles, next->point);
    next->tour.reset();
    next->tour_step = 0;
    result.conditions_changed = true;
    event = op;
  } else if (op == "setColorVar") {
    const json& v = Field(mutation, "var");
    if (v.is_null()) {
      next->color_var.reset();
    } else if (v.is_string()) {
      frame.column(v.get<std::string>());
      next->color_var = v.get<std::string>();
    } else {
      throw DataError("'var' must be a name or null");
    }
  } else if (op == "startTour") {
    TourRequest request;
    request.kind = ParseTourKind(StringField(mutation, "kind"));
    request.length = mutation.contains("length") ? IndexField(mutation, "length") : 10;
    request.seed = mutation.contains("seed")
                       ? Field(mutation, "seed").get<std::uint64_t>()
                       : options_.seed;
    if (mutation.contains("var")) request.var = StringField(mutation, "var");
    if (mutation.contains("steps")) {
      request.steps_per_segment = static_cast<int>(IndexField(mutation, "steps"));
    }
    if (mutation.contains("cap")) request.cap = IndexField(mutation, "cap");
    Tour tour = BuildTour(frame, next->roles, next->point, models_, request);
    if (tour.points.empty()) {
      throw DataError("the " + std::string(TourKindName(request.kind)) +
                      " tour found no section points");
    }
    tour.diagnostics =
        ComputeOccupancy(frame, next->roles, tour.points, next->similarity);
    next->tour = std::make_shared<const Tour>(std::move(tour));
    next->tour_step = 0;
    next->point = next->path()->front();
    event = op;
  } else if (op == "tourStep") {
    if (!next->tour) throw StateError("no tour has been started");
    const std::size_t step = IndexField(mutation, "step");
    if (step >= next->path()->size()) {
      throw StateError("tour step " + std::to_string(step) + " out of range");
    }
    next->tour_step = step;
    next->point = (*next->path())[step];
    event = op;
  } else {
    throw DataError("unknown mutation '" + op + "'");
  }

  const auto previous = state();
  result.point_changed = !(next->point == previous->point);
  next->version = previous->version + 1;
  log_.push_back(mutation);
  if (!event.empty()) Record(event, next->point);
  {
    std::lock_guard lock(state_mu_);
    state_ = std::move(next);
  }
  return result;
}

SectionPayload Session::Section() const {
  const auto s = state();
  SectionOptions options = options_.section;
  options.color_var = s->color_var;
  return AssembleSection(*frame_, models_, s->roles, s->point, s->similarity,
                         options);
}

json Session::SectionJson() const {
  const auto s = state();
  json out = SectionPayloadToJson(Section(), *frame_);
  out["version"] = s->version;
  return out;
}

json Session::ConditionsJson() const {
  const auto s = state();
  ConditionOptions options;
  options.cap = options_.condition_cap;
  options.seed = options_.seed;
  options.similarity = s->similarity;
  json out = ConditionPayloadToJson(
      BuildConditionPayload(*frame_, s->roles, s->point, options), *frame_);
  out["version"] = s->version;
  return out;
}

json Session::StateJson() const {
  const auto s = state();
  json tour;
  if (s->tour) {
    tour = {{"kind", TourKindName(s->tour->kind)},
            {"length", s->path()->size()},
            {"step", s->tour_step}};
  }
  return {{"schema", "v1"},
          {"id", id_},
          {"version", s->version},
          {"seed", options_.seed},
          {"roles",
           {{"section", s->roles.section},
            {"conditioning", s->roles.conditioning},
            {"hidden", s->roles.hidden},
            {"response", s->roles.response ? json(*s->roles.response) : json()}}},
          {"models", [&] {
             json ids = json::array();
             for (const auto& m : models_) ids.push_back(m.id);
             return ids;
           }()},
          {"point", PointToJson(s->point, *frame_)},
          {"similarity",
           {{"distance", DistanceName(s->similarity.distance)},
            {"sigma", s->similarity.show_all() ? json("inf")
                                               : json(s->similarity.sigma)},
            {"fadeBins", s->similarity.fade_bins}}},
          {"colorVar", s->color_var ? json(*s->color_var) : json()},
          {"tour", tour}};
}

json Session::TourJson() const {
  const auto s = state();
  if (!s->tour) throw StateError("no tour has been started");
  json out = TourToJson(*s->tour, *frame_);
  out["step"] = s->tour_step;
  return out;
}

std::vector<json> Session::MutationLog() const {
  std::lock_guard write(write_mu_);
  return log_;
}

std::vector<VisitedPoint> Session::Visited() const {
  std::lock_guard write(write_mu_);
  return visited_;
}

std::string Session::VisitedCsv() const {
  const auto visits = Visited();
  const DataFrame& frame = *frame_;
  std::set<std::string> names;
  for (const auto& v : visits) {
    for (const auto& [name, value] : v.point.conditioning) names.insert(name);
    for (const auto& [name, value] : v.point.hidden) names.insert(name);
  }
  std::vector<std::string> ordered;
  for (const auto& name : frame.ColumnNames()) {
    if (names.contains(name)) ordered.push_back(name);
  }

  std::vector<Column> columns;
  columns.push_back({"visit", ColumnKind::kNumeric, {}, {}});
  columns.push_back({"timestamp_ms", ColumnKind::kNumeric, {}, {}});
  std::set<std::string> events;
  for (const auto& v : visits) events.insert(v.event);
  Column event{"event", ColumnKind::kCategorical, {},
               {events.begin(), events.end()}};
  for (const auto& v : visits) {
    columns[0].values.push_back(static_cast<double>(v.visit));
    columns[1].values.push_back(static_cast<double>(v.timestamp_ms));
    event.values.push_back(*event.LevelCode(v.event));
  }
  columns.push_back(std::move(event));

  // A variable absent from a visit (it was a section variable then) is
  // written as NA.
  std::vector<std::vector<std::string>> cells(visits.size());
  for (const auto& name : ordered) {
    const Column& source = frame.column(name);
    for (std::size_t i = 0; i < visits.size(); ++i) {
      const auto& p = visits[i].point;
      std::optional<double> value;
      if (const auto it = p.conditioning.find(name); it != p.conditioning.end()) {
        value = it->second;
      } else if (const auto h = p.hidden.find(name); h != p.hidden.end()) {
        value = h->second;
      }
      if (!value) {
        cells[i].push_back("NA");
      } else if (source.is_numeric()) {
        cells[i].push_back(FormatNumber(*value));
      } else {
        cells[i].push_back(source.levels[static_cast<std::size_t>(*value)]);
      }
    }
  }
  for (const auto& name : ordered) {
    columns.push_back({name, ColumnKind::kCategorical, {}, {}});
  }
  // Render through WriteCsv so quoting rules stay in one place: every cell
  // becomes a level of a per-column categorical.
  for (std::size_t c = 0; c < ordered.size(); ++c) {
    Column& col = columns[3 + c];
    std::set<std::string> levels;
    for (const auto& row : cells) levels.insert(row[c]);
    col.levels.assign(levels.begin(), levels.end());
    for (const auto& row : cells) col.values.push_back(*col.LevelCode(row[c]));
  }
  return WriteCsv(DataFrame(std::move(columns)));
}

json Session::VisitedJson() const {
  json points = json::array();
  for (const auto& v : Visited()) {
    points.push_back({{"visit", v.visit},
                      {"timestamp", v.timestamp_ms},
                      {"event", v.event},
                      {"point", PointToJson(v.point, *frame_)}});
  }
  return {{"schema", "v1"},
          {"session", id_},
          {"seed", options_.seed},
          {"points", std::move(points)}};
}

}  // namespace slicevis
