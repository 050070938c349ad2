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

// Interactive session state: roles, the current section point, similarity
// settings and the active tour, changed only through logged mutations so a
// session can be replayed exactly.

#ifndef SLICEVIS_SESSION_H_
#define SLICEVIS_SESSION_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "slicevis/frame.h"
#include "slicevis/metric.h"
#include "slicevis/model.h"
#include "slicevis/section.h"
#include "slicevis/tour.h"

namespace slicevis {

struct SessionState {
  Roles roles;
  SectionPoint point;
  SimilarityConfig similarity;
  std::optional<std::string> color_var;
  std::shared_ptr<const Tour> tour;
  std::size_t tour_step = 0;
  std::uint64_t version = 0;

  // Stops of the active tour: the interpolated path when there is one.
  const std::vector<SectionPoint>* path() const;
};

struct VisitedPoint {
  std::size_t visit = 0;
  std::int64_t timestamp_ms = 0;
  std::string event;
  SectionPoint point;
};

struct SessionOptions {
  std::optional<SectionPoint> initial_point;
  SimilarityConfig similarity;
  std::optional<std::string> color_var;
  std::uint64_t seed = 0;
  SectionOptions section;
  std::size_t condition_cap = 1000;
  // Milliseconds since the epoch; replaceable for reproducible exports.
  std::function<std::int64_t()> clock;
};

struct MutationResult {
  bool point_changed = false;
  bool conditions_changed = false;  // the conditioning set changed
};

// Thread-safe: mutations are serialized, and readers always see a complete
// state snapshot.
class Session {
 public:
  // Throws DataError for invalid roles or point, ModelError when a model
  // needs a column that is not a predictor.
  Session(std::string id, std::shared_ptr<const DataFrame> frame,
          std::vector<ModelHandle> models, Roles roles,
          SessionOptions options = {});

  const std::string& id() const { return id_; }
  const DataFrame& frame() const { return *frame_; }
  const std::vector<ModelHandle>& models() const { return models_; }
  std::uint64_t seed() const { return options_.seed; }
  std::shared_ptr<const SessionState> state() const;

  // Applies one mutation:
  //   {"op":"setPoint","values":{"x":1.5,"g":"b"}}
  //   {"op":"snap","vars":["x","z"],"coords":[0.3,2],"click":"double"}
  //   {"op":"selectObservation","row":12}
  //   {"op":"setSigma","sigma":0.5}            ("inf" shows everything)
  //   {"op":"setDistance","distance":"gower"}
  //   {"op":"setSectionVars","vars":["x"]}
  //   {"op":"setColorVar","var":"g"}           (null clears it)
  //   {"op":"startTour","kind":"kmed","length":10,"seed":3,"steps":4}
  //   {"op":"tourStep","step":2}
  // Throws DataError for invalid values, StateError for a tour step without
  // a tour or out of range. A failed mutation leaves the state unchanged.
  MutationResult Apply(const nlohmann::json& mutation);

  SectionPayload Section() const;
  nlohmann::json SectionJson() const;
  nlohmann::json ConditionsJson() const;
  nlohmann::json StateJson() const;
  nlohmann::json TourJson() const;

  std::vector<nlohmann::json> MutationLog() const;
  std::vector<VisitedPoint> Visited() const;
  // Visit order; re-ingestable CSV with visit, timestamp_ms and event columns
  // followed by the conditioning and hidden variables.
  std::string VisitedCsv() const;
  nlohmann::json VisitedJson() const;

 private:
  void Record(const std::string& event, const SectionPoint& point);

  std::string id_;
  std::shared_ptr<const DataFrame> frame_;
  std::vector<ModelHandle> models_;
  SessionOptions options_;
  std::size_t anchor_row_ = 0;

  mutable std::mutex write_mu_;
  mutable std::mutex state_mu_;
  std::shared_ptr<const SessionState> state_;
  std::vector<nlohmann::json> log_;
  std::vector<VisitedPoint> visited_;
};

}  // namespace slicevis

#endif  // SLICEVIS_SESSION_H_
