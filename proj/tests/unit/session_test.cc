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

#include <algorithm>
#include <atomic>
#include <random>
#include <thread>

#include <gtest/gtest.h>

#include "generators.h"
#include "slicevis/error.h"
#include "slicevis/session.h"

namespace slicevis {
namespace {

using nlohmann::json;

class SessionTest : public ::testing::Test {
 protected:
  void SetUp() override {
    std::mt19937_64 rng(81);
    frame_ = std::make_shared<DataFrame>(testgen::WithResponse(
        testgen::RandomFrame({200, 3, 1, 3, 0.0}, rng), rng, false));
    std::vector<std::string> predictors{"x1", "x2", "x3", "g1"};
    models_ = {FitBuiltin(ModelSpec::Parse("linear"), *frame_, "y", predictors, "lm"),
               FitBuiltin(ModelSpec::Parse("knn:k=5"), *frame_, "y", predictors, "nn")};
    roles_ = Roles::Complete(*frame_, {"x1"}, {"x3"}, "y");
  }

  SessionOptions Options() const {
    SessionOptions options;
    options.seed = 4;
    auto tick = std::make_shared<std::int64_t>(1000);
    options.clock = [tick] { return (*tick)++; };
    return options;
  }

  std::unique_ptr<Session> Make() const {
    return std::make_unique<Session>("s", frame_, models_, roles_, Options());
  }

  std::shared_ptr<DataFrame> frame_;
  std::vector<ModelHandle> models_;
  Roles roles_;
};

TEST_F(SessionTest, StartsAtThePredictorMedoid) {
  const auto s = Make();
  const std::size_t medoid = Medoid(*frame_, roles_.Predictors(), {4000, 4});
  EXPECT_EQ(s->state()->point, PointFromRow(*frame_, roles_, medoid));
  EXPECT_EQ(s->state()->version, 0u);
  ASSERT_EQ(s->Visited().size(), 1u);
  EXPECT_EQ(s->Visited()[0].event, "initial");
  EXPECT_EQ(s->Visited()[0].timestamp_ms, 1000);
}

TEST_F(SessionTest, RejectsModelsNeedingNonPredictors) {
  const auto bad = FitBuiltin(ModelSpec::Parse("kde"), *frame_, std::nullopt,
                              {"x1", "y"}, "bad");
  EXPECT_THROW(Session("s", frame_, {bad}, roles_, Options()), ModelError);
  Roles broken = roles_;
  broken.section.clear();
  EXPECT_THROW(Session("s", frame_, models_, broken, Options()), DataError);
}

TEST_F(SessionTest, PointMutations) {
  const auto s = Make();
  auto r = s->Apply({{"op", "setPoint"}, {"values", {{"x2", 0.25}, {"g1", "c"}}}});
  EXPECT_TRUE(r.point_changed);
  EXPECT_FALSE(r.conditions_changed);
  EXPECT_EQ(s->state()->point.conditioning.at("x2"), 0.25);
  EXPECT_EQ(s->state()->point.conditioning.at("g1"), 2.0);

  s->Apply({{"op", "selectObservation"}, {"row", 17}});
  EXPECT_EQ(s->state()->point.conditioning,
            PointFromRow(*frame_, roles_, 17).conditioning);

  s->Apply({{"op", "snap"}, {"vars", {"x2"}}, {"coords", {1.0}}, {"click", "single"}});
  EXPECT_EQ(s->state()->point.conditioning.at("x2"), 1.0);
  s->Apply({{"op", "snap"}, {"vars", {"x2", "g1"}}, {"coords", {1.0, "a"}}});
  EXPECT_EQ(s->state()->point.conditioning.at("g1"), 0.0);

  r = s->Apply({{"op", "setSigma"}, {"sigma", "inf"}});
  EXPECT_FALSE(r.point_changed);
  EXPECT_TRUE(s->state()->similarity.show_all());
  s->Apply({{"op", "setSigma"}, {"sigma", 0.5}});
  s->Apply({{"op", "setDistance"}, {"distance", "gower"}});
  EXPECT_EQ(s->state()->similarity.distance, DistanceKind::kGower);
  s->Apply({{"op", "setColorVar"}, {"var", "g1"}});
  EXPECT_EQ(s->state()->color_var, "g1");
  s->Apply({{"op", "setColorVar"}, {"var", nullptr}});
  EXPECT_FALSE(s->state()->color_var);
  EXPECT_EQ(s->state()->version, 9u);
  EXPECT_EQ(s->MutationLog().size(), 9u);
}

TEST_F(SessionTest, FailedMutationsLeaveStateUntouched) {
  const auto s = Make();
  const auto before = s->StateJson();
  const json bad[] = {
      json::array(),
      {{"op", "fly"}},
      {{"op", "setPoint"}, {"values", {{"x1", 1.0}}}},
      {{"op", "setPoint"}, {"values", {{"g1", "zz"}}}},
      {{"op", "setPoint"}, {"values", {{"x2", 1.0}, {"x3", 2.0}}}},
      {{"op", "selectObservation"}, {"row", 200}},
      {{"op", "selectObservation"}, {"row", -1}},
      {{"op", "setSigma"}, {"sigma", -1}},
      {{"op", "setSigma"}, {"sigma", "big"}},
      {{"op", "setDistance"}, {"distance", "l1"}},
      {{"op", "setSectionVars"}, {"vars", {"y"}}},
      {{"op", "setSectionVars"}, {"vars", {"x1", "x2", "g1"}}},
      {{"op", "setSectionVars"}, {"vars", {"x3"}}},
      {{"op", "setColorVar"}, {"var", 3}},
      {{"op", "startTour"}, {"kind", "alongVar"}},
      {{"op", "snap"}, {"vars", {"x2"}}, {"coords", {1.0, 2.0}}},
  };
  for (const auto& m : bad) {
    EXPECT_THROW(s->Apply(m), DataError) << m.dump();
  }
  EXPECT_THROW(s->Apply({{"op", "tourStep"}, {"step", 0}}), StateError);
  EXPECT_EQ(s->StateJson(), before);
  EXPECT_TRUE(s->MutationLog().empty());
  EXPECT_EQ(s->Visited().size(), 1u);
}

TEST_F(SessionTest, SectionVarsSwapThroughTheAnchor) {
  const auto s = Make();
  const std::size_t anchor = Medoid(*frame_, roles_.Predictors(), {4000, 4});
  s->Apply({{"op", "startTour"}, {"kind", "random"}, {"length", 3}});
  ASSERT_TRUE(s->state()->tour);
  const auto r = s->Apply({{"op", "setSectionVars"}, {"vars", {"x2", "g1"}}});
  EXPECT_TRUE(r.conditions_changed);
  const auto st = s->state();
  EXPECT_EQ(st->roles.section, (std::vector<std::string>{"x2", "g1"}));
  EXPECT_EQ(st->roles.conditioning, (std::vector<std::string>{"x1"}));
  EXPECT_EQ(st->point.conditioning.at("x1"), frame_->column("x1").values[anchor]);
  EXPECT_FALSE(st->tour);
  EXPECT_EQ(s->Section().plot_type, PlotType::kC);
}

TEST_F(SessionTest, ToursMoveThePoint) {
  const auto s = Make();
  s->Apply({{"op", "startTour"}, {"kind", "kmed"}, {"length", 4}, {"steps", 3}});
  const auto st = s->state();
  ASSERT_TRUE(st->tour);
  ASSERT_TRUE(st->tour->diagnostics);
  const auto& path = *st->path();
  EXPECT_EQ(path.size(), (st->tour->points.size() - 1) * 3 + 1);
  EXPECT_EQ(st->point, path.front());
  s->Apply({{"op", "tourStep"}, {"step", 3}});
  EXPECT_EQ(s->state()->point, st->tour->points[1]);
  EXPECT_THROW(s->Apply({{"op", "tourStep"}, {"step", path.size()}}), StateError);
  const json tour = s->TourJson();
  EXPECT_EQ(tour["step"], 3);
  EXPECT_EQ(tour["kind"], "kmed");
  EXPECT_TRUE(tour.contains("diagnostics"));
}

TEST_F(SessionTest, ReplayingTheLogReproducesPayloads) {
  const auto a = Make();
  const json script[] = {
      {{"op", "setSigma"}, {"sigma", 0.7}},
      {{"op", "startTour"}, {"kind", "lof"}, {"length", 5}},
      {{"op", "tourStep"}, {"step", 2}},
      {{"op", "snap"}, {"vars", {"x2", "g1"}}, {"coords", {0.1, "b"}}},
      {{"op", "setSectionVars"}, {"vars", {"x1", "x2"}}},
      {{"op", "setDistance"}, {"distance", "euclidean"}},
      {{"op", "startTour"}, {"kind", "kmeans"}, {"length", 3}, {"seed", 11}},
  };
  for (const auto& m : script) a->Apply(m);
  const auto b = Make();
  for (const auto& m : a->MutationLog()) b->Apply(m);
  EXPECT_EQ(a->SectionJson().dump(), b->SectionJson().dump());
  EXPECT_EQ(a->StateJson().dump(), b->StateJson().dump());
  EXPECT_EQ(a->ConditionsJson().dump(), b->ConditionsJson().dump());
  EXPECT_EQ(a->TourJson().dump(), b->TourJson().dump());
  EXPECT_EQ(a->VisitedCsv(), b->VisitedCsv());
}

TEST_F(SessionTest, VisitedCsvIsReingestable) {
  const auto s = Make();
  s->Apply({{"op", "selectObservation"}, {"row", 3}});
  s->Apply({{"op", "setPoint"}, {"values", {{"g1", "a"}}}});
  const auto csv = s->VisitedCsv();
  const auto back = IngestCsv(csv);
  EXPECT_EQ(back.dropped_rows, 0u);
  ASSERT_EQ(back.frame.num_rows(), 3u);
  EXPECT_EQ(back.frame.ColumnNames(),
            (std::vector<std::string>{"visit", "timestamp_ms", "event", "x2", "x3",
                                      "g1"}));
  EXPECT_EQ(back.frame.column("visit").values, (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(back.frame.column("event").label(1), "selectObservation");
  EXPECT_EQ(back.frame.column("x2").values[1], frame_->column("x2").values[3]);
  EXPECT_EQ(back.frame.column("g1").label(2), "a");

  s->Apply({{"op", "setSectionVars"}, {"vars", {"x2"}}});
  // x1 was a section variable for the first three visits, x2 is one now.
  const std::string mixed = s->VisitedCsv();
  EXPECT_EQ(std::count(mixed.begin(), mixed.end(), 'N'), 4);
  EXPECT_NE(mixed.find(",NA,"), std::string::npos);
  EXPECT_THROW(IngestCsv(mixed), DataError);
  const json j = s->VisitedJson();
  EXPECT_EQ(j["points"].size(), 4u);
}

TEST_F(SessionTest, ReadersSeeCompleteSnapshots) {
  const auto s = Make();
  std::atomic<bool> done{false};
  std::atomic<int> bad{0};
  std::thread reader([&] {
    std::uint64_t last = 0;
    while (!done) {
      const auto st = s->state();
      if (st->version < last) ++bad;
      last = st->version;
      // A section payload is always assembled from one consistent state.
      if (st->point.conditioning.size() != st->roles.conditioning.size()) ++bad;
    }
  });
  for (int i = 0; i < 200; ++i) {
    s->Apply({{"op", "selectObservation"}, {"row", i % 200}});
    if (i % 50 == 0) {
      s->Apply({{"op", "setSectionVars"},
                {"vars", {i % 100 == 0 ? "x2" : "x1"}}});
    }
  }
  done = true;
  reader.join();
  EXPECT_EQ(bad.load(), 0);
  EXPECT_EQ(s->state()->version, 204u);
}

}  // namespace
}  // namespace slicevis
