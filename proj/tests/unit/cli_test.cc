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

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <httplib.h>

#include "generators.h"
#include "slicevis_tools/cli.h"
#include "slicevis/model.h"
#include "slicevis/session.h"
#include "slicevis_tools/simulate.h"

namespace slicevis::tools {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct CliRun {
  int code;
  std::string out;
  std::string err;
};

CliRun Cli(std::initializer_list<std::string> args) {
  std::vector<std::string> owned{"slicevis"};
  owned.insert(owned.end(), args);
  std::vector<const char*> argv;
  for (const auto& a : owned) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = RunCli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string Slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("slicevis_cli_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
            "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
    std::mt19937_64 rng(12);
    frame_ = testgen::WithResponse(testgen::RandomFrame({120, 3, 1, 3, 0.0}, rng), rng,
                                   false);
    data_ = Write("data.csv", WriteCsv(frame_));
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string Write(const std::string& name, const std::string& text) {
    const fs::path path = dir_ / name;
    std::ofstream(path, std::ios::binary) << text;
    return path.string();
  }

  fs::path dir_;
  DataFrame frame_;
  std::string data_;
};

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(Cli({"--help"}).code, kExitOk);
  EXPECT_EQ(Cli({}).code, kExitUsage);
  EXPECT_EQ(Cli({"transmogrify"}).code, kExitUsage);
  const CliRun missing = Cli({"ingest"});
  EXPECT_EQ(missing.code, kExitUsage);
  EXPECT_NE(missing.err.find("--data"), std::string::npos);
  EXPECT_EQ(Cli({"ingest", "--data", data_, "--bogus"}).code, kExitUsage);
  EXPECT_EQ(Cli({"fit", "--data", data_}).code, kExitUsage);
}

TEST_F(CliTest, SimulateIsDeterministicAndMatchesTheLibrary) {
  const CliRun a = Cli({"simulate", "--kind", "mixture", "--n", "60", "--p", "4",
                     "--seed", "9"});
  ASSERT_EQ(a.code, kExitOk) << a.err;
  EXPECT_EQ(a.out, Cli({"simulate", "--kind", "mixture", "--n", "60", "--p", "4",
                        "--seed", "9"}).out);
  SimOptions options;
  options.kind = SimKind::kMixture;
  options.n = 60;
  options.p = 4;
  options.seed = 9;
  EXPECT_EQ(a.out, WriteCsv(Simulate(options)));
  const IngestResult r = IngestCsv(a.out);
  EXPECT_EQ(r.frame.num_rows(), 60u);
  EXPECT_EQ(r.frame.ColumnNames(), (std::vector<std::string>{"x1", "x2", "x3", "x4"}));
  EXPECT_EQ(Cli({"simulate", "--kind", "cauchy"}).code, kExitData);

  const fs::path out = dir_ / "sim.csv";
  EXPECT_EQ(Cli({"--out", out.string(), "simulate", "--n", "10", "--p", "2"}).code,
            kExitOk);
  EXPECT_EQ(IngestCsv(Slurp(out)).frame.num_rows(), 10u);
}

TEST_F(CliTest, IngestSummarizesAndReportsDataErrors) {
  const CliRun r = Cli({"ingest", "--data", data_});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json summary = json::parse(r.out);
  EXPECT_EQ(summary["rows"], 120);
  EXPECT_EQ(summary["columns"].size(), 5u);

  const std::string schema = Write("schema.txt", "g1=categorical\nx1=categorical\n");
  const json typed = json::parse(Cli({"ingest", "--data", data_, "--schema", schema}).out);
  EXPECT_EQ(typed["columns"][0]["kind"], "categorical");

  EXPECT_EQ(Cli({"ingest", "--data", (dir_ / "absent.csv").string()}).code, kExitData);
  EXPECT_EQ(Cli({"ingest", "--data", Write("bad.csv", "a,b\n1,2,3\n")}).code, kExitData);
}

TEST_F(CliTest, FitMatchesInProcessCoefficients) {
  const CliRun r = Cli({"fit", "--data", data_, "--model", "linear", "--model", "knn:k=3",
                     "--response", "y"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const json doc = json::parse(r.out);
  ASSERT_EQ(doc["models"].size(), 2u);
  EXPECT_EQ(doc["models"][0]["response"], "y");
  const ModelHandle lm = FitBuiltin(ModelSpec::Parse("linear"), frame_, "y",
                                    {"x1", "x2", "x3", "g1"}, "m1");
  const LinearCoefficients& c = LinearCoefficientsOf(lm);
  const json& terms = doc["models"][0]["coefficients"];
  ASSERT_EQ(terms.size(), c.beta.size());
  for (std::size_t i = 0; i < c.beta.size(); ++i) {
    EXPECT_EQ(terms[i]["term"], c.terms[i]);
    EXPECT_EQ(terms[i]["estimate"].get<double>(), c.beta[i]);
  }
  EXPECT_FALSE(doc["models"][1].contains("coefficients"));

  const std::string collinear = Write("col.csv", "a,b,y\n1,2,1\n2,4,3\n3,6,2\n4,8,5\n");
  const CliRun singular = Cli({"fit", "--data", collinear, "--model", "linear",
                            "--response", "y"});
  EXPECT_EQ(singular.code, kExitModel);
  EXPECT_NE(singular.err.find("model error"), std::string::npos);
  EXPECT_EQ(Cli({"fit", "--data", data_, "--model", "spline"}).code, kExitModel);

  // An unreachable external model server is a protocol error, reported as a
  // model failure.
  int closed = 0;
  {
    httplib::Server probe;
    closed = probe.bind_to_any_port("127.0.0.1");
  }
  const CliRun unreachable = Cli(
      {"section", "--data", data_, "--response", "y", "--section", "x1", "--model",
       "external:url=http://127.0.0.1:" + std::to_string(closed) + ",timeout=300"});
  EXPECT_EQ(unreachable.code, kExitModel);
}

TEST_F(CliTest, SectionReplaysMutationsLikeASession) {
  const json mutations = {{{"op", "setSigma"}, {"sigma", 0.6}},
                          {{"op", "setPoint"}, {"values", {{"x2", 0.3}, {"g1", "b"}}}},
                          {{"op", "startTour"}, {"kind", "random"}, {"length", 3}},
                          {{"op", "tourStep"}, {"step", 2}}};
  const std::string log = Write("log.json", json{{"mutations", mutations}}.dump());
  const fs::path visited = dir_ / "visited.csv";
  const CliRun r = Cli({"section", "--data", data_, "--model", "linear", "--model",
                     "knn:k=4", "--response", "y", "--section", "x1", "--hidden",
                     "x3", "--seed", "5", "--mutations", log, "--visited",
                     visited.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;

  auto frame = std::make_shared<const DataFrame>(frame_);
  const std::vector<std::string> inputs{"x1", "x2", "x3", "g1"};
  std::vector<ModelHandle> models{
      FitBuiltin(ModelSpec::Parse("linear"), *frame, "y", inputs, "m1"),
      FitBuiltin(ModelSpec::Parse("knn:k=4"), *frame, "y", inputs, "m2")};
  SessionOptions options;
  options.seed = 5;
  Session session("cli", frame, models, Roles::Complete(*frame, {"x1"}, {"x3"}, "y"),
                  options);
  for (const auto& m : mutations) session.Apply(m);
  EXPECT_EQ(json::parse(r.out), session.SectionJson());

  const IngestResult v = IngestCsv(Slurp(visited));
  EXPECT_EQ(v.frame.num_rows(), session.Visited().size());

  const CliRun conditions = Cli({"section", "--data", data_, "--model", "linear",
                              "--response", "y", "--section", "x1", "--conditions"});
  ASSERT_EQ(conditions.code, kExitOk) << conditions.err;
  EXPECT_TRUE(json::parse(conditions.out).contains("panels"));

  const CliRun bad_op = Cli({"section", "--data", data_, "--model", "linear", "--response",
                          "y", "--section", "x1", "--mutations",
                          Write("bad.json", R"([{"op":"tourStep","step":1}])")});
  EXPECT_EQ(bad_op.code, kExitData);
  EXPECT_EQ(Cli({"section", "--data", data_, "--model", "linear", "--response", "y",
                 "--section", "x1", "--sigma", "wide"}).code,
            kExitData);
  EXPECT_EQ(Cli({"section", "--data", data_, "--model", "linear", "--response", "y",
                 "--section", "nope"}).code,
            kExitData);
  EXPECT_EQ(Cli({"section", "--data", data_, "--model", "linear", "--response", "y",
                 "--section", "x1", "--point", "{oops"}).code,
            kExitData);
}

TEST_F(CliTest, TourPrintsOccupancyTable) {
  const std::string sim = Write(
      "sim.csv", Cli({"simulate", "--n", "200", "--p", "3", "--seed", "2"}).out);
  const fs::path tours = dir_ / "tours.json";
  const CliRun r = Cli({"tour", "--data", sim, "--kind", "random,kmed", "--length", "6",
                     "--seeds", "2", "--label", "Normal", "--json", tours.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::istringstream lines(r.out);
  std::string header, row, visited;
  std::getline(lines, header);
  std::getline(lines, row);
  std::getline(lines, visited);
  EXPECT_NE(header.find("random"), std::string::npos);
  EXPECT_NE(header.find("kmed"), std::string::npos);
  EXPECT_EQ(row.rfind("Normal", 0), 0u);
  EXPECT_EQ(visited.rfind("visited", 0), 0u);

  const json doc = json::parse(Slurp(tours));
  EXPECT_EQ(doc["tours"].size(), 4u);
  EXPECT_EQ(doc["occupancy"]["kmed"]["seeds"], 2);
  for (const auto& t : doc["tours"]) EXPECT_EQ(t["length"], 6);
  char cell[64];
  std::snprintf(cell, sizeof cell, "%.1f (%.1f)",
                doc["occupancy"]["random"]["meanVisible"].get<double>(),
                doc["occupancy"]["random"]["meanTotalSimilarity"].get<double>());
  EXPECT_NE(row.find(cell), std::string::npos);

  EXPECT_EQ(Cli({"tour", "--data", sim, "--kind", "spiral"}).code, kExitData);
  EXPECT_EQ(Cli({"tour", "--data", sim, "--kind", "lof"}).code, kExitData);
  EXPECT_EQ(Cli({"tour", "--data", sim, "--kind", "diffits", "--model", "linear",
                 "--response", "x3"}).code,
            kExitModel);
  EXPECT_EQ(Cli({"tour", "--data", sim, "--seeds", "0"}).code, kExitData);
}

}  // namespace
}  // namespace slicevis::tools
