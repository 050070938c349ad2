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
#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "generators.h"
#include "oracles.h"
#include "slicevis/error.h"
#include "slicevis/model.h"

namespace slicevis {
namespace {

std::vector<std::string> PredictorNames(const DataFrame& f) {
  std::vector<std::string> out;
  for (const auto& name : f.ColumnNames()) {
    if (name != "y") out.push_back(name);
  }
  return out;
}

TEST(LinearModel, MatchesNormalEquations) {
  std::mt19937_64 rng(31);
  for (std::size_t trial = 0; trial < 20; ++trial) {
    const DataFrame base =
        testgen::RandomFrame({80, 1 + trial % 4, trial % 3, 3, 0.0}, rng);
    const DataFrame f = testgen::WithResponse(base, rng, false);
    const auto names = PredictorNames(f);
    const ModelHandle m =
        FitBuiltin(ModelSpec::Parse("linear"), f, "y", names, "m");
    std::vector<const Column*> cols;
    for (const auto& n : names) cols.push_back(&f.column(n));
    std::vector<std::vector<double>> x;
    for (std::size_t i = 0; i < f.num_rows(); ++i) {
      x.push_back(oracle::DesignRow(cols, oracle::Row(f, names, i)));
    }
    const auto beta = oracle::LeastSquares(x, f.column("y").values);
    const auto& coef = LinearCoefficientsOf(m);
    ASSERT_EQ(coef.beta.size(), beta.size());
    EXPECT_EQ(coef.terms.front(), "(intercept)");
    for (std::size_t j = 0; j < beta.size(); ++j) {
      EXPECT_NEAR(coef.beta[j], beta[j], 1e-8 * std::max(1.0, std::abs(beta[j])));
    }
    const Predictions p = m.Predict(f);
    for (std::size_t i = 0; i < f.num_rows(); ++i) {
      double want = 0.0;
      for (std::size_t j = 0; j < beta.size(); ++j) want += x[i][j] * beta[j];
      EXPECT_NEAR(p.values[i], want, 1e-8 * std::max(1.0, std::abs(want)));
    }
  }
}

TEST(LinearModel, SingularDesignNamesCollinearTerm) {
  const DataFrame f({{"a", ColumnKind::kNumeric, {1, 2, 3, 4}, {}},
                     {"b", ColumnKind::kNumeric, {2, 4, 6, 8}, {}},
                     {"y", ColumnKind::kNumeric, {1, 0, 1, 0}, {}}});
  try {
    FitBuiltin(ModelSpec::Parse("linear"), f, "y", {}, "m");
    FAIL() << "expected ModelError";
  } catch (const ModelError& e) {
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos) << e.what();
  }
  const DataFrame g({{"x", ColumnKind::kNumeric, {1, 2}, {}},
                     {"y", ColumnKind::kCategorical, {0, 1}, {"p", "q"}}});
  EXPECT_THROW(FitBuiltin(ModelSpec::Parse("linear"), g, "y", {}, "m"),
               ModelError);
  EXPECT_THROW(FitBuiltin(ModelSpec::Parse("linear"), g, std::nullopt, {}, "m"),
               ModelError);
}

// Brute-force k-NN: sort every training row by (squared standardized
// distance, index).
std::vector<std::size_t> OracleNeighbours(const DataFrame& f,
                                          const std::vector<std::string>& vars,
                                          std::size_t query, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t i = 0; i < f.num_rows(); ++i) {
    double s = 0.0;
    for (const auto& v : vars) {
      const Column& c = f.column(v);
      if (c.is_numeric()) {
        const double sd = oracle::SpreadOf(c.values).sd;
        const double z = (c.values[i] - c.values[query]) / sd;
        s += z * z;
      } else if (c.values[i] != c.values[query]) {
        s += 1.0;
      }
    }
    d.push_back({s, i});
  }
  std::sort(d.begin(), d.end());
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < k; ++j) out.push_back(d[j].second);
  return out;
}

TEST(KnnModel, MatchesBruteForce) {
  std::mt19937_64 rng(32);
  for (const bool categorical : {false, true}) {
    const DataFrame base = testgen::RandomFrame({50, 2, 1, 2, 0.5}, rng);
    const DataFrame f = testgen::WithResponse(base, rng, categorical);
    const auto names = PredictorNames(f);
    const ModelHandle m =
        FitBuiltin(ModelSpec::Parse("knn:k=4"), f, "y", names, "m");
    const Predictions p = m.Predict(f);
    const Column& y = f.column("y");
    for (std::size_t i = 0; i < f.num_rows(); ++i) {
      const auto nn = OracleNeighbours(f, names, i, 4);
      if (!categorical) {
        double mean = 0.0;
        for (const auto j : nn) mean += y.values[j] / 4.0;
        EXPECT_NEAR(p.values[i], mean, 1e-12);
      } else {
        std::vector<double> want(y.levels.size(), 0.0);
        for (const auto j : nn) want[y.code(j)] += 0.25;
        const auto row = p.ProbabilityRow(i);
        for (std::size_t c = 0; c < want.size(); ++c) {
          EXPECT_NEAR(row[c], want[c], 1e-12);
        }
        EXPECT_EQ(p.labels[i],
                  std::max_element(want.begin(), want.end()) - want.begin());
      }
    }
  }
}

TEST(KnnModel, ClassOutputAndBounds) {
  std::mt19937_64 rng(33);
  const DataFrame f =
      testgen::WithResponse(testgen::RandomFrame({30, 2, 0, 2, 0.0}, rng), rng, true);
  const ModelHandle cls =
      FitBuiltin(ModelSpec::Parse("knn:k=3,output=class"), f, "y", {}, "c");
  EXPECT_EQ(cls.kind, PredictionKind::kClass);
  const Predictions p = cls.Predict(f);
  EXPECT_TRUE(p.probabilities.empty());
  EXPECT_EQ(p.labels.size(), f.num_rows());
  EXPECT_THROW(FitBuiltin(ModelSpec::Parse("knn:k=31"), f, "y", {}, "c"),
               ModelError);
  EXPECT_THROW(FitBuiltin(ModelSpec::Parse("knn:k=0"), f, "y", {}, "c"),
               ModelError);
}

double Sse(const std::vector<double>& y, const std::vector<std::size_t>& rows) {
  double mean = 0.0;
  for (const auto r : rows) mean += y[r];
  mean /= static_cast<double>(rows.size());
  double s = 0.0;
  for (const auto r : rows) s += (y[r] - mean) * (y[r] - mean);
  return s;
}

TEST(TreeModel, StumpFindsExhaustiveBestSplit) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 15; ++trial) {
    const DataFrame f = testgen::WithResponse(
        testgen::RandomFrame({40, 2, 1, 3, 0.0}, rng), rng, false, 1.0);
    const ModelHandle m =
        FitBuiltin(ModelSpec::Parse("tree:depth=1,leaf=3"), f, "y", {}, "t");
    const auto& y = f.column("y").values;
    const Predictions p = m.Predict(f);
    double fitted = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      fitted += (y[i] - p.values[i]) * (y[i] - p.values[i]);
    }
    std::vector<std::size_t> all(y.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    double best = Sse(y, all);
    for (const auto& name : PredictorNames(f)) {
      const Column& c = f.column(name);
      std::vector<double> cuts;
      if (c.is_numeric()) {
        cuts = c.values;
      } else {
        for (std::size_t l = 0; l < c.levels.size(); ++l) cuts.push_back(l);
      }
      for (const double cut : cuts) {
        std::vector<std::size_t> left, right;
        for (const auto i : all) {
          const bool goes_left =
              c.is_numeric() ? c.values[i] <= cut : c.values[i] == cut;
          (goes_left ? left : right).push_back(i);
        }
        if (left.size() < 3 || right.size() < 3) continue;
        best = std::min(best, Sse(y, left) + Sse(y, right));
      }
    }
    EXPECT_NEAR(fitted, best, 1e-9 * std::max(1.0, best)) << "trial " << trial;
  }
}

TEST(TreeModel, ClassificationProbabilitiesAreLeafProportions) {
  const DataFrame f({{"x", ColumnKind::kNumeric, {1, 2, 3, 4, 5, 6}, {}},
                     {"y", ColumnKind::kCategorical, {0, 0, 1, 1, 1, 1},
                      {"lo", "hi"}}});
  const ModelHandle m =
      FitBuiltin(ModelSpec::Parse("tree:depth=2,leaf=1"), f, "y", {}, "t");
  const Predictions p = m.Predict(f);
  EXPECT_EQ(p.labels, (std::vector<int>{0, 0, 1, 1, 1, 1}));
  EXPECT_DOUBLE_EQ(p.ProbabilityRow(0)[0], 1.0);
  EXPECT_DOUBLE_EQ(p.ProbabilityRow(5)[1], 1.0);
}

TEST(KdeModel, IntegratesToOneAndRenormalizes) {
  std::mt19937_64 rng(35);
  const DataFrame f = testgen::RandomFrame({100, 1, 0, 2, 0.0}, rng);
  const ModelHandle m = FitBuiltin(ModelSpec::Parse("kde"), f, std::nullopt, {}, "d");
  EXPECT_EQ(m.kind, PredictionKind::kDensity);
  std::vector<double> grid;
  const double step = 0.01;
  for (double x = -12.0; x <= 12.0; x += step) grid.push_back(x);
  const DataFrame q({{"x1", ColumnKind::kNumeric, grid, {}}});
  const Predictions p = m.Predict(q);
  double integral = 0.0;
  for (const double v : p.values) integral += v * step;
  EXPECT_NEAR(integral, 1.0, 1e-6);

  const auto r = RenormalizeDensity(p.values, step);
  double total = 0.0;
  for (const double v : r) total += v;
  EXPECT_NEAR(total * step, 1.0, 1e-12);
  EXPECT_THROW(RenormalizeDensity(std::vector<double>{0.0, 0.0}, 1.0), ModelError);
  EXPECT_THROW(RenormalizeDensity(std::vector<double>{1.0, -1.0}, 1.0), ModelError);
  EXPECT_THROW(RenormalizeDensity(std::vector<double>{1.0}, 0.0), ModelError);
}

TEST(KMeansModel, AssignsSeparatedBlobs) {
  std::vector<double> x, z;
  for (int i = 0; i < 20; ++i) {
    x.push_back(i % 2 == 0 ? 0.0 + 0.01 * i : 50.0 + 0.01 * i);
    z.push_back(0.01 * i);
  }
  const DataFrame f({{"x", ColumnKind::kNumeric, x, {}},
                     {"z", ColumnKind::kNumeric, z, {}}});
  const ModelHandle m =
      FitBuiltin(ModelSpec::Parse("kmeans:k=2,seed=3"), f, std::nullopt, {}, "k");
  const Predictions p = m.Predict(f);
  EXPECT_EQ(p.kind, PredictionKind::kClusterId);
  EXPECT_EQ(p.levels, (std::vector<std::string>{"1", "2"}));
  for (std::size_t i = 2; i < 20; ++i) EXPECT_EQ(p.labels[i], p.labels[i % 2]);
  EXPECT_NE(p.labels[0], p.labels[1]);
}

TEST(ModelSpec, ParseAndPrintRoundTrip) {
  for (const char* text :
       {"linear", "knn:k=7", "tree:depth=3,leaf=10", "kde:bw=0.5",
        "kmeans:k=4,seed=2", "knn:k=3,output=class",
        "external:url=http://127.0.0.1:9000,kind=numeric,timeout=500"}) {
    const ModelSpec s = ModelSpec::Parse(text);
    EXPECT_EQ(ModelSpec::Parse(s.ToString()).ToString(), s.ToString()) << text;
  }
  EXPECT_EQ(ModelSpec::Parse("knn:k=7").k, 7);
  EXPECT_THROW(ModelSpec::Parse("forest"), ModelError);
  EXPECT_THROW(ModelSpec::Parse("knn:k"), ModelError);
  EXPECT_THROW(ModelSpec::Parse("knn:k=x"), ModelError);
  EXPECT_THROW(ModelSpec::Parse("knn:size=3"), ModelError);
  EXPECT_THROW(ModelSpec::Parse("external:kind=numeric"), ModelError);
  for (const auto kind : {PredictionKind::kNumeric, PredictionKind::kClass,
                          PredictionKind::kProbMatrix, PredictionKind::kDensity,
                          PredictionKind::kClusterId}) {
    EXPECT_EQ(ParsePredictionKind(PredictionKindName(kind)), kind);
  }
}

TEST(ModelHandle, ProjectsInputAndChecksSchema) {
  std::mt19937_64 rng(36);
  const DataFrame f =
      testgen::WithResponse(testgen::RandomFrame({30, 2, 1, 2, 0.0}, rng), rng, false);
  const ModelHandle m =
      FitBuiltin(ModelSpec::Parse("linear"), f, "y", {"x2", "g1"}, "m");
  // Reordered columns with extras give the same answer.
  const DataFrame shuffled({f.column("g1"), f.column("y"), f.column("x2"),
                            f.column("x1")});
  EXPECT_EQ(m.Predict(shuffled).values, m.Predict(f).values);
  const DataFrame missing({f.column("x2")});
  EXPECT_THROW(m.Predict(missing), ModelError);
  Column relabelled = f.column("g1");
  relabelled.levels = {"a", "z"};
  const DataFrame wrong({f.column("x2"), relabelled});
  EXPECT_THROW(m.Predict(wrong), ModelError);
  EXPECT_THROW(FitBuiltin(ModelSpec::Parse("linear"), f, "y", {"y"}, "m"),
               ModelError);
  EXPECT_THROW(FitBuiltin(ModelSpec::Parse("linear"), f, "y", {"nope"}, "m"),
               ModelError);
}

class BadModel : public Model {
 public:
  explicit BadModel(Predictions p) : p_(std::move(p)) {}
  Predictions Predict(const DataFrame&) const override { return p_; }

 private:
  Predictions p_;
};

TEST(ModelHandle, RejectsMalformedOutputs) {
  const DataFrame f({{"x", ColumnKind::kNumeric, {1, 2}, {}}});
  ModelHandle h;
  h.id = "bad";
  h.schema = SchemaOf(f, std::vector<std::string>{"x"});
  Predictions wrong_length;
  wrong_length.values = {1.0};
  h.impl = std::make_shared<BadModel>(wrong_length);
  EXPECT_THROW(h.Predict(f), ModelError);

  Predictions unnormalized;
  unnormalized.kind = PredictionKind::kProbMatrix;
  unnormalized.levels = {"a", "b"};
  unnormalized.labels = {0, 0};
  unnormalized.probabilities = {0.5, 0.4, 0.5, 0.5};
  h.kind = PredictionKind::kProbMatrix;
  h.impl = std::make_shared<BadModel>(unnormalized);
  EXPECT_THROW(h.Predict(f), ModelError);

  h.kind = PredictionKind::kNumeric;
  EXPECT_THROW(h.Predict(f), ModelError);
}

}  // namespace
}  // namespace slicevis
