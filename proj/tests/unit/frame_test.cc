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

#include <random>

#include <gtest/gtest.h>

#include "generators.h"
#include "oracles.h"
#include "slicevis/error.h"
#include "slicevis/frame.h"

namespace slicevis {
namespace {

TEST(IngestCsv, InfersKindsAndSortsLevels) {
  const auto r = IngestCsv("x,g,n\n1.5,b,3\n-2,a,4\n1e3,b,5\n");
  const DataFrame& f = r.frame;
  ASSERT_EQ(f.num_rows(), 3u);
  EXPECT_TRUE(f.column("x").is_numeric());
  EXPECT_FALSE(f.column("g").is_numeric());
  EXPECT_EQ(f.column("g").levels, (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(f.column("g").label(0), "b");
  EXPECT_DOUBLE_EQ(f.column("x").values[2], 1000.0);
  EXPECT_EQ(r.dropped_rows, 0u);
}

TEST(IngestCsv, QuotingFollowsRfc4180) {
  const auto r = IngestCsv(
      "name,v\n\"a, b\",1\n\"say \"\"hi\"\"\",2\n\"two\nlines\",3\n");
  const Column& name = r.frame.column("name");
  ASSERT_EQ(r.frame.num_rows(), 3u);
  EXPECT_EQ(name.label(0), "a, b");
  EXPECT_EQ(name.label(1), "say \"hi\"");
  EXPECT_EQ(name.label(2), "two\nlines");
}

TEST(IngestCsv, DropsRowsWithMissingCells) {
  const auto r = IngestCsv("x,y\n1,2\nNA,3\n4,\n5,6\n");
  EXPECT_EQ(r.frame.num_rows(), 2u);
  EXPECT_EQ(r.dropped_rows, 2u);
  EXPECT_TRUE(r.frame.column("x").is_numeric());
}

TEST(IngestCsv, StripsByteOrderMarkAndCarriageReturns) {
  const auto r = IngestCsv("\xEF\xBB\xBFx,y\r\n1,2\r\n3,4\r\n");
  EXPECT_TRUE(r.frame.HasColumn("x"));
  EXPECT_EQ(r.frame.num_rows(), 2u);
  EXPECT_DOUBLE_EQ(r.frame.column("y").values[1], 4.0);
}

TEST(IngestCsv, RejectsMalformedInput) {
  EXPECT_THROW(IngestCsv(""), DataError);
  EXPECT_THROW(IngestCsv("x,x\n1,2\n"), DataError);
  EXPECT_THROW(IngestCsv("x,y\n1\n"), DataError);
  EXPECT_THROW(IngestCsv("x,y\nNA,1\n"), DataError);
  EXPECT_THROW(IngestCsv("x\n\"unterminated\n"), DataError);
}

TEST(IngestCsv, SchemaOverrideForcesKinds) {
  const auto schema = ParseSchemaOverride(
      "# kinds\n[schema]\nzip = categorical\n\nscore=numeric\n");
  ASSERT_EQ(schema.size(), 2u);
  const auto r = IngestCsv("zip,score\n02139,1\n10001,2\n", schema);
  EXPECT_FALSE(r.frame.column("zip").is_numeric());
  EXPECT_EQ(r.frame.column("zip").label(0), "02139");
  EXPECT_THROW(IngestCsv("a\nx\n", ParseSchemaOverride("a=numeric")), DataError);
  EXPECT_THROW(ParseSchemaOverride("a=words"), DataError);
}

TEST(WriteCsv, RoundTripsThroughIngest) {
  std::mt19937_64 rng(7);
  const DataFrame f = testgen::RandomFrame({40, 3, 2, 4, 0.0}, rng);
  const DataFrame g = IngestCsv(WriteCsv(f)).frame;
  ASSERT_EQ(g.num_columns(), f.num_columns());
  for (std::size_t c = 0; c < f.num_columns(); ++c) {
    EXPECT_EQ(g.column(c).name, f.column(c).name);
    EXPECT_EQ(g.column(c).kind, f.column(c).kind);
    for (std::size_t i = 0; i < f.num_rows(); ++i) {
      if (f.column(c).is_numeric()) {
        EXPECT_EQ(g.column(c).values[i], f.column(c).values[i]);
      } else {
        EXPECT_EQ(g.column(c).label(i), f.column(c).label(i));
      }
    }
  }
}

TEST(WriteCsv, QuotesOnlyWhenNeeded) {
  const DataFrame f({{"s", ColumnKind::kCategorical, {0, 1}, {"plain", "a,\"b\""}}});
  EXPECT_EQ(WriteCsv(f), "s\nplain\n\"a,\"\"b\"\"\"\n");
  EXPECT_EQ(FormatNumber(0.1), "0.1");
  EXPECT_EQ(FormatNumber(-2.0), "-2");
}

TEST(DataFrame, ValidatesColumns) {
  EXPECT_THROW(DataFrame({{"a", ColumnKind::kNumeric, {1, 2}, {}},
                          {"b", ColumnKind::kNumeric, {1}, {}}}),
               DataError);
  EXPECT_THROW(DataFrame({{"g", ColumnKind::kCategorical, {2}, {"a", "b"}}}),
               DataError);
  const DataFrame f({{"a", ColumnKind::kNumeric, {1, 2, 3}, {}}});
  EXPECT_THROW(f.column("missing"), DataError);
  const std::vector<std::size_t> rows{2, 0};
  EXPECT_EQ(f.SelectRows(rows).column("a").values, (std::vector<double>{3, 1}));
}

TEST(Roles, CompleteAndValidate) {
  const DataFrame f = IngestCsv("a,b,c,d,y\n1,2,3,4,5\n2,3,4,5,6\n").frame;
  const Roles r = Roles::Complete(f, {"a"}, {"d"}, "y");
  EXPECT_EQ(r.conditioning, (std::vector<std::string>{"b", "c"}));
  EXPECT_NO_THROW(r.Validate(f));
  EXPECT_EQ(r.Predictors(), (std::vector<std::string>{"a", "b", "c", "d"}));

  Roles overlap = r;
  overlap.conditioning.push_back("a");
  EXPECT_THROW(overlap.Validate(f), DataError);
  EXPECT_THROW(Roles::Complete(f, {"a", "b", "c"}, {}, "y").Validate(f), DataError);
  EXPECT_THROW(Roles::Complete(f, {}, {}, "y").Validate(f), DataError);
  EXPECT_THROW(Roles::Complete(f, {"zz"}, {}, "y").Validate(f), DataError);
}

TEST(SectionPoint, FromRowAndValidation) {
  const DataFrame f = IngestCsv("x,g,h,y\n1,a,5,0\n2,b,6,1\n").frame;
  const Roles r = Roles::Complete(f, {"x"}, {"h"}, "y");
  const SectionPoint p = PointFromRow(f, r, 1);
  EXPECT_EQ(p.conditioning.at("g"), 1.0);
  EXPECT_EQ(p.hidden.at("h"), 6.0);
  EXPECT_NO_THROW(ValidatePoint(f, r, p));
  SectionPoint bad = p;
  bad.conditioning["g"] = 2.0;
  EXPECT_THROW(ValidatePoint(f, r, bad), DataError);
  bad = p;
  bad.conditioning.erase("g");
  EXPECT_THROW(ValidatePoint(f, r, bad), DataError);
  bad = p;
  bad.conditioning["x"] = 1.0;
  EXPECT_THROW(ValidatePoint(f, r, bad), DataError);
}

TEST(ScalingStats, MatchesDirectFormula) {
  std::mt19937_64 rng(3);
  const DataFrame f = testgen::RandomFrame({25, 3, 0, 2, 0.0}, rng);
  const ScalingStats stats = ScalingStats::Compute(f);
  for (const auto& name : {"x1", "x2", "x3"}) {
    const auto s = oracle::SpreadOf(f.column(name).values);
    EXPECT_NEAR(stats.at(name).sd, s.sd, 1e-12);
    EXPECT_NEAR(stats.at(name).range(), s.range, 1e-12);
  }
}

// Brute-force medoid: total distance to every row, lowest index on ties.
std::size_t OracleMedoid(const DataFrame& f, const std::vector<std::string>& vars) {
  bool numeric = true;
  for (const auto& v : vars) numeric = numeric && f.column(v).is_numeric();
  const auto metric = numeric ? oracle::Metric::kEuclidean : oracle::Metric::kGower;
  std::size_t best = 0;
  double best_total = oracle::kInf;
  for (std::size_t i = 0; i < f.num_rows(); ++i) {
    double total = 0.0;
    for (std::size_t j = 0; j < f.num_rows(); ++j) {
      total += oracle::Distance(f, vars, oracle::Row(f, vars, i),
                                oracle::Row(f, vars, j), metric);
    }
    if (i == 0 || total < best_total - 1e-9 * std::max(1.0, best_total)) {
      best_total = total;
      best = i;
    }
  }
  return best;
}

TEST(Medoid, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t cats = trial % 2;
    const DataFrame f = testgen::RandomFrame({30, 2, cats, 3, 0.0}, rng);
    const auto vars = f.ColumnNames();
    EXPECT_EQ(Medoid(f, vars), OracleMedoid(f, vars)) << "trial " << trial;
  }
}

TEST(Medoid, TiesGoToLowestRowAndCapIsDeterministic) {
  const DataFrame f({{"x", ColumnKind::kNumeric, {0, 1, 1, 0}, {}}});
  const std::vector<std::string> vars{"x"};
  EXPECT_EQ(Medoid(f, vars), 0u);
  std::mt19937_64 rng(5);
  const DataFrame big = testgen::RandomFrame({600, 3, 0, 2, 0.0}, rng);
  const auto names = big.ColumnNames();
  EXPECT_EQ(Medoid(big, names, {100, 9}), Medoid(big, names, {100, 9}));
  const DataFrame constant({{"c", ColumnKind::kNumeric, {2, 2}, {}}});
  const std::vector<std::string> c{"c"};
  EXPECT_THROW(Medoid(constant, c), DataError);
}

TEST(SampleRows, SortedDistinctAndSeeded) {
  const auto a = SampleRows(1000, 50, 4);
  ASSERT_EQ(a.size(), 50u);
  EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
  EXPECT_EQ(std::adjacent_find(a.begin(), a.end()), a.end());
  EXPECT_EQ(a, SampleRows(1000, 50, 4));
  EXPECT_NE(a, SampleRows(1000, 50, 5));
  EXPECT_EQ(SampleRows(3, 10, 1), (std::vector<std::size_t>{0, 1, 2}));
}

}  // namespace
}  // namespace slicevis
