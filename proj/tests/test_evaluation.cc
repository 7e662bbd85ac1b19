// s2f/tests/test_evaluation.cc

// Copyright 2026  The s2f Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "s2f/evaluation.h"

using namespace s2f;

namespace {

std::vector<Feature> RandomFeatures(std::size_t n, std::size_t d, uint64_t seed) {
  CounterRng r(seed);
  std::vector<Feature> out(n, Feature(d));
  for (auto &f : out)
    for (float &v : f) v = static_cast<float>(r.Gaussian());
  return out;
}

LandmarkSet Square(double side) {
  LandmarkSet lm;
  for (std::size_t i = 0; i < kNumLandmarks; ++i) lm.points[i] = {double(i), 0.0};
  lm.points[0] = {0, 0};
  lm.points[1] = {side, 0};
  lm.points[2] = {side, side};
  lm.points[3] = {0, side};
  return lm;
}

}  // namespace

TEST_SUITE("evaluation") {
  TEST_CASE("angles and distances") {
    const Feature x{1, 0, 0}, y{0, 2, 0}, z{-3, 0, 0}, w{1, 1, 0};
    CHECK(CosineAngleDeg(x, x) == doctest::Approx(0.0));
    CHECK(CosineAngleDeg(x, y) == doctest::Approx(90.0));
    CHECK(CosineAngleDeg(x, z) == doctest::Approx(180.0));
    CHECK(CosineAngleDeg(x, w) == doctest::Approx(45.0));
    CHECK_THROWS_WITH_AS(CosineAngleDeg(x, Feature{0, 0, 0}), "zero-norm feature", Error);
    CHECK(Distance(x, y, Metric::kL2) == doctest::Approx(std::sqrt(5.0)));
    CHECK(Distance(x, y, Metric::kL1) == doctest::Approx(3.0));
    CHECK(ParseMetric("l1") == Metric::kL1);
    CHECK_THROWS_AS(ParseMetric("dot"), ConfigError);

    const DistanceStats s = SimilarityStats({x, x}, {y, w}, Metric::kCosine);
    CHECK(s.mean == doctest::Approx(67.5));
    CHECK(s.std == doctest::Approx(22.5));
    CHECK(MeanPairwiseAngleDeg({x, y, z}) == doctest::Approx((90.0 + 180.0 + 90.0) / 3));
    CHECK(MeanPairwiseAngleDeg({x, Feature{5, 0, 0}}) == doctest::Approx(0.0));
  }

  TEST_CASE("recall at K against a brute-force ranking") {
    const auto gallery = RandomFeatures(40, 6, 1);
    auto queries = RandomFeatures(25, 6, 2);
    std::vector<std::size_t> truth(25);
    for (std::size_t q = 0; q < 25; ++q) {
      truth[q] = (q * 7) % 40;
      for (std::size_t j = 0; j < 6; ++j) queries[q][j] = 0.7f * queries[q][j] + gallery[truth[q]][j];
    }
    for (Metric m : {Metric::kCosine, Metric::kL2, Metric::kL1}) {
      const std::vector<std::size_t> ks{1, 2, 5, 10};
      const RecallReport r = RecallAtK(queries, gallery, truth, m, ks);
      for (std::size_t k : ks) {
        std::size_t hits = 0;
        for (std::size_t q = 0; q < 25; ++q) {
          const double own = Distance(queries[q], gallery[truth[q]], m);
          std::size_t better = 0;
          for (std::size_t g = 0; g < 40; ++g) {
            const double d = Distance(queries[q], gallery[g], m);
            if (d < own || (d == own && g < truth[q])) ++better;
          }
          hits += better < k;
        }
        CHECK(r.At(k) == doctest::Approx(100.0 * hits / 25));
      }
      CHECK(r.baseline_percent[3] == doctest::Approx(25.0));
    }
    const RecallReport self = RecallAtK(gallery, gallery, [] {
      std::vector<std::size_t> v(40);
      for (std::size_t i = 0; i < 40; ++i) v[i] = i;
      return v;
    }(), Metric::kCosine, {1});
    CHECK(self.At(1) == 100.0);
    CHECK_THROWS_AS(RecallAtK(queries, gallery, truth, Metric::kL2, {41}), Error);
  }

  TEST_CASE("confusion matrix and nearest centroid") {
    const ConfusionMatrix c =
        Confusion({"A", "A", "B", "B", "B"}, {"A", "B", "B", "B", "A"}, {"A", "B", "C"});
    CHECK(c.counts[0][0] == 1);
    CHECK(c.counts[0][1] == 1);
    CHECK(c.counts[1][1] == 2);
    CHECK(c.normalized[1][1] == doctest::Approx(2.0 / 3));
    CHECK(c.normalized[2][0] == 0.0);
    CHECK_THROWS_AS(Confusion({"X"}, {"A"}, {"A"}), Error);

    NearestCentroid nc;
    nc.Fit({{0, 0}, {0, 2}, {10, 0}, {10, 2}}, {"L", "L", "R", "R"});
    CHECK(nc.Predict(Feature{1, 1}) == "L");
    CHECK(nc.Predict(Feature{9, -5}) == "R");
    CHECK(nc.Predict(Feature{5, 1}) == "L");  // tie goes to the earlier label
  }

  TEST_CASE("craniofacial measures") {
    auto table = ParseMeasureTable(
        "side   length 0-1\n"
        "diag   length 0-2 1-3   # two diagonals\n"
        "ratio  index  0-1 / 0-2\n"
        "sq     area   0 1 2 3\n");
    REQUIRE(table.size() == 4);
    const auto v = CraniofacialMeasures(Square(3), table);
    CHECK(v[0].second == doctest::Approx(3.0));
    CHECK(v[1].second == doctest::Approx(3 * std::sqrt(2.0)));
    CHECK(v[2].second == doctest::Approx(100 / std::sqrt(2.0)));
    CHECK(v[3].second == doctest::Approx(9.0));
    CHECK_THROWS_WITH_AS(CraniofacialMeasures(Square(0), table),
                         "degenerate geometry: ratio", Error);
    CHECK_THROWS_AS(ParseMeasureTable("bad length 0-68\n"), ConfigError);
    CHECK(ParseMeasureTable(DefaultMeasureTableText()).size() == 12);
  }

  TEST_CASE("pearson and the Student-t tail") {
    const std::vector<double> x{1, 2, 3, 4, 5}, y{2, 4, 6, 8, 10}, z{5, 3, 4, 1, 2};
    CHECK(Pearson(x, y).r == doctest::Approx(1.0));
    // Two-pass oracle for r.
    double mx = 3, mz = 3, sxy = 0, sxx = 0, szz = 0;
    for (std::size_t i = 0; i < 5; ++i) {
      sxy += (x[i] - mx) * (z[i] - mz);
      sxx += (x[i] - mx) * (x[i] - mx);
      szz += (z[i] - mz) * (z[i] - mz);
    }
    const PearsonResult p = Pearson(x, z);
    CHECK(p.r == doctest::Approx(sxy / std::sqrt(sxx * szz)));
    // With three degrees of freedom the two-sided tail has a closed form.
    const double t = p.r * std::sqrt(3 / (1 - p.r * p.r)), a = std::abs(t) / std::sqrt(3.0);
    const double tail =
        1 - 2 / std::numbers::pi * (std::atan(a) + a / (1 + a * a));
    CHECK(p.p == doctest::Approx(tail).epsilon(1e-9));
    CHECK(StudentTwoSidedP(1.0, 1) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(StudentTwoSidedP(2.0, 2) == doctest::Approx(1 - 2 / std::sqrt(6.0)).epsilon(1e-12));
    CHECK(StudentTwoSidedP(2.228138851986274, 10) == doctest::Approx(0.05).epsilon(1e-9));
    CHECK_THROWS_WITH_AS(Pearson(x, std::vector<double>(5, 1.0)), "zero variance", Error);
    CHECK_THROWS_AS(Pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}), Error);
  }

  TEST_CASE("landmark csv round trip") {
    LandmarkSet lm = Square(2.5);
    lm.points[67] = {1.25, -7.5};
    const std::string path = "/tmp/s2f_test_landmarks.csv";
    {
      std::FILE *f = std::fopen(path.c_str(), "w");
      std::fputs(LandmarksCsv(lm).c_str(), f);
      std::fclose(f);
    }
    const LandmarkSet back = ReadLandmarksCsv(path);
    CHECK(back.points[2][0] == 2.5);
    CHECK(back.points[67][1] == -7.5);
  }
}
