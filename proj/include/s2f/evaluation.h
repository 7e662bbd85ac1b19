// s2f/evaluation.h

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

#ifndef S2F_EVALUATION_H_
#define S2F_EVALUATION_H_

#include <array>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "s2f/base.h"

namespace s2f {

using Feature = std::vector<float>;

enum class Metric { kCosine, kL2, kL1 };

/// "cos", "l2" or "l1"; throws ConfigError otherwise.
Metric ParseMetric(const std::string &name);
const char *MetricName(Metric m);

/// Angle in degrees between a and b; throws on a zero vector.
double CosineAngleDeg(std::span<const float> a, std::span<const float> b);
double Distance(std::span<const float> a, std::span<const float> b, Metric m);

struct DistanceStats {
  Metric metric = Metric::kCosine;
  double mean = 0, std = 0;  // population std
  std::size_t n = 0;
};

DistanceStats SimilarityStats(const std::vector<Feature> &pred,
                              const std::vector<Feature> &target, Metric m);

/// Mean angle over all unordered pairs; near zero when features collapse
/// onto one direction.
double MeanPairwiseAngleDeg(const std::vector<Feature> &features);

struct RecallReport {
  Metric metric = Metric::kCosine;
  std::vector<std::size_t> ks;
  std::vector<double> recall_percent;
  std::vector<double> baseline_percent;  // 100 K / N
  std::size_t gallery_size = 0;

  double At(std::size_t k) const;
};

/// Ranks the gallery for each query by ascending distance (ties by gallery
/// index) and counts queries whose true item is within the top K.
RecallReport RecallAtK(const std::vector<Feature> &queries, const std::vector<Feature> &gallery,
                       const std::vector<std::size_t> &true_index, Metric m,
                       const std::vector<std::size_t> &ks);

/// 0-based rank of gallery[true_index] for one query.
std::size_t RankOfTrue(std::span<const float> query, const std::vector<Feature> &gallery,
                       std::size_t true_index, Metric m);

struct ConfusionMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<std::size_t>> counts;  // [true][predicted]
  std::vector<std::vector<double>> normalized;   // rows sum to 1 where nonzero

  std::string ToText() const;
};

ConfusionMatrix Confusion(const std::vector<std::string> &true_labels,
                          const std::vector<std::string> &predicted,
                          const std::vector<std::string> &label_set);

/// Per-class mean of training features; predicts the class of the nearest
/// mean under Euclidean distance (ties to the earlier label).
class NearestCentroid {
 public:
  void Fit(const std::vector<Feature> &features, const std::vector<std::string> &labels);
  std::string Predict(std::span<const float> feature) const;
  const std::vector<std::string> &labels() const { return labels_; }

 private:
  std::vector<std::string> labels_;
  std::vector<std::vector<double>> centroids_;
};

constexpr std::size_t kNumLandmarks = 68;

struct LandmarkSet {
  std::array<std::array<double, 2>, kNumLandmarks> points{};
};

/// 68 rows of "x,y" (an optional "x,y" header line is skipped).
LandmarkSet ReadLandmarksCsv(const std::string &path);
std::string LandmarksCsv(const LandmarkSet &lm);

/// One line of the measure table:
///   <name> length <i-j> [<i-j> ...]          mean of the listed distances
///   <name> index  <i-j> ... / <i-j> ...      100 * mean(num) / mean(den)
///   <name> area   <i> <j> <k> ...            polygon area (shoelace)
struct MeasureSpec {
  enum class Kind { kLength, kIndex, kArea };
  std::string name;
  Kind kind = Kind::kLength;
  std::vector<std::pair<int, int>> num, den;
  std::vector<int> polygon;
};

std::vector<MeasureSpec> ParseMeasureTable(const std::string &text);
/// The built-in table (iBUG 68-point indices).
const std::string &DefaultMeasureTableText();

/// Evaluates every measure; throws "degenerate geometry: <name>" when an
/// index denominator is zero.
std::vector<std::pair<std::string, double>> CraniofacialMeasures(
    const LandmarkSet &lm, const std::vector<MeasureSpec> &table);

struct PearsonResult {
  double r = 0, p = 1;
  std::size_t n = 0;
};

/// Sample correlation with a two-sided p-value from the Student-t tail of
/// t = r sqrt((n - 2) / (1 - r^2)). Needs n >= 3; constant input throws
/// "zero variance".
PearsonResult Pearson(std::span<const double> x, std::span<const double> y);

/// Two-sided tail probability P(|T| >= |t|) for Student's t with df degrees.
double StudentTwoSidedP(double t, double df);

struct CraniofacialRow {
  std::string name;
  PearsonResult corr;
};

/// Correlates each measure between paired landmark sets (reference vs
/// reconstruction), plus a random-pairing baseline row for the measure
/// named `baseline_measure` (pairing by a seeded derangement).
std::vector<CraniofacialRow> CraniofacialCorrelations(
    const std::vector<LandmarkSet> &reference, const std::vector<LandmarkSet> &reconstructed,
    const std::vector<MeasureSpec> &table, const std::string &baseline_measure,
    uint64_t seed);

}  // namespace s2f

#endif  // S2F_EVALUATION_H_
