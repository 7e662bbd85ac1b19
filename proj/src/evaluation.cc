// s2f/evaluation.cc

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

#include "s2f/evaluation.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

#include <boost/math/distributions/students_t.hpp>

namespace s2f {

Metric ParseMetric(const std::string &name) {
  if (name == "cos") return Metric::kCosine;
  if (name == "l2") return Metric::kL2;
  if (name == "l1") return Metric::kL1;
  throw ConfigError("unknown metric '" + name + "' (expected cos, l2 or l1)");
}

const char *MetricName(Metric m) {
  switch (m) {
    case Metric::kCosine: return "cos";
    case Metric::kL2: return "l2";
    case Metric::kL1: return "l1";
  }
  return "?";
}

double CosineAngleDeg(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw Error("feature length mismatch");
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += static_cast<double>(a[i]) * b[i];
    aa += static_cast<double>(a[i]) * a[i];
    bb += static_cast<double>(b[i]) * b[i];
  }
  if (aa == 0 || bb == 0) throw Error("zero-norm feature");
  const double c = std::clamp(ab / (std::sqrt(aa) * std::sqrt(bb)), -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

double Distance(std::span<const float> a, std::span<const float> b, Metric m) {
  if (m == Metric::kCosine) return CosineAngleDeg(a, b);
  if (a.size() != b.size()) throw Error("feature length mismatch");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - b[i];
    s += m == Metric::kL2 ? d * d : std::abs(d);
  }
  return m == Metric::kL2 ? std::sqrt(s) : s;
}

DistanceStats SimilarityStats(const std::vector<Feature> &pred,
                              const std::vector<Feature> &target, Metric m) {
  if (pred.size() != target.size())
    throw Error("similarity: " + std::to_string(pred.size()) + " predictions vs " +
                std::to_string(target.size()) + " targets");
  if (pred.empty()) throw Error("similarity: no samples");
  std::vector<double> d(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) d[i] = Distance(pred[i], target[i], m);
  const double mean = std::accumulate(d.begin(), d.end(), 0.0) / d.size();
  double ss = 0;
  for (double v : d) ss += (v - mean) * (v - mean);
  return {m, mean, std::sqrt(ss / d.size()), d.size()};
}

double MeanPairwiseAngleDeg(const std::vector<Feature> &features) {
  if (features.size() < 2) throw Error("pairwise angle needs >= 2 features");
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < features.size(); ++i)
    for (std::size_t j = i + 1; j < features.size(); ++j, ++n)
      sum += CosineAngleDeg(features[i], features[j]);
  return sum / static_cast<double>(n);
}

double RecallReport::At(std::size_t k) const {
  for (std::size_t i = 0; i < ks.size(); ++i)
    if (ks[i] == k) return recall_percent[i];
  throw Error("recall report has no K = " + std::to_string(k));
}

std::size_t RankOfTrue(std::span<const float> query, const std::vector<Feature> &gallery,
                       std::size_t true_index, Metric m) {
  if (true_index >= gallery.size()) throw Error("true index outside the gallery");
  const double dt = Distance(query, gallery[true_index], m);
  std::size_t rank = 0;
  for (std::size_t g = 0; g < gallery.size(); ++g) {
    if (g == true_index) continue;
    const double d = Distance(query, gallery[g], m);
    if (d < dt || (d == dt && g < true_index)) ++rank;
  }
  return rank;
}

RecallReport RecallAtK(const std::vector<Feature> &queries, const std::vector<Feature> &gallery,
                       const std::vector<std::size_t> &true_index, Metric m,
                       const std::vector<std::size_t> &ks) {
  if (queries.size() != true_index.size()) throw Error("recall: one true index per query");
  if (queries.empty()) throw Error("recall: no queries");
  RecallReport r;
  r.metric = m;
  r.ks = ks;
  r.gallery_size = gallery.size();
  for (std::size_t k : ks)
    if (k == 0 || k > gallery.size())
      throw Error("recall: K = " + std::to_string(k) + " exceeds gallery size " +
                  std::to_string(gallery.size()));
  std::vector<std::size_t> ranks(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q)
    ranks[q] = RankOfTrue(queries[q], gallery, true_index[q], m);
  for (std::size_t k : ks) {
    const auto hits = std::count_if(ranks.begin(), ranks.end(), [k](std::size_t r) { return r < k; });
    r.recall_percent.push_back(100.0 * static_cast<double>(hits) / queries.size());
    r.baseline_percent.push_back(100.0 * static_cast<double>(k) / gallery.size());
  }
  return r;
}

ConfusionMatrix Confusion(const std::vector<std::string> &true_labels,
                          const std::vector<std::string> &predicted,
                          const std::vector<std::string> &label_set) {
  if (true_labels.size() != predicted.size()) throw Error("confusion: length mismatch");
  auto index_of = [&](const std::string &l) {
    auto it = std::find(label_set.begin(), label_set.end(), l);
    if (it == label_set.end()) throw Error("confusion: unknown label '" + l + "'");
    return static_cast<std::size_t>(it - label_set.begin());
  };
  const std::size_t k = label_set.size();
  ConfusionMatrix c;
  c.labels = label_set;
  c.counts.assign(k, std::vector<std::size_t>(k, 0));
  c.normalized.assign(k, std::vector<double>(k, 0.0));
  for (std::size_t i = 0; i < true_labels.size(); ++i)
    ++c.counts[index_of(true_labels[i])][index_of(predicted[i])];
  for (std::size_t i = 0; i < k; ++i) {
    const double row = static_cast<double>(
        std::accumulate(c.counts[i].begin(), c.counts[i].end(), std::size_t{0}));
    if (row > 0)
      for (std::size_t j = 0; j < k; ++j) c.normalized[i][j] = c.counts[i][j] / row;
  }
  return c;
}

std::string ConfusionMatrix::ToText() const {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(3);
  s << "true\\pred";
  for (const auto &l : labels) s << "\t" << l;
  s << "\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    s << labels[i];
    for (double v : normalized[i]) s << "\t" << v;
    s << "\n";
  }
  return s.str();
}

void NearestCentroid::Fit(const std::vector<Feature> &features,
                          const std::vector<std::string> &labels) {
  if (features.size() != labels.size() || features.empty())
    throw Error("nearest centroid: need one label per feature");
  labels_.clear();
  centroids_.clear();
  std::vector<std::size_t> counts;
  for (std::size_t i = 0; i < features.size(); ++i) {
    auto it = std::find(labels_.begin(), labels_.end(), labels[i]);
    std::size_t c = static_cast<std::size_t>(it - labels_.begin());
    if (it == labels_.end()) {
      labels_.push_back(labels[i]);
      centroids_.emplace_back(features[i].size(), 0.0);
      counts.push_back(0);
    }
    if (features[i].size() != centroids_[c].size()) throw Error("nearest centroid: width mismatch");
    for (std::size_t d = 0; d < features[i].size(); ++d) centroids_[c][d] += features[i][d];
    ++counts[c];
  }
  // Sorted labels make the class order independent of sample order.
  std::vector<std::size_t> order(labels_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return labels_[a] < labels_[b]; });
  std::vector<std::string> l2;
  std::vector<std::vector<double>> c2;
  for (std::size_t o : order) {
    for (double &v : centroids_[o]) v /= static_cast<double>(counts[o]);
    l2.push_back(labels_[o]);
    c2.push_back(std::move(centroids_[o]));
  }
  labels_ = std::move(l2);
  centroids_ = std::move(c2);
}

std::string NearestCentroid::Predict(std::span<const float> feature) const {
  if (centroids_.empty()) throw Error("nearest centroid: not fitted");
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids_.size(); ++c) {
    double d = 0;
    for (std::size_t i = 0; i < feature.size(); ++i) {
      const double e = feature[i] - centroids_[c][i];
      d += e * e;
    }
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return labels_[best];
}

LandmarkSet ReadLandmarksCsv(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  LandmarkSet lm;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line.rfind("x", 0) == 0) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw Error(path + ": expected 'x,y' rows");
    if (n >= kNumLandmarks) throw Error(path + ": more than 68 landmarks");
    lm.points[n] = {std::stod(line.substr(0, comma)), std::stod(line.substr(comma + 1))};
    if (!std::isfinite(lm.points[n][0]) || !std::isfinite(lm.points[n][1]))
      throw Error(path + ": non-finite landmark");
    ++n;
  }
  if (n != kNumLandmarks)
    throw Error(path + ": expected 68 landmarks, found " + std::to_string(n));
  return lm;
}

std::string LandmarksCsv(const LandmarkSet &lm) {
  std::ostringstream s;
  s.precision(17);
  s << "x,y\n";
  for (const auto &p : lm.points) s << p[0] << "," << p[1] << "\n";
  return s.str();
}

const std::string &DefaultMeasureTableText() {
  // iBUG 68-point indices (0-based): 0-16 jaw, 27-30 nose bridge,
  // 31-35 nostrils (33 subnasale), 36-47 eyes, 48-59 outer lips,
  // 60-67 inner lips.
  static const std::string kTable =
      "upper_lip_height          length 33-51\n"
      "lateral_upper_lip_heights length 31-50 35-52\n"
      "jaw_width                 length 4-12\n"
      "nose_height               length 27-33\n"
      "nose_width                length 31-35\n"
      "labio_oral_region         index  33-57 / 48-54\n"
      "mandibular_index          index  62-8 / 4-12\n"
      "intercanthal_index        index  39-42 / 36-45\n"
      "nasal_index               index  31-35 / 27-33\n"
      "vermilion_height_index    index  51-62 / 66-57\n"
      "mouth_face_width_index    index  48-54 / 0-16\n"
      "nose_area                 area   27 35 34 33 32 31\n";
  return kTable;
}

std::vector<MeasureSpec> ParseMeasureTable(const std::string &text) {
  std::vector<MeasureSpec> out;
  std::istringstream in(text);
  std::string line;
  auto index = [](const std::string &tok) {
    const int i = std::stoi(tok);
    if (i < 0 || i >= static_cast<int>(kNumLandmarks))
      throw ConfigError("measure table: landmark index " + tok + " out of range");
    return i;
  };
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream toks(line);
    MeasureSpec m;
    std::string kind;
    if (!(toks >> m.name)) continue;
    if (!(toks >> kind)) throw ConfigError("measure table: '" + m.name + "' has no kind");
    bool after_slash = false;
    std::string tok;
    while (toks >> tok) {
      if (tok == "/") {
        after_slash = true;
        continue;
      }
      const auto dash = tok.find('-');
      if (kind == "area") {
        m.polygon.push_back(index(tok));
      } else if (dash != std::string::npos) {
        auto pair = std::make_pair(index(tok.substr(0, dash)), index(tok.substr(dash + 1)));
        (after_slash ? m.den : m.num).push_back(pair);
      } else {
        throw ConfigError("measure table: bad token '" + tok + "' in " + m.name);
      }
    }
    if (kind == "length") {
      m.kind = MeasureSpec::Kind::kLength;
      if (m.num.empty() || after_slash) throw ConfigError("measure table: bad length " + m.name);
    } else if (kind == "index") {
      m.kind = MeasureSpec::Kind::kIndex;
      if (m.num.empty() || m.den.empty()) throw ConfigError("measure table: bad index " + m.name);
    } else if (kind == "area") {
      m.kind = MeasureSpec::Kind::kArea;
      if (m.polygon.size() < 3) throw ConfigError("measure table: bad area " + m.name);
    } else {
      throw ConfigError("measure table: unknown kind '" + kind + "'");
    }
    out.push_back(std::move(m));
  }
  return out;
}

namespace {

double MeanDistance(const LandmarkSet &lm, const std::vector<std::pair<int, int>> &pairs) {
  double s = 0;
  for (const auto &[i, j] : pairs)
    s += std::hypot(lm.points[i][0] - lm.points[j][0], lm.points[i][1] - lm.points[j][1]);
  return s / static_cast<double>(pairs.size());
}

}  // namespace

std::vector<std::pair<std::string, double>> CraniofacialMeasures(
    const LandmarkSet &lm, const std::vector<MeasureSpec> &table) {
  std::vector<std::pair<std::string, double>> out;
  for (const MeasureSpec &m : table) {
    double v = 0;
    switch (m.kind) {
      case MeasureSpec::Kind::kLength:
        v = MeanDistance(lm, m.num);
        break;
      case MeasureSpec::Kind::kIndex: {
        const double den = MeanDistance(lm, m.den);
        if (den == 0) throw Error("degenerate geometry: " + m.name);
        v = 100.0 * MeanDistance(lm, m.num) / den;
        break;
      }
      case MeasureSpec::Kind::kArea: {
        double a = 0;
        for (std::size_t k = 0; k < m.polygon.size(); ++k) {
          const auto &p = lm.points[m.polygon[k]];
          const auto &q = lm.points[m.polygon[(k + 1) % m.polygon.size()]];
          a += p[0] * q[1] - q[0] * p[1];
        }
        v = 0.5 * std::abs(a);
        break;
      }
    }
    out.emplace_back(m.name, v);
  }
  return out;
}

double StudentTwoSidedP(double t, double df) {
  if (!(df > 0)) throw Error("Student t needs positive degrees of freedom");
  if (std::isinf(t)) return 0.0;
  const boost::math::students_t dist(df);
  return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))));
}

PearsonResult Pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 3) throw Error("pearson: need at least 3 samples");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0 || syy == 0) throw Error("zero variance");
  PearsonResult r;
  r.n = n;
  r.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
  const double df = static_cast<double>(n - 2);
  if (std::abs(r.r) >= 1.0) {
    r.p = 0.0;
  } else {
    r.p = StudentTwoSidedP(r.r * std::sqrt(df / (1.0 - r.r * r.r)), df);
  }
  return r;
}

std::vector<CraniofacialRow> CraniofacialCorrelations(
    const std::vector<LandmarkSet> &reference, const std::vector<LandmarkSet> &reconstructed,
    const std::vector<MeasureSpec> &table, const std::string &baseline_measure,
    uint64_t seed) {
  if (reference.size() != reconstructed.size()) throw Error("craniofacial: length mismatch");
  const std::size_t n = reference.size();
  std::vector<std::vector<double>> a(table.size(), std::vector<double>(n)), b = a;
  for (std::size_t i = 0; i < n; ++i) {
    const auto ma = CraniofacialMeasures(reference[i], table);
    const auto mb = CraniofacialMeasures(reconstructed[i], table);
    for (std::size_t k = 0; k < table.size(); ++k) {
      a[k][i] = ma[k].second;
      b[k][i] = mb[k].second;
    }
  }
  std::vector<CraniofacialRow> rows;
  for (std::size_t k = 0; k < table.size(); ++k)
    rows.push_back({table[k].name, Pearson(a[k], b[k])});
  for (std::size_t k = 0; k < table.size(); ++k) {
    if (table[k].name != baseline_measure) continue;
    // Random derangement (Sattolo's algorithm gives a single n-cycle).
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    CounterRng rng(seed, Fnv1a64("random_pairing"));
    for (std::size_t i = n; i > 1; --i) std::swap(perm[i - 1], perm[rng.Below(i - 1)]);
    std::vector<double> shuffled(n);
    for (std::size_t i = 0; i < n; ++i) shuffled[i] = b[k][perm[i]];
    rows.push_back({"random_baseline(" + baseline_measure + ")", Pearson(a[k], shuffled)});
  }
  return rows;
}

}  // namespace s2f
