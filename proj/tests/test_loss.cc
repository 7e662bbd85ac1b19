// s2f/tests/test_loss.cc

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

#include <cmath>

#include "s2f/loss.h"

using namespace s2f;

namespace {

Tensor<double> Random(std::size_t n, std::size_t d, uint64_t seed, double std = 1.0) {
  Tensor<double> t({n, d});
  CounterRng r(seed);
  FillGaussian(&t, &r, std);
  return t;
}

// Row r of x W + b, written out as loops.
std::vector<double> Affine(const Tensor<double> &x, std::size_t r, const Tensor<double> &w,
                           const Tensor<double> &b) {
  const std::size_t d = w.dim(0), k = w.dim(1);
  std::vector<double> y(k);
  for (std::size_t j = 0; j < k; ++j) {
    double s = b[j];
    for (std::size_t i = 0; i < d; ++i) s += x[r * d + i] * w[i * k + j];
    y[j] = s;
  }
  return y;
}

std::vector<double> Softmax(const std::vector<double> &z, double T) {
  double m = -INFINITY, s = 0;
  for (double v : z) m = std::max(m, v / T);
  std::vector<double> p(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) s += p[i] = std::exp(z[i] / T - m);
  for (double &v : p) v /= s;
  return p;
}

LossValues Oracle(const LossHeads<double> &h, const Tensor<double> &f, const Tensor<double> &s,
                  const LossWeights &w) {
  const std::size_t n = f.dim(0), d = f.dim(1);
  LossValues v;
  for (std::size_t r = 0; r < n; ++r) {
    const auto df = Affine(f, r, h.dec_w, h.dec_b), ds = Affine(s, r, h.dec_w, h.dec_b);
    for (std::size_t j = 0; j < df.size(); ++j) v.term1 += std::abs(df[j] - ds[j]) / n;
    double nf = 0, ns = 0;
    for (std::size_t i = 0; i < d; ++i) {
      nf += f[r * d + i] * f[r * d + i];
      ns += s[r * d + i] * s[r * d + i];
    }
    for (std::size_t i = 0; i < d; ++i)
      v.term2 += std::pow(f[r * d + i] / std::sqrt(nf) - s[r * d + i] / std::sqrt(ns), 2) / n;
    const auto pf = Softmax(Affine(f, r, h.vgg_w, h.vgg_b), w.temperature);
    const auto ps = Softmax(Affine(s, r, h.vgg_w, h.vgg_b), w.temperature);
    for (std::size_t j = 0; j < pf.size(); ++j) v.term3 -= pf[j] * std::log(ps[j]) / n;
  }
  v.total = v.term1 + w.lambda1 * v.term2 + w.lambda2 * v.term3;
  return v;
}

}  // namespace

TEST_SUITE("loss_heads") {
  TEST_CASE("head shapes and fixed initialisation") {
    const auto h = BuildHeads<float>(4096, 11, 13);
    CHECK(h.vgg_w.shape() == Shape{4096, 2622});
    CHECK(h.dec_w.shape() == Shape{4096, 1000});
    double ss = 0;
    for (float v : h.vgg_w.values()) ss += double(v) * v;
    CHECK(std::sqrt(ss / h.vgg_w.size()) == doctest::Approx(1 / 64.0).epsilon(0.01));
    CHECK(h.Checksum() == BuildHeads<float>(4096, 11, 13).Checksum());
    CHECK(h.Checksum() != BuildHeads<float>(4096, 12, 13).Checksum());
  }

  TEST_CASE("matches a scalar oracle") {
    const auto h = BuildHeads<double>(24, 5, 6, 30, 9);
    const Tensor<double> f = Random(3, 24, 1), s = Random(3, 24, 2);
    for (LossWeights w : {LossWeights{}, LossWeights{0.5, 3.0, 0.7}}) {
      const LossValues got = EvaluateLoss(h, f, s, w), ref = Oracle(h, f, s, w);
      CHECK(got.term1 == doctest::Approx(ref.term1).epsilon(1e-12));
      CHECK(got.term2 == doctest::Approx(ref.term2).epsilon(1e-12));
      CHECK(got.term3 == doctest::Approx(ref.term3).epsilon(1e-12));
      CHECK(got.total == doctest::Approx(ref.total).epsilon(1e-12));
    }
  }

  TEST_CASE("identical inputs leave only the target entropy") {
    const auto h = BuildHeads<double>(16, 5, 6, 20, 8);
    const Tensor<double> f = Random(4, 16, 3);
    const LossValues v = EvaluateLoss(h, f, f, LossWeights{});
    CHECK(v.term1 == 0.0);
    CHECK(v.term2 == doctest::Approx(0.0).epsilon(1e-15));
    double entropy = 0;
    for (std::size_t r = 0; r < 4; ++r)
      for (double p : Softmax(Affine(f, r, h.vgg_w, h.vgg_b), 2.0)) entropy -= p * std::log(p) / 4;
    CHECK(v.term3 == doctest::Approx(entropy).epsilon(1e-12));
  }

  TEST_CASE("uniform logits give log of the class count") {
    auto h = BuildHeads<double>(8, 5, 6);
    h.vgg_w.Fill(0);
    h.vgg_b.Fill(0.25);
    const LossValues v = EvaluateLoss(h, Random(2, 8, 4), Random(2, 8, 5), LossWeights{});
    CHECK(v.term3 == doctest::Approx(std::log(2622.0)).epsilon(1e-12));
  }

  TEST_CASE("distillation treats the target distribution as a constant") {
    const Tensor<double> a = Random(2, 6, 6), b = Random(2, 6, 7);
    Tape<double> tape;
    const Var va = tape.Watch(a), vb = tape.Watch(b);
    tape.RetainGrad(va);
    tape.RetainGrad(vb);
    tape.Backward(Mean(tape, DistillLoss(tape, va, vb, 2.0)));
    const Tensor<double> *ga = tape.FindGrad(va);
    if (ga)
      for (double g : ga->values()) CHECK(g == 0.0);
    REQUIRE(tape.FindGrad(vb) != nullptr);
    // d/db_j of -sum p_i(a) log p_i(b) is (p_j(b) - p_j(a)) / T per row, halved by the mean.
    for (std::size_t r = 0; r < 2; ++r) {
      std::vector<double> ra(a.data() + 6 * r, a.data() + 6 * r + 6);
      std::vector<double> rb(b.data() + 6 * r, b.data() + 6 * r + 6);
      const auto pa = Softmax(ra, 2.0), pb = Softmax(rb, 2.0);
      for (std::size_t j = 0; j < 6; ++j)
        CHECK((*tape.FindGrad(vb))[6 * r + j] ==
              doctest::Approx((pb[j] - pa[j]) / 2.0 / 2.0).epsilon(1e-12));
    }
  }

  TEST_CASE("mismatched shapes and bad weights are errors") {
    const auto h = BuildHeads<double>(10, 5, 6, 12, 7);
    CHECK_THROWS_AS(EvaluateLoss(h, Random(2, 10, 1), Random(3, 10, 2), LossWeights{}), Error);
    CHECK_THROWS_AS(EvaluateLoss(h, Random(2, 9, 1), Random(2, 9, 2), LossWeights{}), Error);
    LossWeights bad;
    bad.temperature = 0;
    CHECK_THROWS_AS(bad.Validate(), ConfigError);
  }

  TEST_CASE("gradient balance reports weighted term norms") {
    const auto h = BuildHeads<double>(4096, 11, 13);
    const Tensor<double> f = Random(8, 4096, 8, 0.05), s = Random(8, 4096, 9, 0.05);
    const GradBalanceReport r = GradBalance(h, f, s, LossWeights{});
    CHECK(r.weighted[0] == doctest::Approx(r.raw[0]));
    CHECK(r.weighted[1] == doctest::Approx(0.025 * r.raw[1]));
    CHECK(r.weighted[2] == doctest::Approx(200 * r.raw[2]));
    CHECK(r.Spread() >= 1.0);
  }
}
