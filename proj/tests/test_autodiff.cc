// s2f/tests/test_autodiff.cc

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

#include "s2f/gradcheck.h"
#include "s2f/ops.h"

using namespace s2f;

namespace {

Tensor<double> Random(Shape shape, uint64_t seed) {
  Tensor<double> t(std::move(shape));
  CounterRng r(seed);
  FillGaussian(&t, &r);
  return t;
}

// Cross-correlation by explicit index arithmetic.
Tensor<double> NaiveConv(const Tensor<double> &x, const Tensor<double> &w,
                         const Tensor<double> &b, const Conv2dGeometry &g) {
  const std::size_t n = x.dim(0), c = x.dim(1), t = x.dim(2), f = x.dim(3);
  const std::size_t k = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const std::size_t to = (t + g.pad_t0 + g.pad_t1 - kh) / g.stride_t + 1;
  const std::size_t fo = (f + g.pad_f0 + g.pad_f1 - kw) / g.stride_f + 1;
  Tensor<double> y({n, k, to, fo});
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t o = 0; o < k; ++o)
      for (std::size_t i = 0; i < to; ++i)
        for (std::size_t j = 0; j < fo; ++j) {
          double s = b[o];
          for (std::size_t ci = 0; ci < c; ++ci)
            for (std::size_t di = 0; di < kh; ++di)
              for (std::size_t dj = 0; dj < kw; ++dj) {
                const long ti = static_cast<long>(i * g.stride_t + di) - static_cast<long>(g.pad_t0);
                const long fj = static_cast<long>(j * g.stride_f + dj) - static_cast<long>(g.pad_f0);
                if (ti < 0 || fj < 0 || ti >= static_cast<long>(t) || fj >= static_cast<long>(f))
                  continue;
                s += x.at(a, ci, ti, fj) * w.at(o, ci, di, dj);
              }
          y.at(a, o, i, j) = s;
        }
  return y;
}

}  // namespace

TEST_SUITE("autodiff_core") {
  TEST_CASE("conv2d trivial kernels") {
    Tape<double> tape;
    Tensor<double> x = Random({1, 1, 5, 4}, 1);
    Tensor<double> w({1, 1, 1, 1}, 1.0);
    Var y = Conv2d(tape, tape.Borrow(x), tape.Constant(w), tape.Constant(Tensor<double>({1})),
                   Conv2dGeometry{});
    CHECK(MaxAbsDiff(tape.value(y), x) == 0.0);

    Var ones = Conv2d(tape, tape.Constant(Tensor<double>({1, 1, 4, 4}, 1.0)),
                      tape.Constant(Tensor<double>({1, 1, 2, 2}, 1.0)),
                      tape.Constant(Tensor<double>({1})), Conv2dGeometry{});
    CHECK(tape.value(ones).shape() == Shape{1, 1, 3, 3});
    for (double v : tape.value(ones).values()) CHECK(v == 4.0);
  }

  TEST_CASE("conv2d matches the naive loop with stride (2,1) and same padding") {
    Tensor<double> x = Random({2, 3, 9, 7}, 2), w = Random({4, 3, 4, 4}, 3), b = Random({4}, 4);
    // ceil(9/2) = 5 needs 4 + 2*4 - 9 = 3 padding rows; 7 at stride 1 needs 3.
    const Conv2dGeometry g{2, 1, 2, 1, 2, 1};
    Tape<double> tape;
    Var y = Conv2d(tape, tape.Borrow(x), tape.Borrow(w), tape.Borrow(b), g);
    const Tensor<double> ref = NaiveConv(x, w, b, g);
    CHECK(tape.value(y).shape() == Shape{2, 4, 5, 7});
    CHECK(MaxAbsDiff(tape.value(y), ref) < 1e-10);
  }

  TEST_CASE("conv2d shape mismatch names the dimension") {
    Tape<double> tape;
    CHECK_THROWS_WITH_AS(
        Conv2d(tape, tape.Constant(Tensor<double>({1, 2, 5, 5})),
               tape.Constant(Tensor<double>({1, 3, 2, 2})), tape.Constant(Tensor<double>({1})),
               Conv2dGeometry{}),
        doctest::Contains("channel"), Error);
  }

  TEST_CASE("maxpool_time") {
    Tape<double> tape;
    Tensor<double> mono({1, 1, 6, 1});
    for (std::size_t i = 0; i < 6; ++i) mono[i] = static_cast<double>(i);
    Var y = MaxPoolTime(tape, tape.Borrow(mono));
    CHECK(tape.value(y)[0] == 1.0);
    CHECK(tape.value(y)[1] == 3.0);
    CHECK(tape.value(y)[2] == 5.0);

    Tensor<double> flat({1, 1, 4, 1}, 2.0);
    Tape<double> t2;
    Var in = t2.Watch(flat);
    t2.RetainGrad(in);
    t2.Backward(Mean(t2, MaxPoolTime(t2, in)));
    const Tensor<double> &g = *t2.FindGrad(in);
    CHECK(g[0] == 0.5);
    CHECK(g[1] == 0.0);
    CHECK(g[2] == 0.5);
    CHECK(g[3] == 0.0);

    Tensor<double> x = Random({1, 2, 10, 5}, 5);
    Tape<double> t3;
    const Tensor<double> &out = t3.value(MaxPoolTime(t3, t3.Borrow(x)));
    REQUIRE(out.shape() == Shape{1, 2, 5, 5});
    for (std::size_t c = 0; c < 2; ++c)
      for (std::size_t t = 0; t < 5; ++t)
        for (std::size_t f = 0; f < 5; ++f)
          CHECK(out.at(0, c, t, f) == std::max(x.at(0, c, 2 * t, f), x.at(0, c, 2 * t + 1, f)));

    Tape<double> t4;
    CHECK_THROWS_AS(MaxPoolTime(t4, t4.Constant(Tensor<double>({1, 1, 1, 3}))), Error);
  }

  TEST_CASE("avgpool_time") {
    Tape<double> tape;
    Tensor<double> one = Random({1, 2, 1, 3}, 6);
    CHECK(MaxAbsDiff(tape.value(AvgPoolAllTime(tape, tape.Borrow(one))), one) == 0.0);

    Tensor<double> sym({1, 1, 2, 3});
    for (std::size_t f = 0; f < 3; ++f) {
      sym.at(0, 0, 0, f) = 0.7 * (f + 1);
      sym.at(0, 0, 1, f) = -0.7 * (f + 1);
    }
    for (double v : tape.value(AvgPoolAllTime(tape, tape.Borrow(sym))).values()) CHECK(v == 0.0);

    Tensor<double> x = Random({1, 3, 7, 4}, 7);
    const Tensor<double> &m = tape.value(AvgPoolAllTime(tape, tape.Borrow(x)));
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t f = 0; f < 4; ++f) {
        double s = 0;
        for (std::size_t t = 0; t < 7; ++t) s += x.at(0, c, t, f);
        CHECK(std::abs(m.at(0, c, 0, f) - s / 7) < 1e-12);
      }
  }

  TEST_CASE("batchnorm statistics") {
    Tensor<double> x = Random({4, 3, 5, 2}, 8);
    for (double &v : x.values()) v = 3 * v + 1;
    BatchNormState<double> st(3);
    Tape<double> tape;
    const Tensor<double> &y = tape.value(BatchNorm(tape, tape.Borrow(x), tape.Borrow(st.gamma),
                                                   tape.Borrow(st.beta), &st, Mode::kTrain));
    const std::size_t m = 4 * 5 * 2;
    for (std::size_t c = 0; c < 3; ++c) {
      double mean = 0, var = 0, ym = 0, yv = 0;
      for (std::size_t n = 0; n < 4; ++n)
        for (std::size_t t = 0; t < 5; ++t)
          for (std::size_t f = 0; f < 2; ++f) mean += x.at(n, c, t, f);
      mean /= m;
      for (std::size_t n = 0; n < 4; ++n)
        for (std::size_t t = 0; t < 5; ++t)
          for (std::size_t f = 0; f < 2; ++f) var += std::pow(x.at(n, c, t, f) - mean, 2);
      var /= m;
      for (std::size_t n = 0; n < 4; ++n)
        for (std::size_t t = 0; t < 5; ++t)
          for (std::size_t f = 0; f < 2; ++f) {
            const double ref = (x.at(n, c, t, f) - mean) / std::sqrt(var + st.epsilon);
            CHECK(std::abs(y.at(n, c, t, f) - ref) < 1e-10);
            ym += y.at(n, c, t, f);
          }
      ym /= m;
      for (std::size_t n = 0; n < 4; ++n)
        for (std::size_t t = 0; t < 5; ++t)
          for (std::size_t f = 0; f < 2; ++f) yv += std::pow(y.at(n, c, t, f) - ym, 2);
      CHECK(std::abs(ym) < 1e-6);
      CHECK(std::abs(yv / m - 1) < 1e-5);
      // Running statistics move 10% of the way, with the unbiased variance.
      CHECK(st.running_mean[c] == doctest::Approx(0.1 * mean).epsilon(1e-12));
      CHECK(st.running_var[c] == doctest::Approx(0.9 + 0.1 * var * m / (m - 1)).epsilon(1e-12));
    }

    BatchNormState<double> fresh(3);
    Tape<double> t2;
    const Tensor<double> &e = t2.value(BatchNorm(t2, t2.Borrow(x), t2.Borrow(fresh.gamma),
                                                 t2.Borrow(fresh.beta), &fresh, Mode::kEval));
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(e[i] == doctest::Approx(x[i] / std::sqrt(1 + fresh.epsilon)).epsilon(1e-12));

    BatchNormState<double> one(1);
    Tape<double> t3;
    CHECK_THROWS_WITH_AS(BatchNorm(t3, t3.Constant(Tensor<double>({1, 1, 1, 1})),
                                   t3.Borrow(one.gamma), t3.Borrow(one.beta), &one, Mode::kTrain),
                         doctest::Contains("degenerate batch"), Error);
  }

  TEST_CASE("softmax, normalisation and their errors") {
    Tape<double> tape;
    Tensor<double> uniform({2, 7}, 3.0);
    for (double T : {0.5, 1.0, 2.0})
      for (double v : tape.value(SoftmaxT(tape, tape.Borrow(uniform), T)).values())
        CHECK(v == doctest::Approx(1.0 / 7).epsilon(1e-14));
    Tensor<double> zero({1, 4});
    CHECK_THROWS_WITH_AS(UnitNormalize(tape, tape.Borrow(zero)), "zero-norm feature", Error);
    Tensor<double> x = Random({2, 5}, 9);
    const Tensor<double> &u = tape.value(UnitNormalize(tape, tape.Borrow(x)));
    for (std::size_t r = 0; r < 2; ++r) {
      double s = 0;
      for (std::size_t j = 0; j < 5; ++j) s += u[r * 5 + j] * u[r * 5 + j];
      CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
    }
  }

  TEST_CASE("a pure linear layer has exact gradients") {
    CounterRng rng(10);
    GradcheckCase c{"linear_exact",
                    {Random({3, 4}, 11), Random({4, 2}, 12), Random({2}, 13)},
                    {true, true, true},
                    [](Tape<double> &t, const std::vector<Var> &v) {
                      return Linear(t, v[0], v[1], v[2]);
                    }};
    GradcheckResult r = RunGradcheck(c, 1e-5, 1e-9);
    CHECK(r.passed);
    CHECK(r.max_rel_error < 1e-9);
  }

  TEST_CASE("finite-difference suite") {
    for (const auto &c : GradcheckSuite()) {
      CAPTURE(c.name);
      GradcheckResult r = RunGradcheck(c);
      CHECK(r.passed);
      if (c.name == "total_loss") CHECK(r.max_rel_error < 1e-6);
    }
  }

  TEST_CASE("backward accumulates over fan-out and is single use") {
    Tape<double> tape;
    Tensor<double> x = Random({2, 3}, 14);
    Var in = tape.Watch(x);
    tape.RetainGrad(in);
    Var y = LinearCombination(tape, {in, in}, {2.0, 3.0});
    tape.Backward(Mean(tape, y));
    for (double g : tape.FindGrad(in)->values()) CHECK(g == doctest::Approx(5.0 / 6));
    CHECK_THROWS_AS(tape.Backward(Mean(tape, y)), Error);
  }
}
