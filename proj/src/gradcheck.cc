// s2f/gradcheck.cc

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

#include "s2f/gradcheck.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "s2f/encoder.h"
#include "s2f/loss.h"
#include "s2f/ops.h"

namespace s2f {
namespace {

// Scalar sum_i out_i r_i for a fixed projection r.
Var Project(Tape<double> &tape, Var out, const Tensor<double> &r) {
  const std::size_t m = tape.value(out).size();
  if (m != r.size()) throw Error("gradcheck projection size mismatch");
  Var flat = Reshape(tape, out, {1, m});
  return Linear(tape, flat, tape.Borrow(r), tape.Constant(Tensor<double>({1})));
}

Tensor<double> Gaussian(Shape shape, CounterRng *rng, double stddev = 1.0) {
  Tensor<double> t(std::move(shape));
  FillGaussian(&t, rng, stddev);
  return t;
}

// Gaussian values pushed at least `margin` away from zero.
Tensor<double> AwayFromZero(Shape shape, CounterRng *rng, double margin = 0.05) {
  Tensor<double> t = Gaussian(std::move(shape), rng);
  for (std::size_t i = 0; i < t.size(); ++i)
    t.data()[i] += t.data()[i] >= 0 ? margin : -margin;
  return t;
}

// Distinct values (a shuffled grid with spacing 0.01 plus small noise), so
// every max-pool window has a strict maximum.
Tensor<double> Distinct(Shape shape, CounterRng *rng) {
  Tensor<double> t(std::move(shape));
  std::vector<double> v(t.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.01 * static_cast<double>(i);
  for (std::size_t i = v.size() - 1; i > 0; --i) std::swap(v[i], v[rng->Below(i + 1)]);
  for (std::size_t i = 0; i < v.size(); ++i) t.data()[i] = v[i] + rng->Uniform(0, 0.001);
  return t;
}

double Evaluate(const GradcheckCase &c, const std::vector<Tensor<double>> &inputs,
                const Tensor<double> &r) {
  Tape<double> tape;
  std::vector<Var> vars;
  for (const auto &t : inputs) vars.push_back(tape.Borrow(t));
  return tape.value(Project(tape, c.build(tape, vars), r)).data()[0];
}

}  // namespace

GradcheckResult RunGradcheck(const GradcheckCase &c, double step, double tolerance) {
  GradcheckResult res;
  res.name = c.name;
  if (c.checked.size() != c.inputs.size()) throw Error(c.name + ": checked/inputs mismatch");

  // The projection is keyed on the case name so every case is reproducible.
  Tensor<double> r;
  {
    Tape<double> probe;
    std::vector<Var> vars;
    for (const auto &t : c.inputs) vars.push_back(probe.Borrow(t));
    const std::size_t m = probe.value(c.build(probe, vars)).size();
    CounterRng rng(Fnv1a64(c.name), Fnv1a64("projection"));
    r = Gaussian({m, 1}, &rng);
  }

  Tape<double> tape;
  std::vector<Var> vars;
  for (std::size_t i = 0; i < c.inputs.size(); ++i)
    vars.push_back(c.checked[i] ? tape.Watch(c.inputs[i]) : tape.Borrow(c.inputs[i]));
  for (std::size_t i = 0; i < vars.size(); ++i)
    if (c.checked[i]) tape.RetainGrad(vars[i]);
  tape.Backward(Project(tape, c.build(tape, vars), r));

  std::vector<Tensor<double>> work = c.inputs;
  for (std::size_t i = 0; i < c.inputs.size(); ++i) {
    if (!c.checked[i]) continue;
    const Tensor<double> *analytic = tape.FindGrad(vars[i]);
    std::vector<double> numeric(c.inputs[i].size());
    for (std::size_t k = 0; k < numeric.size(); ++k) {
      double &x = work[i].data()[k];
      const double x0 = x;
      x = x0 + step;
      const double fp = Evaluate(c, work, r);
      x = x0 - step;
      const double fm = Evaluate(c, work, r);
      x = x0;
      numeric[k] = (fp - fm) / (2 * step);
    }
    double scale = 0;
    for (double n : numeric) scale = std::max(scale, std::abs(n));
    for (std::size_t k = 0; k < numeric.size(); ++k) {
      const double a = analytic ? analytic->data()[k] : 0.0;
      const double denom = std::max({std::abs(numeric[k]), 1e-3 * scale, 1e-300});
      res.max_rel_error = std::max(res.max_rel_error, std::abs(a - numeric[k]) / denom);
    }
    res.elements += numeric.size();
  }
  res.passed = std::isfinite(res.max_rel_error) && res.max_rel_error < tolerance;
  return res;
}

std::vector<GradcheckCase> GradcheckSuite(uint64_t seed) {
  CounterRng rng(seed, Fnv1a64("gradcheck"));
  std::vector<GradcheckCase> s;

  for (const auto &[name, geom] :
       {std::pair{"conv2d", Conv2dGeometry{1, 1, 2, 1, 2, 1}},
        std::pair{"conv2d_stride2", Conv2dGeometry{2, 2, 1, 1, 1, 1}}}) {
    s.push_back({name,
                 {Gaussian({2, 2, 6, 5}, &rng), Gaussian({3, 2, 4, 4}, &rng, 0.5),
                  Gaussian({3}, &rng)},
                 {true, true, true},
                 [geom](Tape<double> &t, const std::vector<Var> &v) {
                   return Conv2d(t, v[0], v[1], v[2], geom);
                 }});
  }
  s.push_back({"maxpool_time", {Distinct({2, 2, 7, 3}, &rng)}, {true},
               [](Tape<double> &t, const std::vector<Var> &v) { return MaxPoolTime(t, v[0]); }});
  s.push_back({"avgpool_time", {Gaussian({2, 3, 5, 4}, &rng)}, {true},
               [](Tape<double> &t, const std::vector<Var> &v) { return AvgPoolAllTime(t, v[0]); }});
  for (Mode mode : {Mode::kTrain, Mode::kEval}) {
    BatchNormState<double> init(3);
    for (std::size_t c = 0; c < 3; ++c) {
      init.running_mean.data()[c] = rng.Gaussian();
      init.running_var.data()[c] = 0.5 + rng.Uniform();
    }
    s.push_back({mode == Mode::kTrain ? "batchnorm_train" : "batchnorm_eval",
                 {Gaussian({4, 3, 3, 2}, &rng), AwayFromZero({3}, &rng, 0.5),
                  Gaussian({3}, &rng)},
                 {true, true, true},
                 [init, mode, state = std::make_shared<BatchNormState<double>>(init)](
                     Tape<double> &t, const std::vector<Var> &v) {
                   // Resetting per evaluation keeps the running update out of
                   // the finite differences.
                   *state = init;
                   return BatchNorm(t, v[0], v[1], v[2], state.get(), mode);
                 }});
  }
  s.push_back({"relu", {AwayFromZero({3, 7}, &rng)}, {true},
               [](Tape<double> &t, const std::vector<Var> &v) { return Relu(t, v[0]); }});
  s.push_back({"linear",
               {Gaussian({3, 5}, &rng), Gaussian({5, 4}, &rng), Gaussian({4}, &rng)},
               {true, true, true},
               [](Tape<double> &t, const std::vector<Var> &v) {
                 return Linear(t, v[0], v[1], v[2]);
               }});
  s.push_back({"reshape", {Gaussian({2, 3, 4}, &rng)}, {true},
               [](Tape<double> &t, const std::vector<Var> &v) {
                 return Reshape(t, v[0], {4, 6});
               }});
  s.push_back({"softmax_t", {Gaussian({3, 6}, &rng, 2.0)}, {true},
               [](Tape<double> &t, const std::vector<Var> &v) {
                 return SoftmaxT(t, v[0], 2.0);
               }});
  s.push_back({"distill_loss", {Gaussian({3, 6}, &rng, 2.0), Gaussian({3, 6}, &rng, 2.0)},
               {false, true},
               [](Tape<double> &t, const std::vector<Var> &v) {
                 return DistillLoss(t, v[0], v[1], 2.0);
               }});
  {
    Tensor<double> a = Gaussian({3, 5}, &rng);
    Tensor<double> b = a;
    for (std::size_t i = 0; i < b.size(); ++i)
      b.data()[i] += (rng.Uniform() < 0.5 ? -1 : 1) * (0.1 + rng.Uniform());
    s.push_back({"l1_diff", {a, b}, {true, true},
                 [](Tape<double> &t, const std::vector<Var> &v) { return L1Diff(t, v[0], v[1]); }});
  }
  s.push_back({"l2sq_diff", {Gaussian({3, 5}, &rng), Gaussian({3, 5}, &rng)}, {true, true},
               [](Tape<double> &t, const std::vector<Var> &v) {
                 return L2SqDiff(t, v[0], v[1]);
               }});
  s.push_back({"unit_normalize", {Gaussian({3, 5}, &rng)}, {true},
               [](Tape<double> &t, const std::vector<Var> &v) { return UnitNormalize(t, v[0]); }});
  s.push_back({"linear_combination",
               {Gaussian({2, 3}, &rng), Gaussian({2, 3}, &rng), Gaussian({2, 3}, &rng)},
               {true, true, true},
               [](Tape<double> &t, const std::vector<Var> &v) {
                 return LinearCombination(t, {v[0], v[1], v[2]}, {1.0, 0.025, 200.0});
               }});
  s.push_back({"mean", {Gaussian({3, 4}, &rng)}, {true},
               [](Tape<double> &t, const std::vector<Var> &v) { return Mean(t, v[0]); }});
  {
    // A narrow encoder with the full layer sequence, train-mode BN included.
    EncoderConfig cfg;
    cfg.conv_channels = {3, 3, 4, 4, 4, 4, 4, 4, 4};
    cfg.fc_widths = {6, 5};
    cfg.min_frames = 16;
    const auto init = BuildEncoder<double>(cfg, 17, seed);
    auto params = std::make_shared<EncoderParams<double>>(init);
    s.push_back({"encoder_stack", {Gaussian({1, 2, 32, 17}, &rng)}, {true},
                 [init, params](Tape<double> &t, const std::vector<Var> &v) {
                   *params = init;
                   return EncoderForward(t, *params, v[0], Mode::kTrain).output;
                 }});
  }
  {
    auto heads = std::make_shared<LossHeads<double>>(BuildHeads<double>(12, 5, 6, 7, 5));
    s.push_back({"total_loss", {Gaussian({3, 12}, &rng), Gaussian({3, 12}, &rng)},
                 {false, true},
                 [heads](Tape<double> &t, const std::vector<Var> &v) {
                   return TotalLoss(t, *heads, v[0], v[1], LossWeights{}).total;
                 }});
  }
  return s;
}

std::string GradcheckReport(const std::vector<GradcheckResult> &results) {
  std::string out;
  char line[160];
  for (const auto &r : results) {
    std::snprintf(line, sizeof(line), "%-20s %.3e %6zu %s\n", r.name.c_str(), r.max_rel_error,
                  r.elements, r.passed ? "PASS" : "FAIL");
    out += line;
  }
  return out;
}

}  // namespace s2f
