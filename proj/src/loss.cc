// s2f/loss.cc

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

#include "s2f/loss.h"

#include <algorithm>
#include <cmath>
#include <limits>

namespace s2f {

void LossWeights::Validate() const {
  if (!(lambda1 >= 0) || !(lambda2 >= 0))
    throw ConfigError("loss weights must be non-negative");
  if (!(temperature > 0)) throw ConfigError("distillation temperature must be positive");
}

template <typename Real>
uint64_t LossHeads<Real>::Checksum() const {
  uint64_t h = Fnv1a64("");
  for (const Tensor<Real> *t : {&vgg_w, &vgg_b, &dec_w, &dec_b})
    h = Fnv1a64(t->data(), t->size() * sizeof(Real), h);
  return h;
}

template <typename Real>
LossHeads<Real> BuildHeads(std::size_t feature_dim, uint64_t vgg_seed, uint64_t dec_seed,
                           std::size_t vgg_classes, std::size_t dec_width) {
  LossHeads<Real> h;
  h.vgg_seed = vgg_seed;
  h.dec_seed = dec_seed;
  const double std = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  h.vgg_w = Tensor<Real>({feature_dim, vgg_classes});
  h.vgg_b = Tensor<Real>({vgg_classes});
  h.dec_w = Tensor<Real>({feature_dim, dec_width});
  h.dec_b = Tensor<Real>({dec_width});
  CounterRng rv(vgg_seed, Fnv1a64("head.vgg"));
  FillGaussian(&h.vgg_w, &rv, std);
  FillGaussian(&h.vgg_b, &rv, std);
  CounterRng rd(dec_seed, Fnv1a64("head.dec"));
  FillGaussian(&h.dec_w, &rd, std);
  FillGaussian(&h.dec_b, &rd, std);
  return h;
}

template <typename Real>
LossGraph TotalLoss(Tape<Real> &tape, const LossHeads<Real> &heads, Var v_f, Var v_s,
                    const LossWeights &w) {
  w.Validate();
  const Tensor<Real> &f = tape.value(v_f), &s = tape.value(v_s);
  if (f.shape() != s.shape() || f.rank() != 2)
    throw Error("loss: v_f " + ShapeString(f.shape()) + " and v_s " + ShapeString(s.shape()) +
                " must both be [N, D]");
  if (f.dim(1) != heads.feature_dim())
    throw Error("loss: feature width " + std::to_string(f.dim(1)) + " does not match heads (" +
                std::to_string(heads.feature_dim()) + ")");
  const Var dw = tape.Borrow(heads.dec_w), db = tape.Borrow(heads.dec_b);
  const Var vw = tape.Borrow(heads.vgg_w), vb = tape.Borrow(heads.vgg_b);

  LossGraph g;
  g.term1 = Mean(tape, L1Diff(tape, Linear(tape, v_f, dw, db), Linear(tape, v_s, dw, db)));
  g.term2 = Mean(tape, L2SqDiff(tape, UnitNormalize(tape, v_f), UnitNormalize(tape, v_s)));
  g.term3 = Mean(tape, DistillLoss(tape, Linear(tape, v_f, vw, vb), Linear(tape, v_s, vw, vb),
                                   w.temperature));
  g.total = LinearCombination(tape, {g.term1, g.term2, g.term3}, {1.0, w.lambda1, w.lambda2});
  return g;
}

template <typename Real>
LossValues ReadLoss(const Tape<Real> &tape, const LossGraph &g) {
  LossValues v;
  v.total = tape.value(g.total)[0];
  v.term1 = tape.value(g.term1)[0];
  v.term2 = tape.value(g.term2)[0];
  v.term3 = tape.value(g.term3)[0];
  return v;
}

template <typename Real>
LossValues EvaluateLoss(const LossHeads<Real> &heads, const Tensor<Real> &v_f,
                        const Tensor<Real> &v_s, const LossWeights &w) {
  Tape<Real> tape;
  return ReadLoss(tape, TotalLoss(tape, heads, tape.Borrow(v_f), tape.Borrow(v_s), w));
}

double GradBalanceReport::Spread() const {
  double lo = std::numeric_limits<double>::infinity(), hi = 0;
  for (double n : weighted)
    if (n > 0) {
      lo = std::min(lo, n);
      hi = std::max(hi, n);
    }
  return hi > 0 ? hi / lo : 0.0;
}

template <typename Real>
GradBalanceReport GradBalance(const LossHeads<Real> &heads, const Tensor<Real> &v_f,
                              const Tensor<Real> &v_s, const LossWeights &w) {
  GradBalanceReport r;
  const double lambdas[3] = {1.0, w.lambda1, w.lambda2};
  for (int k = 0; k < 3; ++k) {
    Tape<Real> tape;
    const Var vs = tape.Input(v_s);
    const LossGraph g = TotalLoss(tape, heads, tape.Borrow(v_f), vs, w);
    const Var term[3] = {g.term1, g.term2, g.term3};
    tape.Backward(term[k]);
    double ss = 0;
    if (const Tensor<Real> *grad = tape.FindGrad(vs))
      for (Real v : grad->values()) ss += static_cast<double>(v) * v;
    r.raw[k] = std::sqrt(ss);
    r.weighted[k] = lambdas[k] * r.raw[k];
  }
  return r;
}

#define S2F_INSTANTIATE_LOSS(Real)                                                       \
  template struct LossHeads<Real>;                                                       \
  template LossHeads<Real> BuildHeads<Real>(std::size_t, uint64_t, uint64_t, std::size_t, \
                                            std::size_t);                                \
  template LossGraph TotalLoss(Tape<Real> &, const LossHeads<Real> &, Var, Var,          \
                               const LossWeights &);                                     \
  template LossValues ReadLoss(const Tape<Real> &, const LossGraph &);                   \
  template LossValues EvaluateLoss(const LossHeads<Real> &, const Tensor<Real> &,        \
                                   const Tensor<Real> &, const LossWeights &);           \
  template GradBalanceReport GradBalance(const LossHeads<Real> &, const Tensor<Real> &,  \
                                         const Tensor<Real> &, const LossWeights &);

S2F_INSTANTIATE_LOSS(float)
S2F_INSTANTIATE_LOSS(double)

#undef S2F_INSTANTIATE_LOSS

}  // namespace s2f
