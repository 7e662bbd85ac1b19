// s2f/loss.h

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

// Training objective. For a target feature v_f and prediction v_s,
//
//   L = |dec(v_f) - dec(v_s)|_1
//     + lambda1 * |v_f/|v_f| - v_s/|v_s||_2^2
//     + lambda2 * distill(vgg(v_f), vgg(v_s))
//
// where vgg: R^4096 -> R^2622 and dec: R^4096 -> R^1000 are frozen affine
// heads and distill(a, b) = -sum_i softmax(a/T)_i log softmax(b/T)_i.
// Each term is averaged over the batch.

#ifndef S2F_LOSS_H_
#define S2F_LOSS_H_

#include <cstdint>

#include "s2f/ops.h"

namespace s2f {

struct LossWeights {
  double lambda1 = 0.025;
  double lambda2 = 200.0;
  double temperature = 2.0;

  void Validate() const;
};

/// Frozen affine heads; weights are [in, out] as consumed by Linear().
template <typename Real>
struct LossHeads {
  Tensor<Real> vgg_w, vgg_b;  // [4096, 2622], [2622]
  Tensor<Real> dec_w, dec_b;  // [4096, 1000], [1000]
  uint64_t vgg_seed = 0, dec_seed = 0;

  /// FNV-1a over all four tensors' bytes.
  uint64_t Checksum() const;
  std::size_t feature_dim() const { return vgg_w.dim(0); }
};

/// Gaussian weights and biases with std 1/sqrt(feature_dim).
template <typename Real>
LossHeads<Real> BuildHeads(std::size_t feature_dim, uint64_t vgg_seed, uint64_t dec_seed,
                           std::size_t vgg_classes = 2622, std::size_t dec_width = 1000);

/// Scalar ([1]) nodes of one loss evaluation.
struct LossGraph {
  Var total, term1, term2, term3;
};

struct LossValues {
  double total = 0, term1 = 0, term2 = 0, term3 = 0;
};

/// v_f and v_s are [N, D]. Only v_s carries a gradient; the heads enter the
/// tape as borrowed constants.
template <typename Real>
LossGraph TotalLoss(Tape<Real> &tape, const LossHeads<Real> &heads, Var v_f, Var v_s,
                    const LossWeights &w);

template <typename Real>
LossValues ReadLoss(const Tape<Real> &tape, const LossGraph &g);

/// Convenience: loss value of a batch without building a persistent tape.
template <typename Real>
LossValues EvaluateLoss(const LossHeads<Real> &heads, const Tensor<Real> &v_f,
                        const Tensor<Real> &v_s, const LossWeights &w);

/// L2 norms of the gradient of each weighted term with respect to v_s,
/// i.e. |d term1/d v_s|, |d (lambda1 term2)/d v_s|, |d (lambda2 term3)/d v_s|.
/// The unweighted norms are reported alongside.
struct GradBalanceReport {
  double weighted[3] = {0, 0, 0};
  double raw[3] = {0, 0, 0};
  /// Largest over smallest nonzero weighted norm.
  double Spread() const;
};

template <typename Real>
GradBalanceReport GradBalance(const LossHeads<Real> &heads, const Tensor<Real> &v_f,
                              const Tensor<Real> &v_s, const LossWeights &w);

}  // namespace s2f

#endif  // S2F_LOSS_H_
