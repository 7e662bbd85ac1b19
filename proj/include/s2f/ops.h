// s2f/ops.h

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

// Differentiable operations over Tape<Real>. Image-like tensors are laid out
// [N, C, T, F] (batch, channel, time, frequency). All ops are explicitly
// instantiated for float and double.

#ifndef S2F_OPS_H_
#define S2F_OPS_H_

#include <vector>

#include "s2f/tape.h"

namespace s2f {

enum class Mode { kTrain, kEval };

struct Conv2dGeometry {
  std::size_t stride_t = 1, stride_f = 1;
  std::size_t pad_t0 = 0, pad_t1 = 0;  // before/after along time
  std::size_t pad_f0 = 0, pad_f1 = 0;  // before/after along frequency
};

/// Output extent of one convolution axis: floor((in + p0 + p1 - k) / s) + 1.
/// Returns 0 when the kernel does not fit.
std::size_t ConvOutputExtent(std::size_t in, std::size_t p0, std::size_t p1,
                             std::size_t kernel, std::size_t stride);

template <typename Real>
struct BatchNormState {
  Tensor<Real> gamma, beta;                 // learnable, [C]
  Tensor<Real> running_mean, running_var;   // [C]
  double momentum = 0.1;                    // new = (1 - m) old + m batch
  double epsilon = 1e-5;

  BatchNormState() = default;
  explicit BatchNormState(std::size_t channels)
      : gamma({channels}, Real(1)), beta({channels}, Real(0)),
        running_mean({channels}, Real(0)), running_var({channels}, Real(1)) {}
};

/// Cross-correlation: x [N,C,T,F], w [K,C,kh,kw], b [K] -> [N,K,T',F'].
template <typename Real>
Var Conv2d(Tape<Real> &tape, Var x, Var w, Var b, const Conv2dGeometry &geom);

/// Max over non-overlapping-or-strided windows along time only. Ties send
/// the gradient to the earliest element of the window.
template <typename Real>
Var MaxPoolTime(Tape<Real> &tape, Var x, std::size_t kernel = 2, std::size_t stride = 2);

/// Mean over the whole time axis: [N,C,T,F] -> [N,C,1,F].
template <typename Real>
Var AvgPoolAllTime(Tape<Real> &tape, Var x);

/// Per-channel normalisation over (N,T,F). In train mode batch statistics
/// are used (with exact gradients through them) and the running statistics
/// in `state` are updated; in eval mode the running statistics are used.
template <typename Real>
Var BatchNorm(Tape<Real> &tape, Var x, Var gamma, Var beta, BatchNormState<Real> *state,
              Mode mode);

template <typename Real>
Var Relu(Tape<Real> &tape, Var x);

/// x [N,D] * W [D,D'] + b [D'].
template <typename Real>
Var Linear(Tape<Real> &tape, Var x, Var w, Var b);

template <typename Real>
Var Reshape(Tape<Real> &tape, Var x, Shape shape);

/// Row-wise softmax of logits / T, computed with max subtraction.
template <typename Real>
Var SoftmaxT(Tape<Real> &tape, Var logits, double temperature);

/// Row-wise -sum_i p_i(a) log p_i(b) with p(x) = softmax(x / T). The target
/// `a` is treated as a constant. Returns [N].
template <typename Real>
Var DistillLoss(Tape<Real> &tape, Var a, Var b, double temperature);

/// Row-wise sum |a - b| -> [N].
template <typename Real>
Var L1Diff(Tape<Real> &tape, Var a, Var b);

/// Row-wise sum (a - b)^2 -> [N].
template <typename Real>
Var L2SqDiff(Tape<Real> &tape, Var a, Var b);

/// Row-wise v / ||v||_2; a zero row is an error ("zero-norm feature").
template <typename Real>
Var UnitNormalize(Tape<Real> &tape, Var x);

/// sum_k coeffs[k] * xs[k]; all xs share one shape.
template <typename Real>
Var LinearCombination(Tape<Real> &tape, const std::vector<Var> &xs,
                      const std::vector<double> &coeffs);

/// Mean of all elements -> [1].
template <typename Real>
Var Mean(Tape<Real> &tape, Var x);

}  // namespace s2f

#endif  // S2F_OPS_H_
