// s2f/ops.cc

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

#include "s2f/ops.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <string>

namespace s2f {

std::string ShapeString(const Shape &shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

std::string HexU64(uint64_t v) {
  static const char *kDigits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[i] = kDigits[v & 0xf];
  return s;
}

std::size_t ConvOutputExtent(std::size_t in, std::size_t p0, std::size_t p1,
                             std::size_t kernel, std::size_t stride) {
  if (stride == 0) throw Error("convolution stride must be >= 1");
  std::size_t padded = in + p0 + p1;
  if (padded < kernel) return 0;
  return (padded - kernel) / stride + 1;
}

namespace {

using Index = std::ptrdiff_t;

void RequireRank(const Shape &s, std::size_t rank, const char *op, const char *arg) {
  if (s.size() != rank)
    throw Error(std::string(op) + ": " + arg + " must have rank " + std::to_string(rank) +
                ", got " + ShapeString(s));
}

void RequireSameShape(const Shape &a, const Shape &b, const char *op) {
  if (a != b)
    throw Error(std::string(op) + ": shape mismatch " + ShapeString(a) + " vs " +
                ShapeString(b));
}

template <typename Real>
Tensor<Real> Checked(Tensor<Real> t, const char *op) {
  if (!t.AllFinite()) throw Error(std::string("non-finite value produced by ") + op);
  return t;
}

// out[f] += sum_j w[j] * in[f + off0 + j * step] for f in [0, n_out), with
// `in` read as zero outside [0, n_in).
template <typename Real>
void RowCorrelateAcc(Real *__restrict out, Index n_out, const Real *__restrict in,
                     Index n_in, const Real *w, Index kw, Index off0, Index step) {
  Index off_lo = std::min(off0, off0 + (kw - 1) * step);
  Index off_hi = std::max(off0, off0 + (kw - 1) * step);
  Index lo = std::clamp<Index>(-off_lo, 0, n_out);
  Index hi = std::clamp<Index>(n_in - off_hi, lo, n_out);
  auto edge = [&](Index f) {
    Real acc = out[f];
    for (Index j = 0; j < kw; ++j) {
      Index src = f + off0 + j * step;
      if (src >= 0 && src < n_in) acc += w[j] * in[src];
    }
    out[f] = acc;
  };
  for (Index f = 0; f < lo; ++f) edge(f);
  if (kw == 4) {
    const Real *p0 = in + off0, *p1 = in + off0 + step, *p2 = in + off0 + 2 * step,
               *p3 = in + off0 + 3 * step;
    const Real w0 = w[0], w1 = w[1], w2 = w[2], w3 = w[3];
#pragma omp simd
    for (Index f = lo; f < hi; ++f)
      out[f] += w0 * p0[f] + w1 * p1[f] + w2 * p2[f] + w3 * p3[f];
  } else {
    for (Index j = 0; j < kw; ++j) {
      const Real *p = in + off0 + j * step;
      const Real wj = w[j];
#pragma omp simd
      for (Index f = lo; f < hi; ++f) out[f] += wj * p[f];
    }
  }
  for (Index f = std::max(hi, lo); f < n_out; ++f) edge(f);
}

template <typename Real>
Real Dot(const Real *__restrict a, const Real *__restrict b, Index n) {
  Real acc = 0;
#pragma omp simd reduction(+ : acc)
  for (Index i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

struct ConvDims {
  Index N, C, T, F, K, kh, kw, To, Fo;
  Index st, sf, pt0, pf0;
};

template <typename Real>
void ConvForward(const Tensor<Real> &x, const Tensor<Real> &w, const Tensor<Real> &b,
                 const ConvDims &d, Tensor<Real> *y) {
  for (Index n = 0; n < d.N; ++n)
    for (Index k = 0; k < d.K; ++k)
      for (Index to = 0; to < d.To; ++to) {
        Real *yr = y->ptr(n, k, to, 0);
        std::fill(yr, yr + d.Fo, b[k]);
        for (Index c = 0; c < d.C; ++c)
          for (Index i = 0; i < d.kh; ++i) {
            Index ti = to * d.st + i - d.pt0;
            if (ti < 0 || ti >= d.T) continue;
            const Real *xr = x.ptr(n, c, ti, 0);
            const Real *wr = w.ptr(k, c, i, 0);
            if (d.sf == 1) {
              RowCorrelateAcc(yr, d.Fo, xr, d.F, wr, d.kw, -d.pf0, 1);
            } else {
              for (Index fo = 0; fo < d.Fo; ++fo) {
                Real acc = yr[fo];
                for (Index j = 0; j < d.kw; ++j) {
                  Index fi = fo * d.sf + j - d.pf0;
                  if (fi >= 0 && fi < d.F) acc += wr[j] * xr[fi];
                }
                yr[fo] = acc;
              }
            }
          }
      }
}

template <typename Real>
void ConvBackwardInput(const Tensor<Real> &dy, const Tensor<Real> &w, const ConvDims &d,
                       Tensor<Real> *dx) {
  for (Index n = 0; n < d.N; ++n)
    for (Index c = 0; c < d.C; ++c)
      for (Index ti = 0; ti < d.T; ++ti) {
        Real *dxr = dx->ptr(n, c, ti, 0);
        for (Index k = 0; k < d.K; ++k)
          for (Index i = 0; i < d.kh; ++i) {
            Index num = ti + d.pt0 - i;
            if (num < 0 || num % d.st != 0) continue;
            Index to = num / d.st;
            if (to >= d.To) continue;
            const Real *dyr = dy.ptr(n, k, to, 0);
            const Real *wr = w.ptr(k, c, i, 0);
            if (d.sf == 1) {
              RowCorrelateAcc(dxr, d.F, dyr, d.Fo, wr, d.kw, d.pf0, -1);
            } else {
              for (Index fo = 0; fo < d.Fo; ++fo) {
                const Real g = dyr[fo];
                for (Index j = 0; j < d.kw; ++j) {
                  Index fi = fo * d.sf + j - d.pf0;
                  if (fi >= 0 && fi < d.F) dxr[fi] += wr[j] * g;
                }
              }
            }
          }
      }
}

template <typename Real>
void ConvBackwardWeights(const Tensor<Real> &dy, const Tensor<Real> &x, const ConvDims &d,
                         Tensor<Real> *dw, Tensor<Real> *db) {
  std::vector<double> acc(dw != nullptr ? dw->size() : 0, 0.0);
  std::vector<double> bacc(d.K, 0.0);
  for (Index n = 0; n < d.N; ++n)
    for (Index k = 0; k < d.K; ++k)
      for (Index to = 0; to < d.To; ++to) {
        const Real *dyr = dy.ptr(n, k, to, 0);
        double rs = 0.0;
        for (Index fo = 0; fo < d.Fo; ++fo) rs += dyr[fo];
        bacc[k] += rs;
        if (dw == nullptr) continue;
        for (Index c = 0; c < d.C; ++c)
          for (Index i = 0; i < d.kh; ++i) {
            Index ti = to * d.st + i - d.pt0;
            if (ti < 0 || ti >= d.T) continue;
            const Real *xr = x.ptr(n, c, ti, 0);
            double *ar = &acc[((k * d.C + c) * d.kh + i) * d.kw];
            for (Index j = 0; j < d.kw; ++j) {
              Index off = j - d.pf0;
              if (d.sf == 1) {
                Index lo = std::max<Index>(0, -off);
                Index hi = std::min<Index>(d.Fo, d.F - off);
                if (hi > lo) ar[j] += Dot(dyr + lo, xr + lo + off, hi - lo);
              } else {
                Real s = 0;
                for (Index fo = 0; fo < d.Fo; ++fo) {
                  Index fi = fo * d.sf + off;
                  if (fi >= 0 && fi < d.F) s += dyr[fo] * xr[fi];
                }
                ar[j] += s;
              }
            }
          }
      }
  if (dw != nullptr)
    for (std::size_t q = 0; q < acc.size(); ++q) (*dw)[q] += static_cast<Real>(acc[q]);
  if (db != nullptr)
    for (Index k = 0; k < d.K; ++k) (*db)[k] += static_cast<Real>(bacc[k]);
}

}  // namespace

template <typename Real>
Var Conv2d(Tape<Real> &tape, Var x, Var w, Var b, const Conv2dGeometry &geom) {
  const Tensor<Real> &xv = tape.value(x);
  const Tensor<Real> &wv = tape.value(w);
  const Tensor<Real> &bv = tape.value(b);
  RequireRank(xv.shape(), 4, "conv2d", "input");
  RequireRank(wv.shape(), 4, "conv2d", "weights");
  RequireRank(bv.shape(), 1, "conv2d", "bias");
  if (wv.dim(1) != xv.dim(1))
    throw Error("conv2d: channel dimension mismatch: input has " +
                std::to_string(xv.dim(1)) + " channels, weights expect " +
                std::to_string(wv.dim(1)));
  if (bv.dim(0) != wv.dim(0))
    throw Error("conv2d: bias length " + std::to_string(bv.dim(0)) +
                " does not match output channels " + std::to_string(wv.dim(0)));
  std::size_t to = ConvOutputExtent(xv.dim(2), geom.pad_t0, geom.pad_t1, wv.dim(2), geom.stride_t);
  std::size_t fo = ConvOutputExtent(xv.dim(3), geom.pad_f0, geom.pad_f1, wv.dim(3), geom.stride_f);
  if (to == 0)
    throw Error("conv2d: time dimension " + std::to_string(xv.dim(2)) +
                " too small for kernel height " + std::to_string(wv.dim(2)));
  if (fo == 0)
    throw Error("conv2d: frequency dimension " + std::to_string(xv.dim(3)) +
                " too small for kernel width " + std::to_string(wv.dim(3)));
  ConvDims d{static_cast<Index>(xv.dim(0)), static_cast<Index>(xv.dim(1)),
             static_cast<Index>(xv.dim(2)), static_cast<Index>(xv.dim(3)),
             static_cast<Index>(wv.dim(0)), static_cast<Index>(wv.dim(2)),
             static_cast<Index>(wv.dim(3)), static_cast<Index>(to),
             static_cast<Index>(fo),        static_cast<Index>(geom.stride_t),
             static_cast<Index>(geom.stride_f), static_cast<Index>(geom.pad_t0),
             static_cast<Index>(geom.pad_f0)};
  Tensor<Real> y({xv.dim(0), wv.dim(0), to, fo});
  ConvForward(xv, wv, bv, d, &y);
  return tape.Record(Checked(std::move(y), "conv2d"), {x, w, b}, [x, w, b, d](Tape<Real> &t, Var self) {
    const Tensor<Real> &dy = t.grad(self);
    if (t.requires_grad(x)) ConvBackwardInput(dy, t.value(w), d, &t.grad(x));
    if (t.requires_grad(w) || t.requires_grad(b))
      ConvBackwardWeights(dy, t.value(x), d, t.requires_grad(w) ? &t.grad(w) : nullptr,
                          t.requires_grad(b) ? &t.grad(b) : nullptr);
  });
}

template <typename Real>
Var MaxPoolTime(Tape<Real> &tape, Var x, std::size_t kernel, std::size_t stride) {
  const Tensor<Real> &xv = tape.value(x);
  RequireRank(xv.shape(), 4, "maxpool_time", "input");
  if (kernel == 0 || stride == 0) throw Error("maxpool_time: kernel and stride must be >= 1");
  const std::size_t N = xv.dim(0), C = xv.dim(1), T = xv.dim(2), F = xv.dim(3);
  if (T < kernel)
    throw Error("maxpool_time: time dimension " + std::to_string(T) +
                " is shorter than the pooling window " + std::to_string(kernel));
  const std::size_t To = (T - kernel) / stride + 1;
  Tensor<Real> y({N, C, To, F});
  auto arg = std::make_shared<std::vector<uint8_t>>(y.size(), 0);
  if (kernel > 255) throw Error("maxpool_time: kernel larger than 255 is unsupported");
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t to = 0; to < To; ++to) {
        Real *yr = y.ptr(n, c, to, 0);
        uint8_t *ar = &(*arg)[((n * C + c) * To + to) * F];
        const Real *x0 = xv.ptr(n, c, to * stride, 0);
        std::copy(x0, x0 + F, yr);
        for (std::size_t r = 1; r < kernel; ++r) {
          const Real *xr = xv.ptr(n, c, to * stride + r, 0);
          for (std::size_t f = 0; f < F; ++f)
            if (xr[f] > yr[f]) {
              yr[f] = xr[f];
              ar[f] = static_cast<uint8_t>(r);
            }
        }
      }
  return tape.Record(std::move(y), {x}, [x, arg, stride, N, C, To, F](Tape<Real> &t, Var self) {
    const Tensor<Real> &dy = t.grad(self);
    Tensor<Real> &dx = t.grad(x);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t to = 0; to < To; ++to) {
          const Real *gr = dy.ptr(n, c, to, 0);
          const uint8_t *ar = &(*arg)[((n * C + c) * To + to) * F];
          for (std::size_t f = 0; f < F; ++f) dx.at(n, c, to * stride + ar[f], f) += gr[f];
        }
  });
}

template <typename Real>
Var AvgPoolAllTime(Tape<Real> &tape, Var x) {
  const Tensor<Real> &xv = tape.value(x);
  RequireRank(xv.shape(), 4, "avgpool_all_time", "input");
  const std::size_t N = xv.dim(0), C = xv.dim(1), T = xv.dim(2), F = xv.dim(3);
  Tensor<Real> y({N, C, 1, F});
  std::vector<double> acc(F);
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t t = 0; t < T; ++t) {
        const Real *xr = xv.ptr(n, c, t, 0);
        for (std::size_t f = 0; f < F; ++f) acc[f] += xr[f];
      }
      for (std::size_t f = 0; f < F; ++f) y.at(n, c, 0, f) = static_cast<Real>(acc[f] / T);
    }
  return tape.Record(std::move(y), {x}, [x, N, C, T, F](Tape<Real> &t, Var self) {
    const Tensor<Real> &dy = t.grad(self);
    Tensor<Real> &dx = t.grad(x);
    const Real inv = Real(1) / static_cast<Real>(T);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t tt = 0; tt < T; ++tt) {
          Real *dr = dx.ptr(n, c, tt, 0);
          const Real *gr = dy.ptr(n, c, 0, 0);
          for (std::size_t f = 0; f < F; ++f) dr[f] += gr[f] * inv;
        }
  });
}

template <typename Real>
Var BatchNorm(Tape<Real> &tape, Var x, Var gamma, Var beta, BatchNormState<Real> *state,
              Mode mode) {
  const Tensor<Real> &xv = tape.value(x);
  RequireRank(xv.shape(), 4, "batchnorm", "input");
  const std::size_t N = xv.dim(0), C = xv.dim(1), S = xv.dim(2) * xv.dim(3);
  const Tensor<Real> &g = tape.value(gamma);
  const Tensor<Real> &bt = tape.value(beta);
  if (g.size() != C || bt.size() != C || state->running_mean.size() != C ||
      state->running_var.size() != C)
    throw Error("batchnorm: parameter length does not match channel count " +
                std::to_string(C));
  const double M = static_cast<double>(N * S);
  auto mean = std::make_shared<std::vector<double>>(C);
  auto inv_std = std::make_shared<std::vector<double>>(C);
  if (mode == Mode::kTrain) {
    if (N * S < 2) throw Error("batchnorm: degenerate batch (one element per channel)");
    for (std::size_t c = 0; c < C; ++c) {
      double s = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        const Real *p = xv.data() + (n * C + c) * S;
        for (std::size_t i = 0; i < S; ++i) s += p[i];
      }
      const double mu = s / M;
      double ss = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        const Real *p = xv.data() + (n * C + c) * S;
        for (std::size_t i = 0; i < S; ++i) {
          const double dv = p[i] - mu;
          ss += dv * dv;
        }
      }
      const double var = ss / M;
      (*mean)[c] = mu;
      (*inv_std)[c] = 1.0 / std::sqrt(var + state->epsilon);
      const double m = state->momentum;
      state->running_mean[c] =
          static_cast<Real>((1.0 - m) * state->running_mean[c] + m * mu);
      state->running_var[c] =
          static_cast<Real>((1.0 - m) * state->running_var[c] + m * ss / (M - 1.0));
    }
  } else {
    for (std::size_t c = 0; c < C; ++c) {
      (*mean)[c] = state->running_mean[c];
      (*inv_std)[c] = 1.0 / std::sqrt(static_cast<double>(state->running_var[c]) + state->epsilon);
    }
  }
  Tensor<Real> y(xv.shape());
  for (std::size_t n = 0; n < N; ++n)
    for (std::size_t c = 0; c < C; ++c) {
      const Real scale = static_cast<Real>(g[c] * (*inv_std)[c]);
      const Real shift = static_cast<Real>(bt[c] - g[c] * (*inv_std)[c] * (*mean)[c]);
      const Real *p = xv.data() + (n * C + c) * S;
      Real *q = y.data() + (n * C + c) * S;
      for (std::size_t i = 0; i < S; ++i) q[i] = p[i] * scale + shift;
    }
  const bool train = mode == Mode::kTrain;
  return tape.Record(Checked(std::move(y), "batchnorm"), {x, gamma, beta},
                     [x, gamma, beta, mean, inv_std, N, C, S, M, train](Tape<Real> &t, Var self) {
    const Tensor<Real> &dy = t.grad(self);
    const Tensor<Real> &xv = t.value(x);
    const Tensor<Real> &g = t.value(gamma);
    for (std::size_t c = 0; c < C; ++c) {
      const double mu = (*mean)[c], is = (*inv_std)[c];
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (std::size_t n = 0; n < N; ++n) {
        const Real *p = xv.data() + (n * C + c) * S;
        const Real *gr = dy.data() + (n * C + c) * S;
        for (std::size_t i = 0; i < S; ++i) {
          sum_dy += gr[i];
          sum_dy_xhat += gr[i] * ((p[i] - mu) * is);
        }
      }
      if (t.requires_grad(gamma)) t.grad(gamma)[c] += static_cast<Real>(sum_dy_xhat);
      if (t.requires_grad(beta)) t.grad(beta)[c] += static_cast<Real>(sum_dy);
      if (!t.requires_grad(x)) continue;
      Tensor<Real> &dx = t.grad(x);
      const double gs = g[c] * is;
      if (train) {
        const double a = sum_dy / M, b = sum_dy_xhat / M;
        for (std::size_t n = 0; n < N; ++n) {
          const Real *p = xv.data() + (n * C + c) * S;
          const Real *gr = dy.data() + (n * C + c) * S;
          Real *dr = dx.data() + (n * C + c) * S;
          for (std::size_t i = 0; i < S; ++i) {
            const double xhat = (p[i] - mu) * is;
            dr[i] += static_cast<Real>(gs * (gr[i] - a - xhat * b));
          }
        }
      } else {
        for (std::size_t n = 0; n < N; ++n) {
          const Real *gr = dy.data() + (n * C + c) * S;
          Real *dr = dx.data() + (n * C + c) * S;
          for (std::size_t i = 0; i < S; ++i) dr[i] += static_cast<Real>(gs * gr[i]);
        }
      }
    }
  });
}

template <typename Real>
Var Relu(Tape<Real> &tape, Var x) {
  const Tensor<Real> &xv = tape.value(x);
  Tensor<Real> y(xv.shape());
  const Real *p = xv.data();
  Real *q = y.data();
  const std::size_t n = xv.size();
  for (std::size_t i = 0; i < n; ++i) q[i] = p[i] > Real(0) ? p[i] : Real(0);
  return tape.Record(std::move(y), {x}, [x](Tape<Real> &t, Var self) {
    const Tensor<Real> &dy = t.grad(self);
    const Tensor<Real> &xv = t.value(x);
    Tensor<Real> &dx = t.grad(x);
    const std::size_t n = xv.size();
    for (std::size_t i = 0; i < n; ++i)
      if (xv[i] > Real(0)) dx[i] += dy[i];
  });
}

template <typename Real>
Var Linear(Tape<Real> &tape, Var x, Var w, Var b) {
  const Tensor<Real> &xv = tape.value(x);
  const Tensor<Real> &wv = tape.value(w);
  const Tensor<Real> &bv = tape.value(b);
  RequireRank(xv.shape(), 2, "linear", "input");
  RequireRank(wv.shape(), 2, "linear", "weights");
  if (wv.dim(0) != xv.dim(1))
    throw Error("linear: input width " + std::to_string(xv.dim(1)) +
                " does not match weight rows " + std::to_string(wv.dim(0)));
  if (bv.size() != wv.dim(1))
    throw Error("linear: bias length " + std::to_string(bv.size()) +
                " does not match output width " + std::to_string(wv.dim(1)));
  const std::size_t N = xv.dim(0), D = xv.dim(1), P = wv.dim(1);
  Tensor<Real> y({N, P});
  for (std::size_t n = 0; n < N; ++n) std::copy(bv.data(), bv.data() + P, y.data() + n * P);
  // Row d of W is streamed once for the whole batch.
  for (std::size_t d = 0; d < D; ++d) {
    const Real *__restrict wr = wv.data() + d * P;
    for (std::size_t n = 0; n < N; ++n) {
      const Real xv_nd = xv[n * D + d];
      if (xv_nd == Real(0)) continue;
      Real *__restrict yr = y.data() + n * P;
#pragma omp simd
      for (std::size_t p = 0; p < P; ++p) yr[p] += xv_nd * wr[p];
    }
  }
  return tape.Record(Checked(std::move(y), "linear"), {x, w, b}, [x, w, b, N, D, P](Tape<Real> &t, Var self) {
    const Tensor<Real> &dy = t.grad(self);
    const Tensor<Real> &xv = t.value(x);
    const Tensor<Real> &wv = t.value(w);
    if (t.requires_grad(x)) {
      Tensor<Real> &dx = t.grad(x);
      for (std::size_t d = 0; d < D; ++d)
        for (std::size_t n = 0; n < N; ++n)
          dx[n * D + d] += Dot(dy.data() + n * P, wv.data() + d * P, static_cast<Index>(P));
    }
    if (t.requires_grad(w)) {
      Tensor<Real> &dw = t.grad(w);
      for (std::size_t d = 0; d < D; ++d)
        for (std::size_t n = 0; n < N; ++n) {
          const Real xnd = xv[n * D + d];
          if (xnd == Real(0)) continue;
          Real *__restrict dwr = dw.data() + d * P;
          const Real *__restrict gr = dy.data() + n * P;
#pragma omp simd
          for (std::size_t p = 0; p < P; ++p) dwr[p] += xnd * gr[p];
        }
    }
    if (t.requires_grad(b)) {
      Tensor<Real> &db = t.grad(b);
      for (std::size_t p = 0; p < P; ++p) {
        double s = 0.0;
        for (std::size_t n = 0; n < N; ++n) s += dy[n * P + p];
        db[p] += static_cast<Real>(s);
      }
    }
  });
}

template <typename Real>
Var Reshape(Tape<Real> &tape, Var x, Shape shape) {
  Tensor<Real> y = tape.value(x).Reshaped(std::move(shape));
  return tape.Record(std::move(y), {x}, [x](Tape<Real> &t, Var self) {
    const Tensor<Real> &dy = t.grad(self);
    Tensor<Real> &dx = t.grad(x);
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] += dy[i];
  });
}

namespace {

// Row-wise softmax(x / T) into `out` (double), returns log-sum-exp of x / T.
template <typename Real>
double SoftmaxRow(const Real *x, std::size_t D, double T, double *out) {
  double m = x[0];
  for (std::size_t i = 1; i < D; ++i) m = std::max(m, static_cast<double>(x[i]));
  double s = 0.0;
  for (std::size_t i = 0; i < D; ++i) {
    out[i] = std::exp((x[i] - m) / T);
    s += out[i];
  }
  for (std::size_t i = 0; i < D; ++i) out[i] /= s;
  return m / T + std::log(s);
}

}  // namespace

template <typename Real>
Var SoftmaxT(Tape<Real> &tape, Var logits, double temperature) {
  if (!(temperature > 0)) throw Error("softmax: temperature must be positive");
  const Tensor<Real> &xv = tape.value(logits);
  RequireRank(xv.shape(), 2, "softmax", "logits");
  const std::size_t N = xv.dim(0), D = xv.dim(1);
  Tensor<Real> y(xv.shape());
  std::vector<double> row(D);
  for (std::size_t n = 0; n < N; ++n) {
    SoftmaxRow(xv.data() + n * D, D, temperature, row.data());
    for (std::size_t i = 0; i < D; ++i) y[n * D + i] = static_cast<Real>(row[i]);
  }
  return tape.Record(std::move(y), {logits}, [logits, N, D, temperature](Tape<Real> &t, Var self) {
    const Tensor<Real> &dy = t.grad(self);
    const Tensor<Real> &yv = t.value(self);
    Tensor<Real> &dx = t.grad(logits);
    for (std::size_t n = 0; n < N; ++n) {
      double s = 0.0;
      for (std::size_t i = 0; i < D; ++i) s += static_cast<double>(dy[n * D + i]) * yv[n * D + i];
      for (std::size_t i = 0; i < D; ++i)
        dx[n * D + i] += static_cast<Real>(yv[n * D + i] * (dy[n * D + i] - s) / temperature);
    }
  });
}

template <typename Real>
Var DistillLoss(Tape<Real> &tape, Var a, Var b, double temperature) {
  if (!(temperature > 0)) throw Error("distill_loss: temperature must be positive");
  const Tensor<Real> &av = tape.value(a);
  const Tensor<Real> &bv = tape.value(b);
  RequireRank(av.shape(), 2, "distill_loss", "target logits");
  RequireSameShape(av.shape(), bv.shape(), "distill_loss");
  const std::size_t N = av.dim(0), D = av.dim(1);
  auto p = std::make_shared<std::vector<double>>(N * D);
  auto q = std::make_shared<std::vector<double>>(N * D);
  Tensor<Real> y({N});
  for (std::size_t n = 0; n < N; ++n) {
    double *pr = p->data() + n * D, *qr = q->data() + n * D;
    SoftmaxRow(av.data() + n * D, D, temperature, pr);
    const double lse = SoftmaxRow(bv.data() + n * D, D, temperature, qr);
    double loss = 0.0;
    for (std::size_t i = 0; i < D; ++i) loss -= pr[i] * (bv[n * D + i] / temperature - lse);
    y[n] = static_cast<Real>(loss);
  }
  // The target side is a constant by definition of the loss.
  return tape.Record(Checked(std::move(y), "distill_loss"), {b}, [b, p, q, N, D, temperature](Tape<Real> &t, Var self) {
    const Tensor<Real> &dy = t.grad(self);
    Tensor<Real> &db = t.grad(b);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t i = 0; i < D; ++i)
        db[n * D + i] +=
            static_cast<Real>(dy[n] * ((*q)[n * D + i] - (*p)[n * D + i]) / temperature);
  });
}

template <typename Real>
Var L1Diff(Tape<Real> &tape, Var a, Var b) {
  const Tensor<Real> &av = tape.value(a);
  const Tensor<Real> &bv = tape.value(b);
  RequireRank(av.shape(), 2, "l1_diff", "a");
  RequireSameShape(av.shape(), bv.shape(), "l1_diff");
  const std::size_t N = av.dim(0), D = av.dim(1);
  Tensor<Real> y({N});
  for (std::size_t n = 0; n < N; ++n) {
    double s = 0.0;
    for (std::size_t i = 0; i < D; ++i) s += std::abs(static_cast<double>(av[n * D + i]) - bv[n * D + i]);
    y[n] = static_cast<Real>(s);
  }
  return tape.Record(std::move(y), {a, b}, [a, b, N, D](Tape<Real> &t, Var self) {
    const Tensor<Real> &dy = t.grad(self);
    const Tensor<Real> &av = t.value(a);
    const Tensor<Real> &bv = t.value(b);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t i = 0; i < D; ++i) {
        const Real diff = av[n * D + i] - bv[n * D + i];
        const Real s = diff > 0 ? Real(1) : (diff < 0 ? Real(-1) : Real(0));
        if (t.requires_grad(a)) t.grad(a)[n * D + i] += s * dy[n];
        if (t.requires_grad(b)) t.grad(b)[n * D + i] -= s * dy[n];
      }
  });
}

template <typename Real>
Var L2SqDiff(Tape<Real> &tape, Var a, Var b) {
  const Tensor<Real> &av = tape.value(a);
  const Tensor<Real> &bv = tape.value(b);
  RequireRank(av.shape(), 2, "l2_sq_diff", "a");
  RequireSameShape(av.shape(), bv.shape(), "l2_sq_diff");
  const std::size_t N = av.dim(0), D = av.dim(1);
  Tensor<Real> y({N});
  for (std::size_t n = 0; n < N; ++n) {
    double s = 0.0;
    for (std::size_t i = 0; i < D; ++i) {
      const double diff = static_cast<double>(av[n * D + i]) - bv[n * D + i];
      s += diff * diff;
    }
    y[n] = static_cast<Real>(s);
  }
  return tape.Record(std::move(y), {a, b}, [a, b, N, D](Tape<Real> &t, Var self) {
    const Tensor<Real> &dy = t.grad(self);
    const Tensor<Real> &av = t.value(a);
    const Tensor<Real> &bv = t.value(b);
    for (std::size_t n = 0; n < N; ++n)
      for (std::size_t i = 0; i < D; ++i) {
        const Real g = Real(2) * (av[n * D + i] - bv[n * D + i]) * dy[n];
        if (t.requires_grad(a)) t.grad(a)[n * D + i] += g;
        if (t.requires_grad(b)) t.grad(b)[n * D + i] -= g;
      }
  });
}

template <typename Real>
Var UnitNormalize(Tape<Real> &tape, Var x) {
  const Tensor<Real> &xv = tape.value(x);
  RequireRank(xv.shape(), 2, "unit_normalize", "input");
  const std::size_t N = xv.dim(0), D = xv.dim(1);
  auto norms = std::make_shared<std::vector<double>>(N);
  Tensor<Real> y(xv.shape());
  for (std::size_t n = 0; n < N; ++n) {
    double s = 0.0;
    for (std::size_t i = 0; i < D; ++i) s += static_cast<double>(xv[n * D + i]) * xv[n * D + i];
    const double norm = std::sqrt(s);
    if (!(norm > 0)) throw Error("zero-norm feature");
    (*norms)[n] = norm;
    for (std::size_t i = 0; i < D; ++i) y[n * D + i] = static_cast<Real>(xv[n * D + i] / norm);
  }
  return tape.Record(Checked(std::move(y), "unit_normalize"), {x}, [x, norms, N, D](Tape<Real> &t, Var self) {
    const Tensor<Real> &dy = t.grad(self);
    const Tensor<Real> &yv = t.value(self);
    Tensor<Real> &dx = t.grad(x);
    for (std::size_t n = 0; n < N; ++n) {
      double s = 0.0;
      for (std::size_t i = 0; i < D; ++i) s += static_cast<double>(yv[n * D + i]) * dy[n * D + i];
      for (std::size_t i = 0; i < D; ++i)
        dx[n * D + i] += static_cast<Real>((dy[n * D + i] - yv[n * D + i] * s) / (*norms)[n]);
    }
  });
}

template <typename Real>
Var LinearCombination(Tape<Real> &tape, const std::vector<Var> &xs,
                      const std::vector<double> &coeffs) {
  if (xs.empty() || xs.size() != coeffs.size())
    throw Error("linear_combination: need one coefficient per input");
  const Shape &shape = tape.value(xs[0]).shape();
  Tensor<Real> y(shape);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    const Tensor<Real> &xv = tape.value(xs[k]);
    RequireSameShape(shape, xv.shape(), "linear_combination");
    for (std::size_t i = 0; i < y.size(); ++i)
      y[i] = static_cast<Real>(y[i] + coeffs[k] * xv[i]);
  }
  return tape.Record(std::move(y), std::span<const Var>(xs), [xs, coeffs](Tape<Real> &t, Var self) {
    const Tensor<Real> &dy = t.grad(self);
    for (std::size_t k = 0; k < xs.size(); ++k) {
      if (!t.requires_grad(xs[k])) continue;
      Tensor<Real> &dx = t.grad(xs[k]);
      for (std::size_t i = 0; i < dx.size(); ++i)
        dx[i] += static_cast<Real>(coeffs[k] * dy[i]);
    }
  });
}

template <typename Real>
Var Mean(Tape<Real> &tape, Var x) {
  const Tensor<Real> &xv = tape.value(x);
  double s = 0.0;
  for (std::size_t i = 0; i < xv.size(); ++i) s += xv[i];
  const std::size_t n = xv.size();
  Tensor<Real> y({1}, static_cast<Real>(s / n));
  return tape.Record(std::move(y), {x}, [x, n](Tape<Real> &t, Var self) {
    const Real g = t.grad(self)[0] / static_cast<Real>(n);
    Tensor<Real> &dx = t.grad(x);
    for (std::size_t i = 0; i < n; ++i) dx[i] += g;
  });
}

#define S2F_INSTANTIATE_OPS(Real)                                                       \
  template Var Conv2d(Tape<Real> &, Var, Var, Var, const Conv2dGeometry &);            \
  template Var MaxPoolTime(Tape<Real> &, Var, std::size_t, std::size_t);               \
  template Var AvgPoolAllTime(Tape<Real> &, Var);                                      \
  template Var BatchNorm(Tape<Real> &, Var, Var, Var, BatchNormState<Real> *, Mode);   \
  template Var Relu(Tape<Real> &, Var);                                                \
  template Var Linear(Tape<Real> &, Var, Var, Var);                                    \
  template Var Reshape(Tape<Real> &, Var, Shape);                                      \
  template Var SoftmaxT(Tape<Real> &, Var, double);                                    \
  template Var DistillLoss(Tape<Real> &, Var, Var, double);                            \
  template Var L1Diff(Tape<Real> &, Var, Var);                                         \
  template Var L2SqDiff(Tape<Real> &, Var, Var);                                       \
  template Var UnitNormalize(Tape<Real> &, Var);                                       \
  template Var LinearCombination(Tape<Real> &, const std::vector<Var> &,               \
                                 const std::vector<double> &);                         \
  template Var Mean(Tape<Real> &, Var);

S2F_INSTANTIATE_OPS(float)
S2F_INSTANTIATE_OPS(double)

#undef S2F_INSTANTIATE_OPS

}  // namespace s2f
