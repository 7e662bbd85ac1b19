// s2f/tensor.h

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

#ifndef S2F_TENSOR_H_
#define S2F_TENSOR_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "s2f/base.h"

namespace s2f {

using Shape = std::vector<std::size_t>;

std::string ShapeString(const Shape &shape);

inline std::size_t NumElements(const Shape &shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

/// Dense row-major tensor. Shapes are fixed at construction; element
/// values may be written through data() by the code that owns the tensor.
template <typename Real>
class Tensor {
 public:
  using value_type = Real;

  Tensor() = default;

  explicit Tensor(Shape shape, Real fill = Real(0))
      : shape_(std::move(shape)), data_(NumElements(shape_), fill) {
    CheckShape();
  }

  Tensor(Shape shape, std::vector<Real> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    CheckShape();
    if (data_.size() != NumElements(shape_))
      throw Error("tensor data length " + std::to_string(data_.size()) +
                  " does not match shape " + ShapeString(shape_));
  }

  const Shape &shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  Real *data() { return data_.data(); }
  const Real *data() const { return data_.data(); }
  std::span<Real> values() { return data_; }
  std::span<const Real> values() const { return data_; }

  Real &operator[](std::size_t i) { return data_[i]; }
  Real operator[](std::size_t i) const { return data_[i]; }

  /// Element of a rank-4 tensor [n, c, t, f].
  Real &at(std::size_t n, std::size_t c, std::size_t t, std::size_t f) {
    return data_[((n * shape_[1] + c) * shape_[2] + t) * shape_[3] + f];
  }
  Real at(std::size_t n, std::size_t c, std::size_t t, std::size_t f) const {
    return data_[((n * shape_[1] + c) * shape_[2] + t) * shape_[3] + f];
  }

  Real *ptr(std::size_t n, std::size_t c, std::size_t t, std::size_t f) {
    return data_.data() + ((n * shape_[1] + c) * shape_[2] + t) * shape_[3] + f;
  }
  const Real *ptr(std::size_t n, std::size_t c, std::size_t t, std::size_t f) const {
    return data_.data() + ((n * shape_[1] + c) * shape_[2] + t) * shape_[3] + f;
  }

  void Fill(Real v) { std::fill(data_.begin(), data_.end(), v); }

  /// Same data, new shape with the same element count.
  Tensor Reshaped(Shape shape) const {
    Tensor out;
    out.shape_ = std::move(shape);
    if (NumElements(out.shape_) != data_.size())
      throw Error("cannot reshape " + ShapeString(shape_) + " to " +
                  ShapeString(out.shape_));
    out.data_ = data_;
    return out;
  }

  template <typename Other>
  Tensor<Other> Cast() const {
    std::vector<Other> v(data_.begin(), data_.end());
    return Tensor<Other>(shape_, std::move(v));
  }

  bool AllFinite() const {
    return std::all_of(data_.begin(), data_.end(),
                       [](Real v) { return std::isfinite(v); });
  }

  friend bool operator==(const Tensor &a, const Tensor &b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  void CheckShape() const {
    for (std::size_t d : shape_)
      if (d == 0) throw Error("tensor shape " + ShapeString(shape_) + " has a zero dimension");
  }

  Shape shape_;
  std::vector<Real> data_;
};

/// Largest absolute elementwise difference; shapes must match.
template <typename A, typename B>
double MaxAbsDiff(const Tensor<A> &a, const Tensor<B> &b) {
  if (a.shape() != b.shape())
    throw Error("shape mismatch " + ShapeString(a.shape()) + " vs " +
                ShapeString(b.shape()));
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i])));
  return m;
}

/// Fills with i.i.d. N(0, stddev^2) draws.
template <typename Real>
void FillGaussian(Tensor<Real> *t, CounterRng *rng, double stddev = 1.0) {
  for (auto &v : t->values()) v = static_cast<Real>(stddev * rng->Gaussian());
}

}  // namespace s2f

#endif  // S2F_TENSOR_H_
