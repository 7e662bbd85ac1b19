// s2f/tape.h

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

#ifndef S2F_TAPE_H_
#define S2F_TAPE_H_

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "s2f/tensor.h"

namespace s2f {

/// Handle to a node on a Tape.
struct Var {
  static constexpr std::size_t kInvalid = std::numeric_limits<std::size_t>::max();
  std::size_t id = kInvalid;
  bool valid() const { return id != kInvalid; }
};

/// Records differentiable operations in execution order. Backward() walks
/// the record once, newest first, handing each node's accumulated output
/// gradient to the closure that produced it.
///
/// Watch() nodes borrow the tensor they wrap; the tensor must outlive the
/// tape and must not be modified while the tape is alive.
template <typename Real>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape &, Var self)>;

  Tape() = default;
  Tape(const Tape &) = delete;
  Tape &operator=(const Tape &) = delete;

  /// A value that never receives a gradient.
  Var Constant(Tensor<Real> value) { return Push(std::move(value), nullptr, false, {}); }

  /// An owned leaf that accumulates a gradient.
  Var Input(Tensor<Real> value) { return Push(std::move(value), nullptr, true, {}); }

  /// A borrowed leaf (typically a parameter) that accumulates a gradient.
  Var Watch(const Tensor<Real> &value) { return Push(Tensor<Real>(), &value, true, {}); }

  /// A borrowed value that never receives a gradient.
  Var Borrow(const Tensor<Real> &value) { return Push(Tensor<Real>(), &value, false, {}); }

  /// Adds the output of an operation. The node requires a gradient if any
  /// input does; otherwise `backward` is dropped.
  Var Record(Tensor<Real> value, std::initializer_list<Var> inputs, BackwardFn backward) {
    return Record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                  std::move(backward));
  }

  Var Record(Tensor<Real> value, std::span<const Var> inputs, BackwardFn backward) {
    bool needs = false;
    for (Var v : inputs) needs = needs || nodes_.at(v.id).requires_grad;
    return Push(std::move(value), nullptr, needs, needs ? std::move(backward) : nullptr);
  }

  const Tensor<Real> &value(Var v) const {
    const Node &n = nodes_.at(v.id);
    return n.borrowed != nullptr ? *n.borrowed : n.owned;
  }

  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  /// Mutable gradient buffer, allocated as zeros on first use.
  Tensor<Real> &grad(Var v) {
    Node &n = nodes_.at(v.id);
    if (n.grad.empty()) n.grad = Tensor<Real>(value(v).shape());
    return n.grad;
  }

  /// Keeps the gradient of an intermediate node after Backward(); by default
  /// only leaves keep theirs.
  void RetainGrad(Var v) { nodes_.at(v.id).retain_grad = true; }

  /// Gradient if one was accumulated, else nullptr.
  const Tensor<Real> *FindGrad(Var v) const {
    const Node &n = nodes_.at(v.id);
    return n.grad.empty() ? nullptr : &n.grad;
  }

  /// Seeds d(loss)/d(loss) = 1 and runs every recorded backward closure in
  /// reverse order. `loss` must hold exactly one element. Backward() may
  /// be called once per tape.
  void Backward(Var loss) {
    if (value(loss).size() != 1)
      throw Error("Backward() needs a scalar loss, got shape " +
                  ShapeString(value(loss).shape()));
    if (backward_done_) throw Error("Backward() was already called on this tape");
    backward_done_ = true;
    grad(loss)[0] = Real(1);
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      Node &n = nodes_[i];
      if (!n.backward || n.grad.empty()) continue;
      n.backward(*this, Var{i});
      if (!n.retain_grad) n.grad = Tensor<Real>();
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor<Real> owned;
    const Tensor<Real> *borrowed = nullptr;
    Tensor<Real> grad;
    bool requires_grad = false;
    bool retain_grad = false;
    BackwardFn backward;
  };

  Var Push(Tensor<Real> owned, const Tensor<Real> *borrowed, bool requires_grad,
           BackwardFn backward) {
    Node n;
    n.owned = std::move(owned);
    n.borrowed = borrowed;
    n.requires_grad = requires_grad;
    n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace s2f

#endif  // S2F_TAPE_H_
