// Copyright 2026 The MorphNet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "autodiff/tensor.hpp"

namespace morphnet::ad {

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = 0;
};

/// Records primitive operations in execution order so that a reverse sweep
/// visits every node once, in reverse topological order.
///
/// Leaves are either constants, differentiable inputs, or Parameters. After
/// backward() the gradient of each parameter leaf is added into
/// Parameter::grad, so a parameter used twice receives both contributions.
template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Var constant(Tensor<T> value);
  Var input(Tensor<T> value);
  Var param(Parameter<T>& p);

  /// Appends a computed node. `backward` may be empty for nodes that do not
  /// require gradients.
  Var record(Tensor<T> value, std::vector<Var> inputs, BackwardFn backward);

  const Tensor<T>& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  /// Gradient of a node after backward(); zeros if the node was unreachable.
  const Tensor<T>& grad(Var v);

  /// Mutable gradient accumulator for a node, allocated on first use.
  Tensor<T>& grad_ref(std::size_t id);
  const Tensor<T>& upstream(std::size_t id) const { return nodes_[id].grad; }
  const Tensor<T>& value_at(std::size_t id) const { return nodes_[id].value; }
  bool requires_grad_at(std::size_t id) const {
    return nodes_[id].requires_grad;
  }
  std::size_t input_id(std::size_t id, std::size_t k) const {
    return nodes_[id].inputs[k];
  }

  /// Seeds d(loss)/d(loss) = 1 and sweeps the tape in reverse.
  /// Throws kInvalidArgument if `loss` is not a single element.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    Parameter<T>* param = nullptr;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
  };

  std::vector<Node> nodes_;
};

extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace morphnet::ad
