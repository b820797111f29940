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

#include "autodiff/tape.hpp"

#include <sstream>

namespace morphnet::ad {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

template <typename T>
Var Tape<T>::constant(Tensor<T> value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::input(Tensor<T> value) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::param(Parameter<T>& p) {
  Node n;
  n.value = p.value;
  n.requires_grad = true;
  n.param = &p;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <typename T>
Var Tape<T>::record(Tensor<T> value, std::vector<Var> inputs,
                    BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  n.inputs.reserve(inputs.size());
  for (Var v : inputs) {
    if (v.id >= nodes_.size()) {
      fail(ErrorCode::kInvalidArgument, "tape input refers to unknown node ",
           v.id);
    }
    n.inputs.push_back(v.id);
    n.requires_grad = n.requires_grad || nodes_[v.id].requires_grad;
  }
  if (n.requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

template <typename T>
const Tensor<T>& Tape<T>::grad(Var v) {
  return grad_ref(v.id);
}

template <typename T>
Tensor<T>& Tape<T>::grad_ref(std::size_t id) {
  Node& n = nodes_.at(id);
  if (n.grad.empty()) n.grad = Tensor<T>(n.value.shape());
  return n.grad;
}

template <typename T>
void Tape<T>::backward(Var loss) {
  if (loss.id >= nodes_.size()) {
    fail(ErrorCode::kInvalidArgument, "loss refers to unknown node");
  }
  if (nodes_[loss.id].value.size() != 1) {
    fail(ErrorCode::kInvalidArgument, "backward requires a scalar loss, got ",
         shape_string(nodes_[loss.id].value.shape()));
  }
  for (Node& n : nodes_) n.grad = Tensor<T>();
  grad_ref(loss.id).fill(T(1));

  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.requires_grad) continue;
    if (n.backward) n.backward(*this, i);
  }

  for (Node& n : nodes_) {
    if (n.param == nullptr || n.grad.empty()) continue;
    auto dst = n.param->grad.data();
    auto src = n.grad.data();
    for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
  }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace morphnet::ad
