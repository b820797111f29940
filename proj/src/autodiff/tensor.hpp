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

#include <algorithm>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "common/error.hpp"

namespace morphnet::ad {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const Shape& shape);

/// Dense row-major array. Activations use N x H x W x C; dense layers use
/// N x features. Extents are always positive.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  explicit Tensor(Shape shape, T fill = T(0)) : shape_(std::move(shape)) {
    check_extents();
    data_.assign(shape_size(shape_), fill);
  }

  Tensor(Shape shape, std::vector<T> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    check_extents();
    if (data_.size() != shape_size(shape_)) {
      fail(ErrorCode::kShape, "tensor data length ", data_.size(),
           " does not match shape ", shape_string(shape_));
    }
  }

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<T> data() noexcept { return data_; }
  std::span<const T> data() const noexcept { return data_; }
  T* raw() noexcept { return data_.data(); }
  const T* raw() const noexcept { return data_.data(); }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  Tensor reshaped(Shape shape) const {
    return Tensor(std::move(shape), data_);
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> out(data_.begin(), data_.end());
    return Tensor<U>(shape_, std::move(out));
  }

  friend bool operator==(const Tensor& a, const Tensor& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  void check_extents() const {
    if (shape_.empty()) fail(ErrorCode::kShape, "tensor rank must be >= 1");
    for (std::size_t e : shape_) {
      if (e == 0) {
        fail(ErrorCode::kShape, "tensor extents must be positive, got ",
             shape_string(shape_));
      }
    }
  }

  Shape shape_;
  std::vector<T> data_;
};

/// A trainable tensor and its accumulated gradient.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Parameter() = default;
  Parameter(std::string n, Tensor<T> v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}

  void zero_grad() { grad.fill(T(0)); }
};

}  // namespace morphnet::ad
