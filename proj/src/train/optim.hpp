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
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "autodiff/tensor.hpp"

namespace morphnet::train {

using ad::Parameter;
using ad::Tensor;

struct AdamConfig {
  double lr = 1.5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam. Moments are allocated lazily on the first step and
/// follow the order of the parameter list passed to step().
template <typename T>
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg), lr_(cfg.lr) {}

  /// Applies one update from the accumulated gradients. A non-finite
  /// gradient throws kNumeric before any parameter is touched.
  void step(std::span<Parameter<T>* const> params);

  double lr() const noexcept { return lr_; }
  void set_lr(double lr) { lr_ = lr; }
  std::uint64_t steps() const noexcept { return t_; }
  const AdamConfig& config() const noexcept { return cfg_; }

  std::vector<Tensor<T>>& first_moments() { return m_; }
  std::vector<Tensor<T>>& second_moments() { return v_; }
  /// Replaces the optimizer state (checkpoint restore).
  void restore(std::uint64_t steps, double lr, std::vector<Tensor<T>> m,
               std::vector<Tensor<T>> v);

 private:
  AdamConfig cfg_;
  double lr_;
  std::uint64_t t_ = 0;
  std::vector<Tensor<T>> m_, v_;
};

extern template class Adam<float>;
extern template class Adam<double>;

/// Multiplies the learning rate by `factor` once the monitored loss has not
/// improved by more than `min_delta` for more than `patience` epochs.
struct PlateauSchedule {
  double initial_lr = 1.5e-4;
  double factor = 0.2;
  std::size_t patience = 4;
  double min_lr = 1e-7;
  double min_delta = 1e-5;

  double best = std::numeric_limits<double>::infinity();
  std::size_t wait = 0;
  std::size_t reductions = 0;

  /// initial_lr * factor^reductions, floored at min_lr.
  double lr() const;
  /// Returns true when this epoch reduced the learning rate.
  bool step(double val_loss);
};

/// Signals a stop after `patience` consecutive epochs without improvement.
struct EarlyStop {
  std::size_t patience = 9;
  double min_delta = 1e-5;

  double best = std::numeric_limits<double>::infinity();
  std::size_t wait = 0;

  /// Returns true when training should stop.
  bool step(double val_loss);
};

}  // namespace morphnet::train
