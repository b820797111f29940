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

#include "train/optim.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace morphnet::train {

template <typename T>
void Adam<T>::step(std::span<Parameter<T>* const> params) {
  if (m_.empty()) {
    for (Parameter<T>* p : params) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }
  if (m_.size() != params.size()) {
    fail(ErrorCode::kInvalidArgument, "adam: state tracks ", m_.size(),
         " parameters, step got ", params.size());
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->value.shape() != m_[i].shape()) {
      fail(ErrorCode::kShape, "adam: parameter ", params[i]->name, " changed shape");
    }
    for (T g : params[i]->grad.data()) {
      if (!std::isfinite(g)) {
        fail(ErrorCode::kNumeric, "adam: non-finite gradient in ", params[i]->name);
      }
    }
  }
  ++t_;
  const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
  const T c1 = static_cast<T>(1.0 - std::pow(cfg_.beta1, static_cast<double>(t_)));
  const T c2 = static_cast<T>(1.0 - std::pow(cfg_.beta2, static_cast<double>(t_)));
  const T lr = static_cast<T>(lr_), eps = static_cast<T>(cfg_.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i]->value.data();
    auto g = params[i]->grad.data();
    auto m = m_[i].data();
    auto v = v_[i].data();
    for (std::size_t k = 0; k < theta.size(); ++k) {
      m[k] = b1 * m[k] + (T(1) - b1) * g[k];
      v[k] = b2 * v[k] + (T(1) - b2) * g[k] * g[k];
      const T m_hat = m[k] / c1;
      const T v_hat = v[k] / c2;
      theta[k] -= lr * m_hat / (std::sqrt(v_hat) + eps);
    }
  }
}

template <typename T>
void Adam<T>::restore(std::uint64_t steps, double lr, std::vector<Tensor<T>> m,
                      std::vector<Tensor<T>> v) {
  if (m.size() != v.size()) fail(ErrorCode::kIntegrity, "adam: moment lists differ in length");
  t_ = steps;
  lr_ = lr;
  m_ = std::move(m);
  v_ = std::move(v);
}

template class Adam<float>;
template class Adam<double>;

double PlateauSchedule::lr() const {
  return std::max(min_lr, initial_lr * std::pow(factor, static_cast<double>(reductions)));
}

bool PlateauSchedule::step(double val_loss) {
  if (val_loss < best - min_delta) {
    best = val_loss;
    wait = 0;
    return false;
  }
  ++wait;
  if (wait > patience) {
    wait = 0;
    if (lr() > min_lr) {
      ++reductions;
      return true;
    }
  }
  return false;
}

bool EarlyStop::step(double val_loss) {
  if (val_loss < best - min_delta) {
    best = val_loss;
    wait = 0;
    return false;
  }
  ++wait;
  return wait >= patience;
}

}  // namespace morphnet::train
