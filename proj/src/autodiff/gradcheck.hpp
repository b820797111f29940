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

#include <cstdint>
#include <functional>
#include <span>
#include <string>

#include "autodiff/tape.hpp"

namespace morphnet::ad {

struct GradCheckOptions {
  double eps = 1e-6;
  /// Denominator floor: rel = |a - n| / max(|a|, |n|, rel_floor).
  double rel_floor = 1e-2;
  /// Central differences at eps and eps/2 disagreeing by more than this
  /// (scaled by max(1, |n|)) flag a kink inside the stencil.
  double stencil_tolerance = 1e-7;
  /// One-sided slopes disagreeing by more than this flag a kink at x.
  double slope_tolerance = 1e-3;
  /// 0 checks every element; otherwise a seeded sample of this many per
  /// parameter tensor.
  std::size_t max_elements_per_tensor = 0;
  std::uint64_t sample_seed = 0;

  static GradCheckOptions for_double() { return {}; }
  static GradCheckOptions for_float() {
    GradCheckOptions o;
    o.eps = 1e-3;
    o.rel_floor = 1.0;
    o.stencil_tolerance = 1e-2;
    o.slope_tolerance = 0.5;
    return o;
  }
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  /// A sampled point sat on a kink; the caller should resample inputs.
  bool non_differentiable = false;
  std::string worst;  // "param[index]: analytic vs numeric"
};

/// Compares tape gradients of `build`'s scalar output with respect to each
/// parameter against central differences, element by element. `build` must
/// be deterministic; it is re-run for every perturbation.
template <typename T>
GradCheckReport grad_check(std::span<Parameter<T>* const> params,
                           const std::function<Var(Tape<T>&)>& build,
                           const GradCheckOptions& options);

extern template GradCheckReport grad_check<float>(
    std::span<Parameter<float>* const>, const std::function<Var(Tape<float>&)>&,
    const GradCheckOptions&);
extern template GradCheckReport grad_check<double>(
    std::span<Parameter<double>* const>,
    const std::function<Var(Tape<double>&)>&, const GradCheckOptions&);

}  // namespace morphnet::ad
