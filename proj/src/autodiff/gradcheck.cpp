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

#include "autodiff/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "common/rng.hpp"

namespace morphnet::ad {

template <typename T>
GradCheckReport grad_check(std::span<Parameter<T>* const> params,
                           const std::function<Var(Tape<T>&)>& build,
                           const GradCheckOptions& options) {
  auto evaluate = [&build]() -> double {
    Tape<T> tape;
    Var loss = build(tape);
    return static_cast<double>(tape.value(loss)[0]);
  };

  for (Parameter<T>* p : params) p->zero_grad();
  double base = 0.0;
  {
    Tape<T> tape;
    Var loss = build(tape);
    tape.backward(loss);
    base = static_cast<double>(tape.value(loss)[0]);
  }

  GradCheckReport report;
  Rng sampler(options.sample_seed);
  const T eps = static_cast<T>(options.eps);
  const T half = static_cast<T>(options.eps / 2);

  for (Parameter<T>* p : params) {
    std::vector<std::size_t> indices(p->value.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    if (options.max_elements_per_tensor > 0 &&
        indices.size() > options.max_elements_per_tensor) {
      sampler.shuffle(indices);
      indices.resize(options.max_elements_per_tensor);
      std::sort(indices.begin(), indices.end());
    }

    for (std::size_t idx : indices) {
      T& x = p->value[idx];
      const T original = x;
      auto at = [&](T delta) {
        x = original + delta;
        const double v = evaluate();
        x = original;
        return v;
      };
      const double f_plus = at(eps);
      const double f_minus = at(-eps);
      const double f_plus_half = at(half);
      const double f_minus_half = at(-half);
      // Use the actual perturbation after rounding to T.
      const double step = static_cast<double>((original + eps) - (original - eps));
      const double step_half =
          static_cast<double>((original + half) - (original - half));
      const double numeric = (f_plus - f_minus) / step;
      const double numeric_half = (f_plus_half - f_minus_half) / step_half;
      const double slope_up = (f_plus - base) / (step / 2);
      const double slope_down = (base - f_minus) / (step / 2);
      const double scale = std::max(1.0, std::abs(numeric));
      if (std::abs(numeric - numeric_half) > options.stencil_tolerance * scale ||
          std::abs(slope_up - slope_down) > options.slope_tolerance * scale) {
        report.non_differentiable = true;
        continue;
      }

      const double analytic = static_cast<double>(p->grad[idx]);
      const double denom =
          std::max({std::abs(analytic), std::abs(numeric), options.rel_floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++report.checked;
      if (rel > report.max_rel_error || report.worst.empty()) {
        report.max_rel_error = std::max(report.max_rel_error, rel);
        if (rel >= report.max_rel_error) {
          std::ostringstream os;
          os << p->name << '[' << idx << "]: analytic " << analytic
             << " vs numeric " << numeric;
          report.worst = os.str();
        }
      }
    }
  }
  return report;
}

template GradCheckReport grad_check<float>(
    std::span<Parameter<float>* const>, const std::function<Var(Tape<float>&)>&,
    const GradCheckOptions&);
template GradCheckReport grad_check<double>(
    std::span<Parameter<double>* const>,
    const std::function<Var(Tape<double>&)>&, const GradCheckOptions&);

}  // namespace morphnet::ad
