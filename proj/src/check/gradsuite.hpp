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

// Finite-difference suite over every differentiable op, the blocks built on
// them and a small two-block network, in double precision.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace morphnet::check {

struct GradSuiteOptions {
  std::size_t seeds = 100;
  std::uint64_t root_seed = 0;
  double eps = 1e-6;
  double tolerance = 1e-6;
  /// Fresh inputs are drawn at most this many times when a kink is hit.
  std::size_t max_retries = 5;
  /// Elements checked per tensor per seed; 0 checks all of them.
  std::size_t max_elements_per_tensor = 12;
  /// Case names to run; empty runs everything.
  std::vector<std::string> only;
};

struct GradCaseResult {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::size_t seeds = 0;
  std::size_t resamples = 0;
  /// Seeds where every retry still straddled a kink. Their remaining
  /// smooth elements are still compared.
  std::size_t unresolved_kinks = 0;
  std::string worst;
  bool passed = false;
};

struct GradSuiteResult {
  std::vector<GradCaseResult> cases;
  double max_rel_error = 0.0;
  double seconds = 0.0;
  bool passed = false;
};

std::vector<std::string> grad_case_names();

/// Throws kNotFound if `only` names an unknown case.
GradSuiteResult run_grad_suite(
    const GradSuiteOptions& options,
    const std::function<void(const GradCaseResult&)>& on_case = {});

}  // namespace morphnet::check
