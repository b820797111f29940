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
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace morphnet::metrics {

/// Row-major n x n counts; (x, y) = true class x predicted as y.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes = 7);
  ConfusionMatrix(std::size_t classes, std::vector<std::uint64_t> counts);

  std::size_t classes() const noexcept { return k_; }
  std::uint64_t at(std::size_t truth, std::size_t pred) const { return counts_[truth * k_ + pred]; }
  void add(std::size_t truth, std::size_t pred, std::uint64_t n = 1);
  std::uint64_t total() const;
  std::uint64_t trace() const;
  std::uint64_t row_sum(std::size_t c) const;
  std::uint64_t column_sum(std::size_t c) const;
  const std::vector<std::uint64_t>& counts() const noexcept { return counts_; }

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t k_;
  std::vector<std::uint64_t> counts_;
};

ConfusionMatrix confusion(std::span<const int> predicted, std::span<const int> truth,
                          std::size_t classes = 7);

struct ClassScores {
  double precision = 0, recall = 0, f1 = 0;
  std::uint64_t support = 0;
  /// Set when a denominator was zero and the score defaulted to 0.
  bool undefined_precision = false;
  bool undefined_recall = false;
};

struct ClassificationReport {
  std::vector<ClassScores> per_class;
  double accuracy = 0;
  double macro_precision = 0, macro_recall = 0, macro_f1 = 0;
  std::uint64_t total = 0;
};

ClassificationReport report(const ConfusionMatrix& cm);

struct RegressionReport {
  double rmse = 0;
  std::vector<double> per_answer;  // one per column
};

/// Row-major n x k predictions and targets.
RegressionReport rmse(std::span<const double> pred, std::span<const double> target,
                      std::size_t columns);

/// Elementwise mean of equally shaped members.
std::vector<double> ensemble_average(const std::vector<std::vector<double>>& members);

inline constexpr std::size_t kSubmissionColumns = 37;

/// GalaxyID then Class1.1 .. Class11.6; values clamped to [0, 1] and
/// written in shortest round-trip form.
std::string format_submission(const std::vector<std::string>& ids, std::span<const double> preds);

struct Submission {
  std::vector<std::string> ids;
  std::vector<double> values;  // row-major n x 37
};
Submission parse_submission(std::string_view text);

std::string format_report_text(const ClassificationReport& r, const ConfusionMatrix& cm);
std::string format_report_json(const ClassificationReport& r, const ConfusionMatrix& cm);
std::string format_regression_text(const RegressionReport& r);
std::string format_regression_json(const RegressionReport& r);

}  // namespace morphnet::metrics
