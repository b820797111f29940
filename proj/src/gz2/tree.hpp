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

// The 11-task, 37-answer GZ2 questionnaire and propagation of per-task vote
// fractions into tree-weighted probabilities.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace morphnet::gz2 {

inline constexpr std::size_t kNumTasks = 11;
inline constexpr std::size_t kNumAnswers = 37;

struct Answer {
  std::string text;
  /// Zero-based index of the follow-up task; nullopt ends the tree.
  std::optional<std::size_t> next;
};

struct Task {
  std::string question;
  std::vector<Answer> answers;
};

struct DecisionTree {
  std::vector<Task> tasks;

  /// The standard GZ2 tree.
  static DecisionTree standard();

  std::size_t answer_count() const;
  /// Flat answer index of (task, answer), in task-major order.
  std::size_t flat_index(std::size_t task, std::size_t answer) const;
  /// Flat offset of the first answer of each task.
  std::vector<std::size_t> offsets() const;
  /// Tasks in dependency order (Kahn). Throws kConfiguration on a cycle or
  /// an out-of-range link.
  std::vector<std::size_t> topological_order() const;
  void validate() const;
};

/// Catalog column name for a flat answer index: "Class<task>.<answer>".
std::string answer_column(std::size_t task, std::size_t answer);
/// All 37 column names in flat order.
const std::array<std::string, kNumAnswers>& answer_columns();

/// Converts per-task fractions into tree weights: an answer's weight is its
/// fraction times the mass reaching its task. T01 receives mass 1; any other
/// task receives the summed weight of the answers linking to it, capped at 1.
std::array<double, kNumAnswers> propagate_tree(std::span<const double> fractions,
                                               const DecisionTree& tree);

}  // namespace morphnet::gz2
