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

#include "gz2/tree.hpp"

#include <algorithm>
#include <deque>

#include "common/error.hpp"

namespace morphnet::gz2 {
namespace {

constexpr std::optional<std::size_t> kEnd = std::nullopt;

std::optional<std::size_t> to(std::size_t task_number) { return task_number - 1; }

}  // namespace

DecisionTree DecisionTree::standard() {
  DecisionTree t;
  t.tasks = {
      {"Is the galaxy simply smooth and rounded, with no sign of a disk?",
       {{"smooth", to(7)}, {"features or disk", to(2)}, {"star or artifact", kEnd}}},
      {"Could this be a disk viewed edge-on?", {{"yes", to(9)}, {"no", to(3)}}},
      {"Is there a sign of a bar feature through the centre of the galaxy?",
       {{"yes", to(4)}, {"no", to(4)}}},
      {"Is there any sign of a spiral arm pattern?", {{"yes", to(10)}, {"no", to(5)}}},
      {"How prominent is the central bulge, compared with the rest of the galaxy?",
       {{"no bulge", to(6)},
        {"just noticeable", to(6)},
        {"obvious", to(6)},
        {"dominant", to(6)}}},
      {"Is there anything odd?", {{"yes", to(8)}, {"no", kEnd}}},
      {"How rounded is it?",
       {{"completely round", to(6)}, {"in between", to(6)}, {"cigar-shaped", to(6)}}},
      {"Is the odd feature a ring, or is the galaxy disturbed or irregular?",
       {{"ring", kEnd},
        {"lens or arc", kEnd},
        {"disturbed", kEnd},
        {"irregular", kEnd},
        {"other", kEnd},
        {"merger", kEnd},
        {"dust lane", kEnd}}},
      {"Does the galaxy have a bulge at its centre? If so, what shape?",
       {{"rounded", to(6)}, {"boxy", to(6)}, {"no bulge", to(6)}}},
      {"How tightly wound do the spiral arms appear?",
       {{"tight", to(11)}, {"medium", to(11)}, {"loose", to(11)}}},
      {"How many spiral arms are there?",
       {{"1", to(5)},
        {"2", to(5)},
        {"3", to(5)},
        {"4", to(5)},
        {"more than four", to(5)},
        {"can't tell", to(5)}}},
  };
  return t;
}

std::size_t DecisionTree::answer_count() const {
  std::size_t n = 0;
  for (const Task& t : tasks) n += t.answers.size();
  return n;
}

std::vector<std::size_t> DecisionTree::offsets() const {
  std::vector<std::size_t> out(tasks.size());
  std::size_t acc = 0;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    out[i] = acc;
    acc += tasks[i].answers.size();
  }
  return out;
}

std::size_t DecisionTree::flat_index(std::size_t task, std::size_t answer) const {
  if (task >= tasks.size() || answer >= tasks[task].answers.size()) {
    fail(ErrorCode::kInvalidArgument, "no answer ", answer, " in task ", task);
  }
  return offsets()[task] + answer;
}

std::vector<std::size_t> DecisionTree::topological_order() const {
  const std::size_t n = tasks.size();
  std::vector<std::size_t> indegree(n, 0);
  for (const Task& t : tasks) {
    for (const Answer& a : t.answers) {
      if (!a.next) continue;
      if (*a.next >= n) {
        fail(ErrorCode::kConfiguration, "decision tree links to missing task ",
             *a.next + 1);
      }
      ++indegree[*a.next];
    }
  }
  std::deque<std::size_t> ready;
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.push_back(i);
  }
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    const std::size_t cur = ready.front();
    ready.pop_front();
    order.push_back(cur);
    for (const Answer& a : tasks[cur].answers) {
      if (a.next && --indegree[*a.next] == 0) ready.push_back(*a.next);
    }
  }
  if (order.size() != n) fail(ErrorCode::kConfiguration, "decision tree contains a cycle");
  return order;
}

void DecisionTree::validate() const {
  if (tasks.empty()) fail(ErrorCode::kConfiguration, "decision tree has no tasks");
  const auto order = topological_order();
  if (order.front() != 0) {
    fail(ErrorCode::kConfiguration, "decision tree must be rooted at the first task");
  }
}

std::string answer_column(std::size_t task, std::size_t answer) {
  return "Class" + std::to_string(task + 1) + "." + std::to_string(answer + 1);
}

const std::array<std::string, kNumAnswers>& answer_columns() {
  static const std::array<std::string, kNumAnswers> names = [] {
    std::array<std::string, kNumAnswers> out;
    const DecisionTree tree = DecisionTree::standard();
    std::size_t k = 0;
    for (std::size_t t = 0; t < tree.tasks.size(); ++t) {
      for (std::size_t a = 0; a < tree.tasks[t].answers.size(); ++a) {
        out[k++] = answer_column(t, a);
      }
    }
    return out;
  }();
  return names;
}

std::array<double, kNumAnswers> propagate_tree(std::span<const double> fractions,
                                               const DecisionTree& tree) {
  if (tree.answer_count() != kNumAnswers) {
    fail(ErrorCode::kConfiguration, "decision tree has ", tree.answer_count(),
         " answers, expected ", kNumAnswers);
  }
  if (fractions.size() != kNumAnswers) {
    fail(ErrorCode::kShape, "propagate_tree: expected ", kNumAnswers, " fractions, got ",
         fractions.size());
  }
  const auto order = tree.topological_order();
  const auto offsets = tree.offsets();
  std::vector<double> mass(tree.tasks.size(), 0.0);
  mass[0] = 1.0;
  std::array<double, kNumAnswers> weights{};
  for (std::size_t task : order) {
    const double m = std::min(1.0, mass[task]);
    const Task& t = tree.tasks[task];
    for (std::size_t a = 0; a < t.answers.size(); ++a) {
      const std::size_t k = offsets[task] + a;
      weights[k] = fractions[k] * m;
      if (t.answers[a].next) mass[*t.answers[a].next] += weights[k];
    }
  }
  return weights;
}

}  // namespace morphnet::gz2
