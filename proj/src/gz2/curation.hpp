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

// Clean-sample selection: each class is a conjunction of threshold clauses
// over catalog columns.

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "gz2/catalog.hpp"

namespace morphnet::gz2 {

inline constexpr std::size_t kNumClasses = 7;

enum class TermKind {
  kColumn,  // one answer
  kSum,     // summed fractions of several answers
  kAny,     // largest of several answers
};

/// Human-readable name of a morphology class 0..6.
std::string_view class_name(int label);

struct Term {
  TermKind kind = TermKind::kColumn;
  std::vector<std::size_t> answers;  // flat answer indices

  double evaluate(const CatalogRow& row) const;
};

/// term >= threshold
struct Clause {
  Term term;
  double threshold = 0.5;
};

struct CurationRule {
  int label = 0;
  std::vector<Clause> clauses;

  bool matches(const CatalogRow& row) const;
  void validate() const;
};

/// Parses `class <id> = <term> >= <t> & ...` lines. Terms are column names,
/// sum(col, ...) or any(col, ...).
std::vector<CurationRule> parse_rules(std::string_view text);

/// The built-in seven rules.
std::vector<CurationRule> default_rules();

/// Replaces every summed term with an any-of term.
std::vector<CurationRule> with_or_mode(std::vector<CurationRule> rules);

struct LabeledSample {
  std::string galaxy_id;
  int label = 0;

  friend bool operator==(const LabeledSample&, const LabeledSample&) = default;
};

struct Conflict {
  std::string galaxy_id;
  std::vector<int> labels;
};

struct CurationResult {
  /// Sorted by galaxy_id.
  std::vector<LabeledSample> samples;
  /// Rows matching more than one rule; excluded from samples.
  std::vector<Conflict> conflicts;
  std::size_t unlabeled = 0;
  std::array<std::size_t, kNumClasses> counts{};
};

CurationResult select_clean(const std::vector<CatalogRow>& rows,
                            const std::vector<CurationRule>& rules);

}  // namespace morphnet::gz2
