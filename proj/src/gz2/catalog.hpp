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

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "gz2/tree.hpp"

namespace morphnet::gz2 {

/// Per-task answer fractions may exceed 1 by this much before a row is
/// rejected.
inline constexpr double kTaskSumTolerance = 1e-3;

struct CatalogRow {
  std::string galaxy_id;
  std::array<double, kNumAnswers> fractions{};
};

struct RowIssue {
  std::size_t line = 0;
  std::string galaxy_id;
  std::string reason;
};

struct Catalog {
  std::vector<CatalogRow> rows;
  std::vector<RowIssue> rejected;
  std::vector<std::string> warnings;
};

/// Comma-separated text with a header naming GalaxyID and every
/// Class<t>.<a> column (any order; extra columns ignored). Invalid rows are
/// collected in `rejected`; a missing column, or every row failing, throws
/// kSchema.
Catalog parse_catalog(std::string_view text);
Catalog load_catalog(const std::string& path);

std::string format_catalog(const std::vector<CatalogRow>& rows);

}  // namespace morphnet::gz2
