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

#include "gz2/catalog.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "common/error.hpp"
#include "common/io.hpp"
#include "common/text.hpp"

namespace morphnet::gz2 {

Catalog parse_catalog(std::string_view text) {
  const auto lines = text::split_lines(text);
  std::size_t header_line = 0;
  while (header_line < lines.size() && text::trim(lines[header_line]).empty()) {
    ++header_line;
  }
  if (header_line == lines.size()) fail(ErrorCode::kSchema, "catalog: missing header row");

  const auto header = text::split(text::trim(lines[header_line]), ',');
  std::map<std::string, std::size_t, std::less<>> column;
  for (std::size_t i = 0; i < header.size(); ++i) {
    column.emplace(std::string(text::trim(header[i])), i);
  }
  const auto id_it = column.find("GalaxyID");
  if (id_it == column.end()) fail(ErrorCode::kSchema, "catalog: missing column GalaxyID");
  std::array<std::size_t, kNumAnswers> answer_col{};
  for (std::size_t k = 0; k < kNumAnswers; ++k) {
    const auto it = column.find(answer_columns()[k]);
    if (it == column.end()) {
      fail(ErrorCode::kSchema, "catalog: missing column ", answer_columns()[k]);
    }
    answer_col[k] = it->second;
  }

  const DecisionTree tree = DecisionTree::standard();
  const auto offsets = tree.offsets();
  Catalog cat;
  std::size_t data_rows = 0;
  for (std::size_t li = header_line + 1; li < lines.size(); ++li) {
    const std::string_view line = text::trim(lines[li]);
    if (line.empty()) continue;
    ++data_rows;
    const auto cells = text::split(line, ',');
    RowIssue issue;
    issue.line = li + 1;
    if (cells.size() != header.size()) {
      issue.reason = "expected " + std::to_string(header.size()) + " fields, got " +
                     std::to_string(cells.size());
      cat.rejected.push_back(std::move(issue));
      continue;
    }
    CatalogRow row;
    row.galaxy_id = std::string(text::trim(cells[id_it->second]));
    issue.galaxy_id = row.galaxy_id;
    if (row.galaxy_id.empty()) {
      issue.reason = "empty GalaxyID";
      cat.rejected.push_back(std::move(issue));
      continue;
    }
    for (std::size_t k = 0; k < kNumAnswers && issue.reason.empty(); ++k) {
      double v = 0;
      if (!text::parse_number(cells[answer_col[k]], v) || !std::isfinite(v)) {
        issue.reason = answer_columns()[k] + " is not a number";
      } else if (v < 0.0 || v > 1.0) {
        issue.reason = answer_columns()[k] + " = " + std::string(text::trim(cells[answer_col[k]])) +
                       " is outside [0, 1]";
      }
      row.fractions[k] = v;
    }
    for (std::size_t t = 0; t < tree.tasks.size() && issue.reason.empty(); ++t) {
      double sum = 0;
      for (std::size_t a = 0; a < tree.tasks[t].answers.size(); ++a) {
        sum += row.fractions[offsets[t] + a];
      }
      if (sum > 1.0 + kTaskSumTolerance) {
        issue.reason = "task " + std::to_string(t + 1) + " fractions sum to " +
                       text::format_real(sum);
      }
    }
    if (!issue.reason.empty()) {
      cat.rejected.push_back(std::move(issue));
      continue;
    }
    cat.rows.push_back(std::move(row));
  }
  if (data_rows == 0) {
    cat.warnings.push_back("catalog has a header but no rows");
  } else if (cat.rows.empty()) {
    fail(ErrorCode::kSchema, "catalog: all ", data_rows, " rows were rejected (first: line ",
         cat.rejected.front().line, ": ", cat.rejected.front().reason, ")");
  }
  return cat;
}

Catalog load_catalog(const std::string& path) { return parse_catalog(io::read_file(path)); }

std::string format_catalog(const std::vector<CatalogRow>& rows) {
  std::ostringstream os;
  os << "GalaxyID";
  for (const std::string& c : answer_columns()) os << ',' << c;
  os << '\n';
  for (const CatalogRow& r : rows) {
    os << r.galaxy_id;
    for (double v : r.fractions) os << ',' << text::format_real(v);
    os << '\n';
  }
  return os.str();
}

}  // namespace morphnet::gz2
