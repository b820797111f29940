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

#include "gz2/curation.hpp"

#include <algorithm>
#include <set>

#include "common/error.hpp"
#include "common/resources.hpp"
#include "common/text.hpp"

namespace morphnet::gz2 {

std::string_view class_name(int label) {
  static constexpr std::array<std::string_view, kNumClasses> kNames = {
      "completely round smooth", "in-between smooth", "cigar-shaped smooth", "lenticular",
      "barred spiral", "unbarred spiral", "irregular"};
  if (label < 0 || label >= static_cast<int>(kNumClasses)) {
    fail(ErrorCode::kInvalidArgument, "class label ", label, " outside 0..6");
  }
  return kNames[static_cast<std::size_t>(label)];
}
namespace {

std::size_t column_index(std::string_view name) {
  const auto& cols = answer_columns();
  for (std::size_t k = 0; k < cols.size(); ++k) {
    if (cols[k] == name) return k;
  }
  fail(ErrorCode::kSchema, "rules: unknown column '", name, "'");
}

Term parse_term(std::string_view s) {
  s = text::trim(s);
  Term term;
  std::string_view inner;
  if (s.starts_with("sum(") || s.starts_with("any(")) {
    if (!s.ends_with(")")) fail(ErrorCode::kSchema, "rules: unbalanced '", s, "'");
    term.kind = s[0] == 's' ? TermKind::kSum : TermKind::kAny;
    inner = s.substr(4, s.size() - 5);
    for (std::string_view part : text::split(inner, ',')) {
      term.answers.push_back(column_index(text::trim(part)));
    }
  } else {
    term.answers.push_back(column_index(s));
  }
  return term;
}

}  // namespace

double Term::evaluate(const CatalogRow& row) const {
  double v = 0.0;
  for (std::size_t k : answers) {
    v = kind == TermKind::kAny ? std::max(v, row.fractions[k]) : v + row.fractions[k];
  }
  return v;
}

bool CurationRule::matches(const CatalogRow& row) const {
  for (const Clause& c : clauses) {
    if (!(c.term.evaluate(row) >= c.threshold)) return false;
  }
  return true;
}

void CurationRule::validate() const {
  if (label < 0 || label >= static_cast<int>(kNumClasses)) {
    fail(ErrorCode::kSchema, "rules: class id ", label, " outside 0..", kNumClasses - 1);
  }
  if (clauses.empty()) fail(ErrorCode::kSchema, "rules: class ", label, " has no clauses");
  for (const Clause& c : clauses) {
    if (!(c.threshold > 0.0 && c.threshold < 1.0)) {
      fail(ErrorCode::kSchema, "rules: class ", label, " threshold ", c.threshold,
           " outside (0, 1)");
    }
    if (c.term.answers.empty()) fail(ErrorCode::kSchema, "rules: empty term");
  }
}

std::vector<CurationRule> parse_rules(std::string_view text) {
  std::vector<CurationRule> rules;
  std::set<int> seen;
  std::size_t line_no = 0;
  for (std::string_view line : text::split_lines(text)) {
    ++line_no;
    line = text::trim(text::strip_comment(line));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (!line.starts_with("class ") || eq == std::string_view::npos) {
      fail(ErrorCode::kSchema, "rules line ", line_no, ": expected 'class <id> = ...'");
    }
    CurationRule rule;
    if (!text::parse_number(line.substr(6, eq - 6), rule.label)) {
      fail(ErrorCode::kSchema, "rules line ", line_no, ": bad class id");
    }
    for (std::string_view clause : text::split(line.substr(eq + 1), '&')) {
      const auto ge = clause.find(">=");
      if (ge == std::string_view::npos) {
        fail(ErrorCode::kSchema, "rules line ", line_no, ": clause without '>='");
      }
      Clause c;
      c.term = parse_term(clause.substr(0, ge));
      if (!text::parse_number(clause.substr(ge + 2), c.threshold)) {
        fail(ErrorCode::kSchema, "rules line ", line_no, ": bad threshold");
      }
      rule.clauses.push_back(std::move(c));
    }
    rule.validate();
    if (!seen.insert(rule.label).second) {
      fail(ErrorCode::kSchema, "rules: class ", rule.label, " defined twice");
    }
    rules.push_back(std::move(rule));
  }
  if (rules.empty()) fail(ErrorCode::kSchema, "rules: no classes defined");
  return rules;
}

std::vector<CurationRule> default_rules() { return parse_rules(resources::gz2_rules()); }

std::vector<CurationRule> with_or_mode(std::vector<CurationRule> rules) {
  for (CurationRule& r : rules) {
    for (Clause& c : r.clauses) {
      if (c.term.kind == TermKind::kSum) c.term.kind = TermKind::kAny;
    }
  }
  return rules;
}

CurationResult select_clean(const std::vector<CatalogRow>& rows,
                            const std::vector<CurationRule>& rules) {
  for (const CurationRule& r : rules) r.validate();
  CurationResult out;
  // Rows are a set: exact repeats count once, a reused id with other votes is an error.
  std::vector<const CatalogRow*> unique;
  unique.reserve(rows.size());
  for (const CatalogRow& row : rows) unique.push_back(&row);
  std::sort(unique.begin(), unique.end(),
            [](const CatalogRow* a, const CatalogRow* b) { return a->galaxy_id < b->galaxy_id; });
  std::size_t kept = 0;
  for (std::size_t i = 0; i < unique.size(); ++i) {
    if (kept > 0 && unique[kept - 1]->galaxy_id == unique[i]->galaxy_id) {
      if (unique[kept - 1]->fractions != unique[i]->fractions) {
        fail(ErrorCode::kInvalidArgument, "galaxy ", unique[i]->galaxy_id,
             " appears twice with different vote fractions");
      }
      continue;
    }
    unique[kept++] = unique[i];
  }
  unique.resize(kept);
  for (const CatalogRow* rp : unique) {
    const CatalogRow& row = *rp;
    std::vector<int> hits;
    for (const CurationRule& r : rules) {
      if (r.matches(row)) hits.push_back(r.label);
    }
    if (hits.empty()) {
      ++out.unlabeled;
    } else if (hits.size() > 1) {
      std::sort(hits.begin(), hits.end());
      out.conflicts.push_back({row.galaxy_id, std::move(hits)});
    } else {
      out.samples.push_back({row.galaxy_id, hits.front()});
    }
  }
  const auto by_id = [](const auto& a, const auto& b) { return a.galaxy_id < b.galaxy_id; };
  std::sort(out.samples.begin(), out.samples.end(), [](const auto& a, const auto& b) {
    return a.galaxy_id != b.galaxy_id ? a.galaxy_id < b.galaxy_id : a.label < b.label;
  });
  std::stable_sort(out.conflicts.begin(), out.conflicts.end(), by_id);
  for (const LabeledSample& s : out.samples) ++out.counts[static_cast<std::size_t>(s.label)];
  return out;
}

}  // namespace morphnet::gz2
