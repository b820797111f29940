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

#include "metrics/metrics.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "common/error.hpp"
#include "common/text.hpp"
#include "gz2/tree.hpp"

namespace morphnet::metrics {

ConfusionMatrix::ConfusionMatrix(std::size_t classes) : k_(classes), counts_(classes * classes) {
  if (classes == 0) fail(ErrorCode::kInvalidArgument, "confusion matrix needs >= 1 class");
}

ConfusionMatrix::ConfusionMatrix(std::size_t classes, std::vector<std::uint64_t> counts)
    : k_(classes), counts_(std::move(counts)) {
  if (classes == 0 || counts_.size() != classes * classes) {
    fail(ErrorCode::kShape, "confusion matrix needs ", classes * classes, " counts, got ",
         counts_.size());
  }
}

void ConfusionMatrix::add(std::size_t truth, std::size_t pred, std::uint64_t n) {
  if (truth >= k_ || pred >= k_) {
    fail(ErrorCode::kInvalidArgument, "class pair (", truth, ", ", pred, ") outside 0..",
         k_ - 1);
  }
  counts_[truth * k_ + pred] += n;
}

std::uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t c = 0; c < k_; ++c) t += at(c, c);
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(std::size_t c) const {
  std::uint64_t s = 0;
  for (std::size_t j = 0; j < k_; ++j) s += at(c, j);
  return s;
}

std::uint64_t ConfusionMatrix::column_sum(std::size_t c) const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; i < k_; ++i) s += at(i, c);
  return s;
}

ConfusionMatrix confusion(std::span<const int> predicted, std::span<const int> truth,
                          std::size_t classes) {
  if (predicted.size() != truth.size()) {
    fail(ErrorCode::kShape, "confusion: ", predicted.size(), " predictions vs ", truth.size(),
         " labels");
  }
  ConfusionMatrix cm(classes);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] < 0 || truth[i] < 0) {
      fail(ErrorCode::kInvalidArgument, "confusion: negative class id at ", i);
    }
    cm.add(static_cast<std::size_t>(truth[i]), static_cast<std::size_t>(predicted[i]));
  }
  return cm;
}

ClassificationReport report(const ConfusionMatrix& cm) {
  const std::uint64_t total = cm.total();
  if (total == 0) fail(ErrorCode::kInvalidArgument, "report: confusion matrix is empty");
  ClassificationReport r;
  r.total = total;
  r.accuracy = static_cast<double>(cm.trace()) / static_cast<double>(total);
  for (std::size_t c = 0; c < cm.classes(); ++c) {
    ClassScores s;
    const double tp = static_cast<double>(cm.at(c, c));
    const std::uint64_t col = cm.column_sum(c);
    s.support = cm.row_sum(c);
    if (col == 0) {
      s.undefined_precision = true;
    } else {
      s.precision = tp / static_cast<double>(col);
    }
    if (s.support == 0) {
      s.undefined_recall = true;
    } else {
      s.recall = tp / static_cast<double>(s.support);
    }
    if (s.precision + s.recall > 0) {
      s.f1 = 2 * s.precision * s.recall / (s.precision + s.recall);
    }
    r.macro_precision += s.precision;
    r.macro_recall += s.recall;
    r.macro_f1 += s.f1;
    r.per_class.push_back(s);
  }
  const double k = static_cast<double>(cm.classes());
  r.macro_precision /= k;
  r.macro_recall /= k;
  r.macro_f1 /= k;
  return r;
}

RegressionReport rmse(std::span<const double> pred, std::span<const double> target,
                      std::size_t columns) {
  if (pred.size() != target.size()) {
    fail(ErrorCode::kShape, "rmse: ", pred.size(), " predictions vs ", target.size(), " targets");
  }
  if (columns == 0 || pred.empty() || pred.size() % columns != 0) {
    fail(ErrorCode::kShape, "rmse: ", pred.size(), " values do not form rows of ", columns);
  }
  const std::size_t rows = pred.size() / columns;
  RegressionReport r;
  r.per_answer.assign(columns, 0.0);
  double total = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < columns; ++j) {
      const double d = pred[i * columns + j] - target[i * columns + j];
      r.per_answer[j] += d * d;
      total += d * d;
    }
  }
  for (double& v : r.per_answer) v = std::sqrt(v / static_cast<double>(rows));
  r.rmse = std::sqrt(total / static_cast<double>(pred.size()));
  return r;
}

std::vector<double> ensemble_average(const std::vector<std::vector<double>>& members) {
  if (members.empty()) fail(ErrorCode::kInvalidArgument, "ensemble: no members");
  const std::size_t n = members.front().size();
  for (const auto& m : members) {
    if (m.size() != n) fail(ErrorCode::kShape, "ensemble: members differ in size");
  }
  std::vector<double> out(n, 0.0);
  if (members.size() == 1) return members.front();
  const double k = static_cast<double>(members.size());
  for (std::size_t i = 0; i < n; ++i) {
    // Mean as an offset from the first member, so identical members give
    // back that member exactly.
    const double first = members.front()[i];
    double offset = 0;
    for (const auto& m : members) offset += m[i] - first;
    out[i] = first + offset / k;
  }
  return out;
}

std::string format_submission(const std::vector<std::string>& ids, std::span<const double> preds) {
  if (preds.size() != ids.size() * kSubmissionColumns) {
    fail(ErrorCode::kShape, "submission: ", ids.size(), " ids need ",
         ids.size() * kSubmissionColumns, " values, got ", preds.size());
  }
  std::string out = "GalaxyID";
  for (const std::string& c : gz2::answer_columns()) {
    out += ',';
    out += c;
  }
  out += '\n';
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out += ids[i];
    for (std::size_t j = 0; j < kSubmissionColumns; ++j) {
      double v = preds[i * kSubmissionColumns + j];
      if (std::isnan(v)) fail(ErrorCode::kNumeric, "submission: NaN for ", ids[i]);
      v = std::clamp(v, 0.0, 1.0);
      std::string s = text::format_real(v);
      if (s.find_first_of(".e") == std::string::npos) s += ".0";
      out += ',';
      out += s;
    }
    out += '\n';
  }
  return out;
}

Submission parse_submission(std::string_view text) {
  const auto lines = text::split_lines(text);
  if (lines.empty()) fail(ErrorCode::kSchema, "submission: empty");
  const auto header = text::split(text::trim(lines[0]), ',');
  if (header.size() != kSubmissionColumns + 1 || header[0] != "GalaxyID") {
    fail(ErrorCode::kSchema, "submission: bad header");
  }
  for (std::size_t k = 0; k < kSubmissionColumns; ++k) {
    if (header[k + 1] != gz2::answer_columns()[k]) {
      fail(ErrorCode::kSchema, "submission: column ", k + 2, " should be ",
           gz2::answer_columns()[k]);
    }
  }
  Submission s;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto line = text::trim(lines[li]);
    if (line.empty()) continue;
    const auto cells = text::split(line, ',');
    if (cells.size() != kSubmissionColumns + 1) {
      fail(ErrorCode::kSchema, "submission line ", li + 1, ": wrong field count");
    }
    s.ids.emplace_back(cells[0]);
    for (std::size_t k = 1; k < cells.size(); ++k) {
      double v;
      if (!text::parse_number(cells[k], v)) {
        fail(ErrorCode::kSchema, "submission line ", li + 1, ": bad value");
      }
      s.values.push_back(v);
    }
  }
  return s;
}

std::string format_report_text(const ClassificationReport& r, const ConfusionMatrix& cm) {
  std::ostringstream os;
  char buf[160];
  os << "class  precision  recall  f1-score  support\n";
  for (std::size_t c = 0; c < r.per_class.size(); ++c) {
    const ClassScores& s = r.per_class[c];
    std::snprintf(buf, sizeof buf, "%5zu  %9.4f  %6.4f  %8.4f  %7llu%s\n", c, s.precision,
                  s.recall, s.f1, static_cast<unsigned long long>(s.support),
                  (s.undefined_precision || s.undefined_recall) ? "  (undefined)" : "");
    os << buf;
  }
  std::snprintf(buf, sizeof buf, "macro  %9.4f  %6.4f  %8.4f  %7llu\n", r.macro_precision,
                r.macro_recall, r.macro_f1, static_cast<unsigned long long>(r.total));
  os << buf;
  std::snprintf(buf, sizeof buf, "accuracy %.4f (%llu/%llu)\n", r.accuracy,
                static_cast<unsigned long long>(cm.trace()),
                static_cast<unsigned long long>(r.total));
  os << buf << "\nconfusion matrix (rows: true, columns: predicted)\n";
  for (std::size_t i = 0; i < cm.classes(); ++i) {
    for (std::size_t j = 0; j < cm.classes(); ++j) {
      std::snprintf(buf, sizeof buf, "%7llu", static_cast<unsigned long long>(cm.at(i, j)));
      os << buf;
    }
    os << '\n';
  }
  return os.str();
}

std::string format_report_json(const ClassificationReport& r, const ConfusionMatrix& cm) {
  nlohmann::ordered_json j;
  j["accuracy"] = r.accuracy;
  j["total"] = r.total;
  j["macro"] = {{"precision", r.macro_precision}, {"recall", r.macro_recall}, {"f1", r.macro_f1}};
  auto& classes = j["classes"] = nlohmann::ordered_json::array();
  for (const ClassScores& s : r.per_class) {
    classes.push_back({{"precision", s.precision},
                       {"recall", s.recall},
                       {"f1", s.f1},
                       {"support", s.support},
                       {"undefined_precision", s.undefined_precision},
                       {"undefined_recall", s.undefined_recall}});
  }
  auto& rows = j["confusion"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < cm.classes(); ++i) {
    auto row = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < cm.classes(); ++k) row.push_back(cm.at(i, k));
    rows.push_back(row);
  }
  return j.dump(2) + "\n";
}

std::string format_regression_text(const RegressionReport& r) {
  std::ostringstream os;
  char buf[96];
  std::snprintf(buf, sizeof buf, "rmse %.6f\n", r.rmse);
  os << buf;
  const auto& names = gz2::answer_columns();
  for (std::size_t k = 0; k < r.per_answer.size(); ++k) {
    const std::string name = k < names.size() ? names[k] : "col" + std::to_string(k);
    std::snprintf(buf, sizeof buf, "  %-10s %.6f\n", name.c_str(), r.per_answer[k]);
    os << buf;
  }
  return os.str();
}

std::string format_regression_json(const RegressionReport& r) {
  nlohmann::ordered_json j;
  j["rmse"] = r.rmse;
  j["per_answer"] = r.per_answer;
  return j.dump(2) + "\n";
}

}  // namespace morphnet::metrics
