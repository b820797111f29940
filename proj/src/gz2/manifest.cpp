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

#include "gz2/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "common/error.hpp"
#include "common/io.hpp"
#include "common/rng.hpp"
#include "common/text.hpp"

namespace morphnet::gz2 {
namespace {

constexpr std::string_view kVersionLine = "# morphnet-manifest v1";

}  // namespace

std::string_view split_name(Split s) { return s == Split::kTrain ? "train" : "test"; }

std::array<std::array<std::size_t, 2>, kNumClasses> DatasetManifest::counts() const {
  std::array<std::array<std::size_t, 2>, kNumClasses> c{};
  for (const ManifestEntry& e : entries) {
    if (e.label >= 0) ++c[static_cast<std::size_t>(e.label)][e.split == Split::kTest ? 1 : 0];
  }
  return c;
}

std::size_t DatasetManifest::size(Split s) const {
  return static_cast<std::size_t>(std::count_if(
      entries.begin(), entries.end(), [s](const ManifestEntry& e) { return e.split == s; }));
}

bool DatasetManifest::has_targets() const {
  return !entries.empty() && std::all_of(entries.begin(), entries.end(),
                                         [](const ManifestEntry& e) { return e.targets.has_value(); });
}

void DatasetManifest::validate() const {
  std::set<std::string_view> ids;
  for (const ManifestEntry& e : entries) {
    if (e.galaxy_id.empty()) fail(ErrorCode::kSchema, "manifest: empty galaxy_id");
    if (!ids.insert(e.galaxy_id).second) {
      fail(ErrorCode::kSchema, "manifest: galaxy ", e.galaxy_id, " listed twice");
    }
    if (e.label < -1 || e.label >= static_cast<int>(kNumClasses)) {
      fail(ErrorCode::kSchema, "manifest: label ", e.label, " outside 0..6");
    }
    if (e.label == -1 && !e.targets) {
      fail(ErrorCode::kSchema, "manifest: galaxy ", e.galaxy_id,
           " has no label and no regression targets");
    }
  }
}

std::size_t test_count(std::size_t n, SplitRatio ratio) {
  if (ratio.train + ratio.test == 0 || ratio.test == 0) {
    fail(ErrorCode::kInvalidArgument, "split ratio needs a positive test share");
  }
  return std::max<std::size_t>(1, n * ratio.test / (ratio.train + ratio.test));
}

DatasetManifest split_dataset(const std::vector<LabeledSample>& samples, SplitRatio ratio,
                              std::uint64_t seed, const std::string& image_dir,
                              const std::string& ext) {
  std::array<std::vector<const LabeledSample*>, kNumClasses> by_class;
  for (const LabeledSample& s : samples) {
    if (s.label < 0 || s.label >= static_cast<int>(kNumClasses)) {
      fail(ErrorCode::kInvalidArgument, "split: label ", s.label, " outside 0..6");
    }
    by_class[static_cast<std::size_t>(s.label)].push_back(&s);
  }
  DatasetManifest m;
  m.seed = seed;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    auto& members = by_class[c];
    if (members.empty()) continue;
    if (members.size() < 2) {
      fail(ErrorCode::kInvalidArgument, "split: class ", c, " has only ", members.size(),
           " sample; need at least 2");
    }
    std::sort(members.begin(), members.end(),
              [](const auto* a, const auto* b) { return a->galaxy_id < b->galaxy_id; });
    Rng rng(derive_seed(seed, {c}));
    rng.shuffle(members);
    const std::size_t n_test = test_count(members.size(), ratio);
    for (std::size_t i = 0; i < members.size(); ++i) {
      ManifestEntry e;
      e.galaxy_id = members[i]->galaxy_id;
      e.path = image_dir.empty() ? e.galaxy_id + "." + ext
                                 : image_dir + "/" + e.galaxy_id + "." + ext;
      e.label = members[i]->label;
      e.split = i < n_test ? Split::kTest : Split::kTrain;
      m.entries.push_back(std::move(e));
    }
  }
  std::sort(m.entries.begin(), m.entries.end(),
            [](const auto& a, const auto& b) { return a.galaxy_id < b.galaxy_id; });
  m.validate();
  return m;
}

std::string format_manifest(const DatasetManifest& m) {
  const bool targets = m.has_targets();
  std::ostringstream os;
  os << kVersionLine << " seed=" << m.seed << '\n' << "galaxy_id,path,label,split";
  if (targets) {
    for (const std::string& c : answer_columns()) os << ',' << c;
  }
  os << '\n';
  for (const ManifestEntry& e : m.entries) {
    os << e.galaxy_id << ',' << e.path << ',' << e.label << ',' << split_name(e.split);
    if (targets) {
      for (float v : *e.targets) os << ',' << text::format_real(v);
    }
    os << '\n';
  }
  return os.str();
}

DatasetManifest parse_manifest(std::string_view text) {
  const auto lines = text::split_lines(text);
  if (lines.empty() || !text::trim(lines[0]).starts_with(kVersionLine)) {
    fail(ErrorCode::kSchema, "manifest: missing or unsupported version line");
  }
  DatasetManifest m;
  const std::string_view version = text::trim(lines[0]);
  const auto seed_pos = version.find("seed=");
  if (seed_pos == std::string_view::npos ||
      !text::parse_number(version.substr(seed_pos + 5), m.seed)) {
    fail(ErrorCode::kSchema, "manifest: version line lacks seed=");
  }
  if (lines.size() < 2) fail(ErrorCode::kSchema, "manifest: missing header");
  const auto header = text::split(text::trim(lines[1]), ',');
  if (header.size() < 4 || header[0] != "galaxy_id" || header[1] != "path" ||
      header[2] != "label" || header[3] != "split") {
    fail(ErrorCode::kSchema, "manifest: header must start with galaxy_id,path,label,split");
  }
  const bool targets = header.size() > 4;
  if (targets) {
    if (header.size() != 4 + kNumAnswers) {
      fail(ErrorCode::kSchema, "manifest: target columns must list all ", kNumAnswers,
           " answers");
    }
    for (std::size_t k = 0; k < kNumAnswers; ++k) {
      if (header[4 + k] != answer_columns()[k]) {
        fail(ErrorCode::kSchema, "manifest: column ", 5 + k, " should be ",
             answer_columns()[k]);
      }
    }
  }
  for (std::size_t li = 2; li < lines.size(); ++li) {
    const std::string_view line = text::trim(lines[li]);
    if (line.empty()) continue;
    const auto cells = text::split(line, ',');
    if (cells.size() != header.size()) {
      fail(ErrorCode::kSchema, "manifest line ", li + 1, ": expected ", header.size(),
           " fields");
    }
    ManifestEntry e;
    e.galaxy_id = std::string(cells[0]);
    e.path = std::string(cells[1]);
    if (!text::parse_number(cells[2], e.label)) {
      fail(ErrorCode::kSchema, "manifest line ", li + 1, ": bad label");
    }
    if (cells[3] == "train") {
      e.split = Split::kTrain;
    } else if (cells[3] == "test") {
      e.split = Split::kTest;
    } else {
      fail(ErrorCode::kSchema, "manifest line ", li + 1, ": split must be train or test");
    }
    if (targets) {
      std::array<float, kNumAnswers> t{};
      for (std::size_t k = 0; k < kNumAnswers; ++k) {
        if (!text::parse_number(cells[4 + k], t[k]) || !(t[k] >= 0.0f && t[k] <= 1.0f)) {
          fail(ErrorCode::kSchema, "manifest line ", li + 1, ": bad target ",
               answer_columns()[k]);
        }
      }
      e.targets = t;
    }
    m.entries.push_back(std::move(e));
  }
  m.validate();
  return m;
}

DatasetManifest load_manifest(const std::string& path) {
  return parse_manifest(io::read_file(path));
}

void save_manifest(const std::string& path, const DatasetManifest& m) {
  io::write_file_atomic(path, format_manifest(m));
}

}  // namespace morphnet::gz2
