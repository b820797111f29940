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
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gz2/curation.hpp"

namespace morphnet::gz2 {

enum class Split { kTrain, kTest };

std::string_view split_name(Split s);

struct ManifestEntry {
  std::string galaxy_id;
  std::string path;
  /// 0..6, or -1 for regression-only entries (which must carry targets).
  int label = 0;
  Split split = Split::kTrain;
  /// Optional 37 regression targets.
  std::optional<std::array<float, kNumAnswers>> targets;

  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::uint64_t seed = 0;

  /// counts[label][split]
  std::array<std::array<std::size_t, 2>, kNumClasses> counts() const;
  std::size_t size(Split s) const;
  bool has_targets() const;
  void validate() const;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

struct SplitRatio {
  std::size_t train = 9;
  std::size_t test = 1;
};

/// Test share of a class of size n: max(1, floor(n * test / (train + test))).
std::size_t test_count(std::size_t n, SplitRatio ratio);

/// Per-class seeded shuffle, then the first test_count() go to test. Paths
/// are `<image_dir>/<galaxy_id>.<ext>`. Classes with fewer than two samples
/// are an error.
DatasetManifest split_dataset(const std::vector<LabeledSample>& samples, SplitRatio ratio,
                              std::uint64_t seed, const std::string& image_dir = "",
                              const std::string& ext = "jpg");

/// Version line, then `galaxy_id,path,label,split[,Class1.1,...]`.
std::string format_manifest(const DatasetManifest& m);
DatasetManifest parse_manifest(std::string_view text);
DatasetManifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const DatasetManifest& m);

}  // namespace morphnet::gz2
