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

// Procedurally drawn stand-ins for the seven morphology classes, with
// catalog rows whose fractions satisfy the matching selection rule.

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>

#include "gz2/catalog.hpp"
#include "gz2/image.hpp"
#include "gz2/manifest.hpp"

namespace morphnet::gz2 {

/// 0 round disk, 1 ellipse, 2 cigar, 3 edge-on streak, 4 barred two-arm
/// spiral, 5 two-arm spiral, 6 irregular blobs.
ByteImage render_synthetic(int label, std::size_t size, Rng& rng);

/// Per-task answer fractions typical of `label` with a little jitter.
std::array<double, kNumAnswers> synthetic_fractions(int label, Rng& rng);

struct SyntheticOptions {
  std::size_t count = 200;
  std::size_t size = 32;
  std::uint64_t seed = 0;
};

struct SyntheticDataset {
  std::vector<CatalogRow> catalog;  // tree-weighted fractions
  DatasetManifest manifest;         // 9:1 split, targets attached
};

/// Labels cycle 0..6. Writes `<dir>/<id>.png`, `<dir>/catalog.csv` and
/// `<dir>/manifest.csv`; manifest paths are file names relative to `dir`.
SyntheticDataset make_synthetic_dataset(const std::string& dir, const SyntheticOptions& opt);

}  // namespace morphnet::gz2
