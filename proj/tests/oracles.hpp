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


// Reference values and oracles shared by unit and acceptance tests.

#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace morphnet::testing {

/// Label from a hand-written per-row reading of the seven selection rules:
/// the class, -1 for no match, -2 for several matches.
inline int brute_force_label(const std::array<double, 37>& f) {
  // flat column positions of the standard tree
  constexpr std::size_t c1_1 = 0, c1_2 = 1, c2_1 = 3, c2_2 = 4, c3_1 = 5, c3_2 = 6, c4_1 = 7,
                        c6_1 = 13, c6_2 = 14, c7_1 = 15, c7_2 = 16, c7_3 = 17, c8_3 = 20;
  std::vector<int> hits;
  const bool smooth = f[c1_1] >= 0.469 && f[c6_2] >= 0.5;
  if (smooth && f[c7_1] >= 0.5) hits.push_back(0);
  if (smooth && f[c7_2] >= 0.5) hits.push_back(1);
  if (smooth && f[c7_3] >= 0.5) hits.push_back(2);
  if (f[c1_2] >= 0.430 && f[c2_1] >= 0.602 && f[c6_2] >= 0.5) hits.push_back(3);
  const bool face_on = f[c1_2] >= 0.430 && f[c2_2] >= 0.715 && f[c4_1] >= 0.619;
  if (face_on && f[c3_1] >= 0.715) hits.push_back(4);
  if (face_on && f[c3_2] >= 0.715) hits.push_back(5);
  double merger = 0;
  for (std::size_t k = 0; k < 5; ++k) merger += f[c8_3 + k];
  if (f[c6_1] >= 0.420 && merger >= 0.5) hits.push_back(6);
  if (hits.size() == 1) return hits[0];
  return hits.empty() ? -1 : -2;
}

/// Best classifier's test confusion matrix, rows are true classes.
inline std::vector<std::uint64_t> published_confusion() {
  return {784, 22, 0,  0,   0,  1,   3,    //
          15,  758, 2, 0,   0,  2,   1,    //
          0,   5,  41, 11,  0,  0,   0,    //
          0,   3,  22, 344, 0,  2,   7,    //
          0,   0,  0,  1,   70, 10,  1,    //
          8,   8,  1,  0,   1,  304, 6,    //
          6,   8,  0,  0,   3,  14,  125};
}

// Reported per-class scores of the same classifier, two decimals.
inline constexpr std::array<double, 7> kPublishedPrecision{0.96, 0.94, 0.62, 0.97, 0.95, 0.91, 0.87};
inline constexpr std::array<double, 7> kPublishedRecall{0.97, 0.97, 0.72, 0.91, 0.85, 0.93, 0.80};
inline constexpr std::array<double, 7> kPublishedF1{0.97, 0.96, 0.67, 0.94, 0.90, 0.92, 0.84};

// Clean-sample class sizes and the reported 9:1 split.
inline constexpr std::array<std::size_t, 7> kCleanClassSizes{8107, 7782, 578, 3780, 827, 3307, 1560};
inline constexpr std::array<std::size_t, 7> kReportedTrain{7297, 7004, 521, 3402, 745, 2979, 1404};
inline constexpr std::array<std::size_t, 7> kReportedTest{810, 778, 57, 378, 82, 328, 156};

}  // namespace morphnet::testing
