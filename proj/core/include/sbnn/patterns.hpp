// Copyright 2026 The sbnn Authors. All Rights Reserved.
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

#ifndef SBNN_PATTERNS_HPP_
#define SBNN_PATTERNS_HPP_

#include <cstdint>
#include <span>
#include <vector>

namespace sbnn {

/// 3x3 keep-mask. Bit (r*3 + c) of `mask` is set when the tap is kept.
struct KernelPattern {
  std::uint16_t mask = 0;
  int code = 0;

  bool kept(int r, int c) const { return (mask >> (r * 3 + c)) & 1u; }
  int kept_count() const;
};

enum class CatalogKind { Dw39, Conv59 };

/// Depthwise groups whose pattern code equals this value stay dense.
inline constexpr int kDwDenseCode = 8;

struct PatternCatalog {
  CatalogKind kind;
  std::vector<KernelPattern> patterns;  // indexed by code
  int dense_code = -1;                  // kDwDenseCode for Dw39, -1 otherwise

  int size() const { return static_cast<int>(patterns.size()); }
  const KernelPattern& at(int code) const { return patterns.at(static_cast<size_t>(code)); }
};

/// The 8 depthwise 3:9 patterns. Code i removes, in each kernel row r, the
/// first column when bit r of i is 0 and the third column when it is 1;
/// the middle column is always kept. Code 8 is the reserved full-ones
/// (dense) pattern and is not part of `patterns`' argmax candidates.
const PatternCatalog& dw_pattern_catalog();

/// The 56 Conv3x3 5:9 patterns: center tap plus 3 of the 8 remaining
/// positions, ordered lexicographically by the kept non-center cells.
const PatternCatalog& conv59_pattern_catalog();

/// Picks the catalog code maximizing the kept l1-norm summed over a stack
/// of kernels (kernels.size() == k*9, each kernel row-major). Ties go to
/// the lowest code. The dense code is never a candidate.
int best_pattern_for_group(std::span<const float> kernels, const PatternCatalog& catalog);

}  // namespace sbnn

#endif  // SBNN_PATTERNS_HPP_
