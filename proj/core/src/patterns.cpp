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

#include "sbnn/patterns.hpp"

#include <bit>
#include <cmath>
#include <stdexcept>

namespace sbnn {

int KernelPattern::kept_count() const { return std::popcount(mask); }

namespace {

PatternCatalog build_dw_catalog() {
  PatternCatalog cat;
  cat.kind = CatalogKind::Dw39;
  cat.dense_code = kDwDenseCode;
  for (int code = 0; code < 8; ++code) {
    KernelPattern p;
    p.code = code;
    p.mask = 0x1FF;  // all 9 kept
    for (int r = 0; r < 3; ++r) {
      const int removed_col = ((code >> r) & 1) ? 2 : 0;
      p.mask = static_cast<std::uint16_t>(p.mask & ~(1u << (r * 3 + removed_col)));
    }
    cat.patterns.push_back(p);
  }
  return cat;
}

PatternCatalog build_conv59_catalog() {
  PatternCatalog cat;
  cat.kind = CatalogKind::Conv59;
  // center cell index 4; choose 3 of the remaining 8 cells, lexicographic
  int code = 0;
  for (int a = 0; a < 9; ++a) {
    if (a == 4) continue;
    for (int b = a + 1; b < 9; ++b) {
      if (b == 4) continue;
      for (int c = b + 1; c < 9; ++c) {
        if (c == 4) continue;
        KernelPattern p;
        p.code = code++;
        p.mask = static_cast<std::uint16_t>((1u << 4) | (1u << a) | (1u << b) | (1u << c));
        cat.patterns.push_back(p);
      }
    }
  }
  return cat;
}

}  // namespace

const PatternCatalog& dw_pattern_catalog() {
  static const PatternCatalog cat = build_dw_catalog();
  return cat;
}

const PatternCatalog& conv59_pattern_catalog() {
  static const PatternCatalog cat = build_conv59_catalog();
  return cat;
}

int best_pattern_for_group(std::span<const float> kernels, const PatternCatalog& catalog) {
  if (kernels.empty() || kernels.size() % 9 != 0)
    throw std::invalid_argument("best_pattern_for_group: need k*9 weights, k >= 1");
  if (catalog.patterns.empty())
    throw std::invalid_argument("best_pattern_for_group: empty catalog");

  // Per-cell |w| totals over the stack; every pattern score is then a
  // masked sum over 9 values regardless of group size.
  double cell[9] = {};
  const size_t k = kernels.size() / 9;
  for (size_t i = 0; i < k; ++i)
    for (int t = 0; t < 9; ++t) cell[t] += std::fabs(kernels[i * 9 + t]);

  int best_code = catalog.patterns.front().code;
  double best_score = -1.0;
  for (const KernelPattern& p : catalog.patterns) {
    double score = 0.0;
    for (int t = 0; t < 9; ++t)
      if ((p.mask >> t) & 1u) score += cell[t];
    if (score > best_score) {
      best_score = score;
      best_code = p.code;
    }
  }
  return best_code;
}

}  // namespace sbnn
