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

#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "sbnn/patterns.hpp"
#include "testutil.hpp"

using namespace sbnn;

namespace {

// brute-force score of one code over a kernel stack
double score_code(const std::vector<float>& kernels, const KernelPattern& p) {
  double s = 0.0;
  for (size_t k = 0; k < kernels.size() / 9; ++k)
    for (int t = 0; t < 9; ++t)
      if (p.kept(t / 3, t % 3)) s += std::fabs(kernels[k * 9 + t]);
  return s;
}

int brute_force_best(const std::vector<float>& kernels, const PatternCatalog& cat) {
  int best = -1;
  double best_score = -1.0;
  for (const KernelPattern& p : cat.patterns) {
    const double s = score_code(kernels, p);
    if (s > best_score) {
      best_score = s;
      best = p.code;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("dw catalog has 8 patterns plus the reserved dense code") {
  const PatternCatalog& cat = dw_pattern_catalog();
  CHECK(cat.size() == 8);
  CHECK(cat.dense_code == kDwDenseCode);
  CHECK(kDwDenseCode == 8);
}

TEST_CASE("every dw pattern keeps 6 of 9 taps with the middle column intact") {
  const PatternCatalog& cat = dw_pattern_catalog();
  std::set<std::uint16_t> masks;
  for (const KernelPattern& p : cat.patterns) {
    CHECK(p.kept_count() == 6);
    for (int r = 0; r < 3; ++r) {
      CHECK(p.kept(r, 1));
      CHECK((p.kept(r, 0) != p.kept(r, 2)));  // exactly one side column per row
    }
    masks.insert(p.mask);
  }
  CHECK(masks.size() == 8);
}

TEST_CASE("dw code 0 removes the first column everywhere") {
  const KernelPattern& p = dw_pattern_catalog().at(0);
  for (int r = 0; r < 3; ++r) {
    CHECK(!p.kept(r, 0));
    CHECK(p.kept(r, 1));
    CHECK(p.kept(r, 2));
  }
  // bit r of the code moves the removed column of row r to the third column
  for (int code = 0; code < 8; ++code) {
    const KernelPattern& q = dw_pattern_catalog().at(code);
    for (int r = 0; r < 3; ++r) {
      const int removed = ((code >> r) & 1) ? 2 : 0;
      CHECK(!q.kept(r, removed));
    }
  }
}

TEST_CASE("conv59 catalog is the 56 center-keeping 4-subsets, lexicographic") {
  const PatternCatalog& cat = conv59_pattern_catalog();
  CHECK(cat.size() == 56);

  // independent count: 4-subsets of 9 cells that contain the center
  int count = 0;
  for (int bits = 0; bits < 512; ++bits)
    if (__builtin_popcount(bits) == 4 && (bits & (1 << 4))) ++count;
  CHECK(count == 56);

  std::set<std::uint16_t> seen;
  std::vector<std::vector<int>> kept_tuples;
  for (const KernelPattern& p : cat.patterns) {
    CHECK(p.kept_count() == 4);
    CHECK(p.kept(1, 1));
    seen.insert(p.mask);
    std::vector<int> tup;
    for (int t = 0; t < 9; ++t)
      if (t != 4 && p.kept(t / 3, t % 3)) tup.push_back(t);
    kept_tuples.push_back(tup);
  }
  CHECK(seen.size() == 56);
  CHECK(std::is_sorted(kept_tuples.begin(), kept_tuples.end()));
  CHECK(kept_tuples.front() == std::vector<int>{0, 1, 2});
  CHECK(kept_tuples.back() == std::vector<int>{6, 7, 8});
}

TEST_CASE("best_pattern_for_group tie-breaks to the lowest code") {
  const std::vector<float> zeros(9, 0.0f);
  CHECK(best_pattern_for_group(zeros, dw_pattern_catalog()) == 0);
  CHECK(best_pattern_for_group(zeros, conv59_pattern_catalog()) == 0);
}

TEST_CASE("best_pattern_for_group prefers dropping the empty first column") {
  // large values in column 2, zeros in column 0: removing column 0 in all
  // rows (code 0) loses nothing
  std::vector<float> k(9, 0.0f);
  for (int r = 0; r < 3; ++r) {
    k[static_cast<size_t>(r * 3 + 1)] = 1.0f;
    k[static_cast<size_t>(r * 3 + 2)] = 5.0f;
  }
  CHECK(best_pattern_for_group(k, dw_pattern_catalog()) == 0);
}

TEST_CASE("best_pattern_for_group matches brute force on random groups") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const auto& cat = trial % 2 == 0 ? dw_pattern_catalog() : conv59_pattern_catalog();
    const std::vector<float> group = test::random_floats(rng, 16 * 9);
    CHECK(best_pattern_for_group(group, cat) == brute_force_best(group, cat));
  }
}

TEST_CASE("best_pattern_for_group is invariant to kernel order and positive scaling") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<float> group = test::random_floats(rng, 8 * 9);
    const int base = best_pattern_for_group(group, dw_pattern_catalog());

    std::vector<float> shuffled = group;
    // rotate whole kernels
    std::rotate(shuffled.begin(), shuffled.begin() + 9 * 3, shuffled.end());
    CHECK(best_pattern_for_group(shuffled, dw_pattern_catalog()) == base);

    std::vector<float> scaled = group;
    for (float& v : scaled) v *= 3.5f;
    CHECK(best_pattern_for_group(scaled, dw_pattern_catalog()) == base);
  }
}
