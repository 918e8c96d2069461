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

#include <numeric>

#include "doctest.h"
#include "sbnn/tensor.hpp"
#include "testutil.hpp"

using namespace sbnn;

namespace {

// spec formula applied one element at a time, uniform group width
Tensor scratch_pack(const Tensor& t, int g) {
  const int padded = (t.shape.c + g - 1) / g * g;
  const std::int64_t pixels = static_cast<std::int64_t>(t.shape.h) * t.shape.w;
  Tensor out;
  out.shape = t.shape;
  out.layout = Layout::GroupedNHWC;
  out.grouping.total = t.shape.c;
  out.grouping.groups.assign(static_cast<size_t>(padded / g), g);
  out.data.assign(static_cast<size_t>(t.shape.n * pixels * padded), 0.0f);
  for (int n = 0; n < t.shape.n; ++n)
    for (int y = 0; y < t.shape.h; ++y)
      for (int x = 0; x < t.shape.w; ++x)
        for (int c = 0; c < t.shape.c; ++c) {
          const std::int64_t pix = static_cast<std::int64_t>(y) * t.shape.w + x;
          const std::int64_t off = ((c / g) * pixels + pix) * g + c % g;
          out.data[static_cast<size_t>(n * pixels * padded + off)] = t.at(n, y, x, c);
        }
  return out;
}

// smallest {16,8,4} cover of ceil(c/4)*4, by exhaustive enumeration
int min_cover_groups(int c) {
  const int target = (c + 3) / 4 * 4;
  int best = 1 << 30;
  for (int n16 = 0; n16 * 16 <= target; ++n16)
    for (int n8 = 0; n16 * 16 + n8 * 8 <= target; ++n8) {
      const int rest = target - n16 * 16 - n8 * 8;
      if (rest % 4 == 0) best = std::min(best, n16 + n8 + rest / 4);
    }
  return best;
}

}  // namespace

TEST_CASE("pack_grouped single 16-wide group is the identity") {
  std::mt19937_64 rng(1);
  Tensor t = test::random_tensor(rng, 1, 1, 1, 16);
  const Tensor p = pack_grouped(t, 16);
  CHECK(p.data == t.data);
  CHECK(p.layout == Layout::GroupedNHWC);
}

TEST_CASE("pack_grouped with c == g keeps plain NHWC order") {
  std::mt19937_64 rng(2);
  Tensor t = test::random_tensor(rng, 1, 2, 2, 4);
  for (size_t i = 0; i < t.data.size(); ++i) t.data[i] = static_cast<float>(i);
  const Tensor p = pack_grouped(t, 4);
  CHECK(p.data == t.data);
}

TEST_CASE("pack_grouped matches the scratch index-by-index repacker") {
  std::mt19937_64 rng(3);
  for (auto [n, h, w, c, g] : {std::array<int, 5>{1, 1, 2, 8, 4},
                               std::array<int, 5>{1, 3, 5, 20, 8},
                               std::array<int, 5>{2, 2, 2, 7, 4},
                               std::array<int, 5>{1, 4, 3, 33, 16}}) {
    const Tensor t = test::random_tensor(rng, n, h, w, c);
    const Tensor a = pack_grouped(t, g);
    const Tensor b = scratch_pack(t, g);
    CHECK(a.data == b.data);
    const Tensor back = unpack_grouped(a, c);
    CHECK(back.data == t.data);
  }
}

TEST_CASE("pack/unpack round-trip is the identity (property)") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> cd(1, 1024), sd(1, 6);
  const int gs[3] = {4, 8, 16};
  for (int trial = 0; trial < 50; ++trial) {
    const int c = cd(rng);
    const int g = gs[trial % 3];
    const Tensor t = test::random_tensor(rng, 1, sd(rng), sd(rng), c);
    const Tensor back = unpack_grouped(pack_grouped(t, g), c);
    REQUIRE(back.data == t.data);
  }
}

TEST_CASE("pack_grouped pads c=5 to 8 and unpack restores 5 channels") {
  std::mt19937_64 rng(5);
  const Tensor t = test::random_tensor(rng, 1, 2, 3, 5);
  const Tensor p = pack_grouped(t, 4);
  CHECK(p.grouping.padded_total() == 8);
  // padding lanes are zero-filled
  const Tensor full = unpack_grouped(p, 8);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 3; ++x)
      for (int c = 5; c < 8; ++c) CHECK(full.at(0, y, x, c) == 0.0f);
  CHECK(unpack_grouped(p, 5).data == t.data);
}

TEST_CASE("single-element tensor round-trips") {
  Tensor t = Tensor::plain(1, 1, 1, 1);
  t.data[0] = 42.0f;
  CHECK(unpack_grouped(pack_grouped(t, 4), 1).data == t.data);
}

TEST_CASE("pack_grouped rejects bad group widths") {
  const Tensor t = Tensor::plain(1, 1, 1, 8);
  CHECK_THROWS_AS(pack_grouped(t, 3), std::invalid_argument);
  CHECK_THROWS_AS(pack_grouped(t, 32), std::invalid_argument);
}

TEST_CASE("unpack_grouped rejects original_c beyond the padded width") {
  const Tensor p = pack_grouped(Tensor::plain(1, 1, 1, 8), 8);
  CHECK_THROWS_AS(unpack_grouped(p, 9), std::invalid_argument);
}

TEST_CASE("partition_channels frozen examples") {
  CHECK(partition_channels(16).groups == std::vector<int>{16});
  CHECK(partition_channels(40).groups == std::vector<int>{16, 16, 8});
  CHECK(partition_channels(5).groups == std::vector<int>{8});
  CHECK(partition_channels(5).padded_total() - 5 == 3);  // 3 padded channels
  CHECK_THROWS_AS(partition_channels(0), std::invalid_argument);
}

TEST_CASE("partition_channels covers ceil(c/4)*4 with the fewest groups (property)") {
  for (int c = 1; c <= 300; ++c) {
    const ChannelGrouping g = partition_channels(c);
    const int target = (c + 3) / 4 * 4;
    CHECK(g.padded_total() == target);
    CHECK(g.group_count() == min_cover_groups(c));
    for (int w : g.groups) CHECK((w == 16 || w == 8 || w == 4));
    CHECK(std::is_sorted(g.groups.rbegin(), g.groups.rend()));
    CHECK(target - c <= 3);
  }
}
