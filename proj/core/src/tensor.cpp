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

#include "sbnn/tensor.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace sbnn {

int ChannelGrouping::padded_total() const {
  return std::accumulate(groups.begin(), groups.end(), 0);
}

int ChannelGrouping::channel_offset(int i) const {
  int off = 0;
  for (int k = 0; k < i; ++k) off += groups[k];
  return off;
}

ChannelGrouping partition_channels(int c, int preferred) {
  if (c < 1) throw std::invalid_argument("partition_channels: c must be >= 1");
  if (preferred != 16 && preferred != 8 && preferred != 4)
    throw std::invalid_argument("partition_channels: preferred must be 4, 8 or 16");

  ChannelGrouping g;
  g.total = c;
  int target = (c + 3) / 4 * 4;
  while (target >= preferred) {
    g.groups.push_back(preferred);
    target -= preferred;
  }
  // remainder is 0, 4, 8 or 12 storage channels
  if (target >= 8) {
    g.groups.push_back(8);
    target -= 8;
  }
  if (target == 4) g.groups.push_back(4);
  return g;
}

Tensor Tensor::plain(int n, int h, int w, int c) {
  Tensor t;
  t.shape = {n, h, w, c};
  t.layout = Layout::PlainNHWC;
  t.data.assign(static_cast<size_t>(t.shape.elements()), 0.0f);
  return t;
}

std::int64_t Tensor::index(int n, int y, int x, int ch) const {
  if (layout != Layout::PlainNHWC)
    throw std::logic_error("Tensor::index: grouped tensors are not directly indexable");
  return ((static_cast<std::int64_t>(n) * shape.h + y) * shape.w + x) * shape.c + ch;
}

WeightTensor WeightTensor::zeros(int oc, int kh, int kw, int ic) {
  WeightTensor w;
  w.oc = oc;
  w.kh = kh;
  w.kw = kw;
  w.ic = ic;
  w.data.assign(static_cast<size_t>(w.count()), 0.0f);
  return w;
}

namespace {

Tensor pack_impl(const Tensor& t, const ChannelGrouping& grouping) {
  if (t.layout != Layout::PlainNHWC)
    throw std::invalid_argument("pack_grouped: input must be PlainNHWC");
  if (grouping.total != t.shape.c)
    throw std::invalid_argument("pack_grouped: grouping.total != tensor channels");
  const int padded = grouping.padded_total();
  if (padded < t.shape.c)
    throw std::invalid_argument("pack_grouped: grouping does not cover all channels");

  Tensor out;
  out.shape = t.shape;
  out.layout = Layout::GroupedNHWC;
  out.grouping = grouping;
  const std::int64_t pixels = static_cast<std::int64_t>(t.shape.h) * t.shape.w;
  out.data.assign(static_cast<size_t>(t.shape.n * pixels * padded), 0.0f);

  for (int n = 0; n < t.shape.n; ++n) {
    const float* src = t.data.data() + n * pixels * t.shape.c;
    float* dst = out.data.data() + n * pixels * padded;
    int cbase = 0;
    for (int gi = 0; gi < grouping.group_count(); ++gi) {
      const int gw = grouping.groups[gi];
      float* gdst = dst + static_cast<std::int64_t>(cbase) * pixels;
      const int valid = std::max(0, std::min(gw, t.shape.c - cbase));
      for (std::int64_t p = 0; p < pixels; ++p) {
        const float* sp = src + p * t.shape.c + cbase;
        float* dp = gdst + p * gw;
        for (int l = 0; l < valid; ++l) dp[l] = sp[l];
      }
      cbase += gw;
    }
  }
  return out;
}

}  // namespace

Tensor pack_grouped(const Tensor& t, int g) {
  if (g != 4 && g != 8 && g != 16)
    throw std::invalid_argument("pack_grouped: group width must be 4, 8 or 16");
  ChannelGrouping grouping;
  grouping.total = t.shape.c;
  const int ngroups = (t.shape.c + g - 1) / g;
  grouping.groups.assign(static_cast<size_t>(std::max(1, ngroups)), g);
  return pack_impl(t, grouping);
}

Tensor pack_grouped(const Tensor& t, const ChannelGrouping& grouping) {
  return pack_impl(t, grouping);
}

Tensor unpack_grouped(const Tensor& t, int original_c) {
  if (t.layout != Layout::GroupedNHWC)
    throw std::invalid_argument("unpack_grouped: input must be GroupedNHWC");
  const int padded = t.grouping.padded_total();
  if (original_c > padded)
    throw std::invalid_argument("unpack_grouped: original_c " + std::to_string(original_c) +
                                " exceeds padded width " + std::to_string(padded));

  Tensor out = Tensor::plain(t.shape.n, t.shape.h, t.shape.w, original_c);
  const std::int64_t pixels = static_cast<std::int64_t>(t.shape.h) * t.shape.w;
  for (int n = 0; n < t.shape.n; ++n) {
    const float* src = t.data.data() + n * pixels * padded;
    float* dst = out.data.data() + n * pixels * original_c;
    int cbase = 0;
    for (int gi = 0; gi < t.grouping.group_count(); ++gi) {
      const int gw = t.grouping.groups[gi];
      const float* gsrc = src + static_cast<std::int64_t>(cbase) * pixels;
      const int valid = std::max(0, std::min(gw, original_c - cbase));
      for (std::int64_t p = 0; p < pixels; ++p) {
        const float* sp = gsrc + p * gw;
        float* dp = dst + p * original_c + cbase;
        for (int l = 0; l < valid; ++l) dp[l] = sp[l];
      }
      cbase += gw;
    }
  }
  return out;
}

}  // namespace sbnn
