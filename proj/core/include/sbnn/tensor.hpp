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

#ifndef SBNN_TENSOR_HPP_
#define SBNN_TENSOR_HPP_

#include <cstdint>
#include <vector>

namespace sbnn {

/// NHWC activation shape. Batch is supported by looping; the kernels'
/// fast paths are written for n == 1.
struct Shape {
  int n = 0;
  int h = 0;
  int w = 0;
  int c = 0;

  std::int64_t elements() const {
    return static_cast<std::int64_t>(n) * h * w * c;
  }
  bool operator==(const Shape&) const = default;
};

/// Ordered channel-group widths covering a channel count. Widths are 16, 8
/// or 4, non-increasing; the sum equals `total` rounded up to a multiple
/// of 4 when produced by partition_channels. pack_grouped with a uniform
/// width may also build groupings whose sum is a multiple of that width.
struct ChannelGrouping {
  std::vector<int> groups;
  int total = 0;  // valid (unpadded) channel count

  int group_count() const { return static_cast<int>(groups.size()); }
  int padded_total() const;
  /// First storage channel of group i.
  int channel_offset(int i) const;
  bool operator==(const ChannelGrouping&) const = default;
};

/// Splits `c` channels into the fewest {16,8,4} groups covering
/// ceil(c/4)*4 storage channels: `preferred`-wide groups first, then one
/// 8 and/or one 4 for the remainder. At most 3 channels are padding.
ChannelGrouping partition_channels(int c, int preferred = 16);

enum class Layout {
  PlainNHWC,    // data[((n*h + y)*w + x)*c + ch]
  GroupedNHWC,  // channel groups are contiguous pixel-major blocks
};

/// Dense float32 activation tensor. Grouped tensors keep the logical
/// channel count in shape.c and pad storage per `grouping`.
struct Tensor {
  Shape shape;
  Layout layout = Layout::PlainNHWC;
  ChannelGrouping grouping;  // meaningful only for GroupedNHWC
  std::vector<float> data;

  static Tensor plain(int n, int h, int w, int c);

  int storage_channels() const {
    return layout == Layout::PlainNHWC ? shape.c : grouping.padded_total();
  }
  std::int64_t index(int n, int y, int x, int ch) const;  // PlainNHWC only
  float at(int n, int y, int x, int ch) const { return data[index(n, y, x, ch)]; }
  float& at(int n, int y, int x, int ch) { return data[index(n, y, x, ch)]; }
};

/// Convolution weights, stored oc-major as (oc, kh, kw, ic).
/// Depthwise weights have ic == 1 and oc equal to the channel count.
struct WeightTensor {
  int oc = 0;
  int kh = 0;
  int kw = 0;
  int ic = 0;
  std::vector<float> data;

  static WeightTensor zeros(int oc, int kh, int kw, int ic);

  std::int64_t count() const {
    return static_cast<std::int64_t>(oc) * kh * kw * ic;
  }
  std::int64_t index(int o, int r, int s, int i) const {
    return ((static_cast<std::int64_t>(o) * kh + r) * kw + s) * ic + i;
  }
  float at(int o, int r, int s, int i) const { return data[index(o, r, s, i)]; }
  float& at(int o, int r, int s, int i) { return data[index(o, r, s, i)]; }
};

/// Packs a plain tensor into uniform groups of width g (g in {4,8,16}).
/// Element (n,y,x,ch) lands at group ch/g, pixel-major, lane ch%g;
/// channels beyond shape.c are zero-filled.
Tensor pack_grouped(const Tensor& t, int g);

/// Packs per an explicit grouping (mixed 16/8/4 widths), the layout the
/// sparse depthwise kernels consume.
Tensor pack_grouped(const Tensor& t, const ChannelGrouping& grouping);

/// Inverse of pack_grouped; drops zero-padding channels beyond original_c.
Tensor unpack_grouped(const Tensor& t, int original_c);

}  // namespace sbnn

#endif  // SBNN_TENSOR_HPP_
