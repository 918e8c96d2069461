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

#ifndef SBNN_IR_HPP_
#define SBNN_IR_HPP_

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "sbnn/manifest.hpp"
#include "sbnn/pruner.hpp"
#include "sbnn/tensor.hpp"

namespace sbnn {

class IrError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uncompressed layer record; also the fallback for pruned Conv3x3, which
/// executes densely over its mask-expanded weights.
struct DenseLayerIR {
  std::string name;
  OpKind op = OpKind::Conv2d;
  Shape in_shape;
  Shape out_shape;
  int stride = 1;
  int pad = 0;
  ActKind act = ActKind::None;
  PoolKind pool_kind = PoolKind::None;
  int pool_kh = 0;
  int pool_kw = 0;
  WeightTensor weight;       // empty for weightless ops
  std::vector<float> bias;
};

/// Block-sparse 1x1 convolution: per output-block row, `sd` lists the kept
/// input-block start indices (ascending) and `packed` holds the matching
/// 4x4 blocks (input-lane-major: packed[16*b + 4*i + o]).
struct Conv1x1SparseIR {
  std::string name;
  Shape in_shape;
  Shape out_shape;
  int oc = 0;
  int ic = 0;
  int go = 4;
  int gi = 4;
  ActKind act = ActKind::None;
  std::vector<std::vector<std::uint32_t>> sd;
  std::vector<float> packed;
  std::vector<float> bias;

  std::int64_t kept_blocks() const;
};

/// Pattern-sparse depthwise 3x3: one code per channel group (0..7 sparse,
/// 8 dense), weights packed tap-major within each group
/// (packed[group][tap][lane], 6 taps for sparse codes, 9 for dense).
struct DwSparseIR {
  std::string name;
  Shape in_shape;
  Shape out_shape;
  int stride = 1;
  int pad = 1;
  ActKind act = ActKind::None;
  ChannelGrouping grouping;
  std::vector<std::uint32_t> codes;
  std::vector<float> packed;
  std::vector<float> bias;
};

using LayerIR = std::variant<DenseLayerIR, Conv1x1SparseIR, DwSparseIR>;

struct ModelIR {
  std::uint32_t version = 1;
  std::string input_name = "input";
  std::string output_name = "output";
  Shape input_shape;
  Shape output_shape;
  std::vector<LayerIR> layers;

  int layer_count() const { return static_cast<int>(layers.size()); }
};

const std::string& layer_ir_name(const LayerIR& l);

/// Packs a pruned model into the IR. Sparse layers keep only their kept
/// blocks/taps; decompressing reproduces W (.) M bitwise.
ModelIR convert(const Model& m, const std::vector<LayerPruneResult>& results);

/// Convenience: convert with everything dense.
ModelIR convert_dense(const Model& m);

/// Bit-exact container: magic "SBNN", u32 version, little-endian u32/f32
/// fields, per-layer TLV records, trailing CRC32.
std::vector<std::uint8_t> serialize(const ModelIR& ir);

/// Parses and validates; throws IrError naming the offending layer on
/// structural violations, truncation or checksum mismatch.
ModelIR deserialize(const std::vector<std::uint8_t>& bytes);

void save_ir(const ModelIR& ir, const std::filesystem::path& path);
ModelIR load_ir(const std::filesystem::path& path);

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
};

/// Checks shape chaining, sd bounds, code ranges and blob lengths;
/// collects every violation instead of stopping at the first.
ValidationReport validate(const ModelIR& ir);

WeightTensor decompress_conv1x1(const Conv1x1SparseIR& l);
WeightTensor decompress_dw(const DwSparseIR& l);

/// Dense model with mask-expanded weights; the reference executor over it
/// is the oracle for the sparse engine.
Model decompress_to_dense_model(const ModelIR& ir);

}  // namespace sbnn

#endif  // SBNN_IR_HPP_
