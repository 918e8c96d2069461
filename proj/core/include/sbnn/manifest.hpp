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

#ifndef SBNN_MANIFEST_HPP_
#define SBNN_MANIFEST_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "sbnn/tensor.hpp"

namespace sbnn {

enum class OpKind {
  Conv2d,
  DwConv3x3,
  Conv1x1,
  Fc,
  Pool,
  Activation,
  Softmax,
  Concat,  // parseable for graph-rejection paths; never executable
};

enum class ActKind { None, Relu, Relu6 };
enum class PoolKind { None, Avg, Max };

const char* to_string(OpKind op);
const char* to_string(ActKind a);
OpKind op_kind_from_string(const std::string& s);
ActKind act_kind_from_string(const std::string& s);

/// One record of the model manifest. Weighted ops reference blobs by file
/// name; in-memory models keep the tensors in Model::weights instead.
struct LayerDesc {
  std::string name;
  OpKind op = OpKind::Conv2d;
  Shape in_shape;
  Shape out_shape;
  int stride = 1;
  int pad = 0;
  ActKind act = ActKind::None;  // fused post-activation
  PoolKind pool_kind = PoolKind::None;
  int pool_kh = 0;
  int pool_kw = 0;
  std::string weight_blob;
  std::string bias_blob;
  bool sparse_eligible = true;

  bool has_weights() const {
    return op == OpKind::Conv2d || op == OpKind::DwConv3x3 || op == OpKind::Conv1x1 ||
           op == OpKind::Fc;
  }
};

/// Dense model: a chain of layers (layer i feeds layer i+1) plus weights.
/// weights[i]/biases[i] are empty for weightless layers.
struct Model {
  std::string name;
  std::vector<LayerDesc> layers;
  std::vector<WeightTensor> weights;
  std::vector<std::vector<float>> biases;

  int layer_count() const { return static_cast<int>(layers.size()); }
  Shape input_shape() const;
  Shape output_shape() const;
  /// Shape chaining and weight/blob size checks; returns all problems.
  std::vector<std::string> check() const;
};

/// Reads manifest JSON; blobs resolve against blob_dir (manifest's
/// directory when empty). Throws std::runtime_error on I/O failure and
/// std::invalid_argument on schema violations.
Model load_model(const std::filesystem::path& manifest_path,
                 const std::filesystem::path& blob_dir = {});

/// Writes manifest.json plus one raw little-endian float32 blob per
/// weighted layer into dir.
void save_model(const Model& m, const std::filesystem::path& dir);

std::vector<float> load_blob(const std::filesystem::path& path);
void save_blob(const std::filesystem::path& path, const std::vector<float>& v);

/// MobileNet-v1 (1.0, 224) with seeded random weights: Conv3x3/s2, 13
/// depthwise-separable blocks, global average pool, fc-1000, softmax.
Model mobilenet_v1_model(std::uint64_t seed);

/// Small conv1x1/dw chain used by tests and docs examples.
Model tiny_model(std::uint64_t seed);

}  // namespace sbnn

#endif  // SBNN_MANIFEST_HPP_
