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

#ifndef SBNN_ENGINE_HPP_
#define SBNN_ENGINE_HPP_

#include <atomic>
#include <cstdint>
#include <vector>

#include "sbnn/ir.hpp"
#include "sbnn/manifest.hpp"
#include "sbnn/tensor.hpp"

namespace sbnn {

/// Register-budget tile for the block-sparse 1x1 kernel. The model
/// regs(mp,np) = mp*np/4 + mp/4 + np counts 4-lane vector registers for
/// the output tile, the input column and one weight block row.
struct TileConfig {
  int mp = 4;  // pixel (wh-dimension) tile, multiple of 4
  int np = 4;  // output-channel tile, fixed to the sparse block width
  int registers_used = 0;
};

/// Largest feasible mp under the register budget R, which also minimizes
/// the access-volume objective (M/mp)(N/np)(K*mp + K*np + mp*np) for the
/// fixed np. Throws std::invalid_argument when even mp=4 does not fit.
TileConfig solve_tile_config(std::int64_t M, std::int64_t N, std::int64_t K, int R,
                             int np_fixed = 4);

/// Work/traffic instrumentation. `macs` counts multiply-accumulates that
/// produce stored (non-ghost, non-padding) outputs; `input_loads` counts
/// float loads issued by the sparse depthwise inner loop, including
/// zero-padding lanes, so edge tiles count like interior ones.
struct OpCounters {
  std::atomic<std::uint64_t> macs{0};
  std::atomic<std::uint64_t> input_loads{0};

  void reset() {
    macs = 0;
    input_loads = 0;
  }
};

struct EngineOptions {
  int threads = 1;
  int register_budget = 32;  // armv8-class default
  OpCounters* counters = nullptr;
};

// Dense reference operators. Summation order per output element is fixed:
// ascending channel, then kernel row, then kernel column.
Tensor dense_conv2d(const Tensor& in, const DenseLayerIR& l);
Tensor dense_dwconv3x3(const Tensor& in, const DenseLayerIR& l);
Tensor dense_conv1x1(const Tensor& in, const DenseLayerIR& l);
Tensor dense_fc(const Tensor& in, const DenseLayerIR& l);
Tensor pool(const Tensor& in, const DenseLayerIR& l);
Tensor relu(const Tensor& in);
Tensor relu6(const Tensor& in);
Tensor softmax(const Tensor& in);

/// Block-sparse 1x1 convolution over PlainNHWC input: walks mp x np output
/// tiles and accumulates only the 4-channel input blocks listed in sd.
Tensor sparse_conv1x1(const Tensor& in, const Conv1x1SparseIR& l, const TileConfig& tile,
                      const EngineOptions& opts = {});

/// Pattern-dispatch depthwise 3x3 over GroupedNHWC input packed per
/// l.grouping. Stride 1 computes two output pixels per step, sharing the
/// middle input column between them; stride 2 walks single pixels.
Tensor sparse_dwconv3x3(const Tensor& in, const DwSparseIR& l, int stride, int pad,
                        const EngineOptions& opts = {});

struct LayerPlan {
  bool sparse = false;
  bool grouped_input = false;
  TileConfig tile;
  std::int64_t scratch_floats = 0;
};

struct ExecutionPlan {
  std::vector<LayerPlan> layers;
};

ExecutionPlan plan_model(const ModelIR& ir, const EngineOptions& opts = {});

/// Executes the IR in graph order, packing/unpacking at layout boundaries.
/// Repeated runs are bitwise identical at any thread count.
Tensor run_model(const ModelIR& ir, const Tensor& input, const ExecutionPlan& plan,
                 const EngineOptions& opts = {});

/// Dense executor over a manifest-level model; the oracle the sparse path
/// is checked against.
Tensor run_dense_model(const Model& m, const Tensor& input);

struct FlopCount {
  std::int64_t dense_macs = 0;
  std::int64_t effective_macs = 0;
};

/// Dense MACs from shapes; effective MACs subtract pruned blocks/taps
/// (dense records count their nonzero weights, so masked fallback layers
/// stay exact).
FlopCount flop_count(const ModelIR& ir);
FlopCount layer_flops(const LayerIR& layer);

}  // namespace sbnn

#endif  // SBNN_ENGINE_HPP_
