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

#ifndef SBNN_PRUNER_HPP_
#define SBNN_PRUNER_HPP_

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sbnn/manifest.hpp"
#include "sbnn/patterns.hpp"
#include "sbnn/tensor.hpp"

namespace sbnn {

/// Keep/remove grid over (output-group, input-group) kernel blocks.
struct BlockMask {
  int rows = 0;  // ceil(oc/go)
  int cols = 0;  // ceil(ic/gi)
  int go = 0;
  int gi = 0;
  std::vector<std::uint8_t> keep;  // rows*cols, row-major

  bool kept(int r, int c) const { return keep[static_cast<size_t>(r) * cols + c] != 0; }
  std::int64_t kept_count() const;
  std::int64_t removed_count() const;
  double sparsity() const;  // removed / (rows*cols)
};

struct PruneConfig {
  struct {
    int go = 4;
    int gi = 4;
    double rho = 0.0;
  } conv1x1;
  struct {
    int go = 16;
    int dense_groups = 0;
  } dw;
  struct {
    int go = 4;
    int gi = 4;
    double rho_conn = 0.0;
  } conv3x3;
  std::set<OpKind> enabled = {OpKind::Conv1x1, OpKind::DwConv3x3};
};

struct LayerPruneResult {
  std::string name;
  OpKind op = OpKind::Conv2d;
  bool pruned = false;
  std::optional<BlockMask> mask;  // conv1x1 / conv3x3
  std::vector<int> codes;         // dw: per group; conv3x3: per kept block
  ChannelGrouping grouping;       // dw only
  double weight_sparsity = 0.0;   // removed weights / total weights
  double delta = 0.0;             // pruning-quality metric
  std::int64_t kept_blocks = 0;
  std::int64_t removed_blocks = 0;
};

struct PruneReport {
  struct Layer {
    std::string name;
    std::string op;
    std::int64_t kept_blocks = 0;
    std::int64_t removed_blocks = 0;
    double sparsity = 0.0;
    double delta = 0.0;
  };
  std::vector<Layer> layers;
  std::vector<std::string> passed_through;  // layers with no prune rule
  double flop_sparsity = 0.0;   // MAC-weighted average sparsity
  double param_sparsity = 0.0;  // removed weights / total weights
};

/// Connectivity group pruning for 1x1 kernels: scores go*gi blocks by
/// l1-norm and removes exactly floor(rows*cols*rho) lowest-scoring blocks.
/// Score ties remove the lexicographically earliest (row, col) first.
BlockMask conv1x1_connectivity_prune(const WeightTensor& w, int go, int gi, double rho);

/// Pattern group pruning for depthwise 3x3: channel groups follow
/// partition_channels(oc); each group takes its argmax 3:9 code, then the
/// dense_groups groups with the largest removed-l1 loss are reassigned the
/// dense code (tie: lower group index).
std::vector<int> dw_pattern_prune(const WeightTensor& w, int go, int dense_groups,
                                  const PatternCatalog& catalog);

/// Connectivity pruning over per-block 3x3-kernel l1 sums plus a 5:9 code
/// for every kept block (row-major over kept blocks).
std::pair<BlockMask, std::vector<int>> conv3x3_group_prune(const WeightTensor& w, int go,
                                                           int gi, double rho_conn,
                                                           const PatternCatalog& catalog59);

/// delta = |W - W_sparse|_1 / |W|_1, defined as 0 when |W|_1 == 0.
double pruning_quality(const WeightTensor& w, const WeightTensor& w_sparse);

WeightTensor apply_mask(const WeightTensor& w, const BlockMask& mask);
WeightTensor apply_dw_codes(const WeightTensor& w, const ChannelGrouping& grouping,
                            const std::vector<int>& codes, const PatternCatalog& catalog);
WeightTensor apply_conv3x3_mask(const WeightTensor& w, const BlockMask& mask,
                                const std::vector<int>& codes,
                                const PatternCatalog& catalog59);

/// Dense multiply-accumulate count of one layer (0 for weightless ops).
std::int64_t layer_dense_macs(const LayerDesc& l);

/// Applies the per-operator prune rule to every enabled layer and
/// aggregates the report. Layers without a rule pass through dense.
std::pair<std::vector<LayerPruneResult>, PruneReport> network_prune(const Model& m,
                                                                    const PruneConfig& cfg);

/// Masked copy of every weighted layer per its prune result.
Model apply_prune_results(const Model& m, const std::vector<LayerPruneResult>& results);

}  // namespace sbnn

#endif  // SBNN_PRUNER_HPP_
