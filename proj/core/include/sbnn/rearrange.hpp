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

#ifndef SBNN_REARRANGE_HPP_
#define SBNN_REARRANGE_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "sbnn/manifest.hpp"
#include "sbnn/tensor.hpp"

namespace sbnn {

/// Per-layer permutation pair. perm[j] names the OLD index placed at new
/// position j. Along every edge, child.channel_perm == parent.filter_perm.
struct LayerPerm {
  std::vector<int> filter_perm;
  std::vector<int> channel_perm;
};

struct PermutationPlan {
  std::vector<LayerPerm> layers;  // aligned with Model::layers
};

/// Count of distinct partitions of n filters into unordered groups of go:
/// n! / ((go!)^(n/go) * (n/go)!). Saturates at UINT64_MAX on overflow.
std::uint64_t unique_partition_count(int n, int go);

/// Visits each canonical permutation once: within a group indices ascend
/// and groups sort by first element. Visitation order is lexicographic.
/// The visitor returns false to stop early. Throws when the partition
/// count exceeds cap.
void enumerate_canonical_permutations(
    int n, int go, std::uint64_t cap,
    const std::function<bool(const std::vector<int>&)>& visit);

/// Retained l1 after connectivity-pruning W (flattened to oc x ic*kh*kw)
/// under the given filter order.
double permutation_objective(const WeightTensor& w, const std::vector<int>& perm, int go,
                             int gi, double rho);

/// Filter order maximizing the post-pruning retained l1. Exhaustive over
/// canonical permutations when their count fits the budget, greedy
/// pairwise-swap hill climbing otherwise. Never scores below identity.
std::vector<int> search_filter_permutation(const WeightTensor& w, int go, int gi, double rho,
                                           std::uint64_t budget);

/// Builds the plan from per-layer filter permutations (index -> perm; only
/// weighted permuting layers may appear). Shape-preserving ops transmit
/// the incoming permutation; the last conv/fc layer is pinned to identity.
/// Throws when the chain contains an op with unknown permutation
/// semantics (concat), naming the layer.
PermutationPlan propagate_permutations(
    const Model& m, const std::vector<std::optional<std::vector<int>>>& filter_perms);

/// Rewrites weights and biases per the plan; the network function is
/// preserved (same outputs for the same inputs, up to rounding).
Model apply_permutation_plan(const Model& m, const PermutationPlan& plan);

struct RearrangeConfig {
  int go = 4;
  int gi = 4;
  double rho = 0.5;
  std::uint64_t budget = 100000;
};

struct RearrangeOutcome {
  Model model;
  PermutationPlan plan;
  // identity vs searched retained-l1 per searched layer
  struct LayerGain {
    std::string name;
    double identity_l1;
    double best_l1;
  };
  std::vector<LayerGain> gains;
};

/// Searches every conv/fc layer except the pinned output layer, then
/// propagates and applies the plan.
RearrangeOutcome rearrange_model(const Model& m, const RearrangeConfig& cfg);

}  // namespace sbnn

#endif  // SBNN_REARRANGE_HPP_
