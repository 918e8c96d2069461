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

#include "sbnn/rearrange.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "sbnn/pruner.hpp"

namespace sbnn {

namespace {

// ways to extend a partial partition: choose go-1 companions for the
// smallest unplaced index, i.e. C(m-1, go-1) * f(m-go)
std::uint64_t saturating_mul(std::uint64_t a, std::uint64_t b) {
  std::uint64_t r;
  if (__builtin_mul_overflow(a, b, &r)) return std::numeric_limits<std::uint64_t>::max();
  return r;
}

std::uint64_t binomial(int n, int k) {
  if (k < 0 || k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 r = 1;
  for (int i = 1; i <= k; ++i) {
    r = r * static_cast<unsigned>(n - k + i) / static_cast<unsigned>(i);
    if (r > std::numeric_limits<std::uint64_t>::max())
      return std::numeric_limits<std::uint64_t>::max();
  }
  return static_cast<std::uint64_t>(r);
}

}  // namespace

std::uint64_t unique_partition_count(int n, int go) {
  if (go < 1 || n < 1) throw std::invalid_argument("unique_partition_count: bad arguments");
  if (n % go != 0)
    throw std::invalid_argument("unique_partition_count: go does not divide n");
  std::uint64_t count = 1;
  for (int m = n; m > 0; m -= go) {
    const std::uint64_t ways = binomial(m - 1, go - 1);
    count = saturating_mul(count, ways);
  }
  return count;
}

namespace {

struct CanonicalEnumerator {
  int n, go;
  std::vector<int> perm;
  std::vector<bool> used;
  const std::function<bool(const std::vector<int>&)>* visit;
  bool stopped = false;

  // place the next group: leader = smallest unused, companions ascend
  void recurse(int filled) {
    if (stopped) return;
    if (filled == n) {
      if (!(*visit)(perm)) stopped = true;
      return;
    }
    int leader = 0;
    while (used[static_cast<size_t>(leader)]) ++leader;
    used[static_cast<size_t>(leader)] = true;
    perm[static_cast<size_t>(filled)] = leader;
    pick_members(filled + 1, filled + go, leader + 1);
    used[static_cast<size_t>(leader)] = false;
  }

  void pick_members(int pos, int group_end, int min_idx) {
    if (stopped) return;
    if (pos == group_end) {
      recurse(group_end);
      return;
    }
    for (int i = min_idx; i < n; ++i) {
      if (used[static_cast<size_t>(i)]) continue;
      used[static_cast<size_t>(i)] = true;
      perm[static_cast<size_t>(pos)] = i;
      pick_members(pos + 1, group_end, i + 1);
      used[static_cast<size_t>(i)] = false;
      if (stopped) return;
    }
  }
};

}  // namespace

void enumerate_canonical_permutations(
    int n, int go, std::uint64_t cap,
    const std::function<bool(const std::vector<int>&)>& visit) {
  const std::uint64_t count = unique_partition_count(n, go);
  if (count > cap)
    throw std::runtime_error("enumerate_canonical_permutations: " + std::to_string(count) +
                             " partitions exceed cap " + std::to_string(cap));
  CanonicalEnumerator e;
  e.n = n;
  e.go = go;
  e.perm.assign(static_cast<size_t>(n), 0);
  e.used.assign(static_cast<size_t>(n), false);
  e.visit = &visit;
  e.recurse(0);
}

namespace {

WeightTensor flatten_rows(const WeightTensor& w) {
  WeightTensor f;
  f.oc = w.oc;
  f.kh = 1;
  f.kw = 1;
  f.ic = w.kh * w.kw * w.ic;
  f.data = w.data;  // (oc, kh, kw, ic) is already row-major per filter
  return f;
}

WeightTensor permute_rows(const WeightTensor& flat, const std::vector<int>& perm) {
  WeightTensor out = flat;
  const size_t row = static_cast<size_t>(flat.ic);
  for (int j = 0; j < flat.oc; ++j)
    std::copy_n(flat.data.begin() + static_cast<std::int64_t>(perm[static_cast<size_t>(j)]) * flat.ic,
                row, out.data.begin() + static_cast<std::int64_t>(j) * flat.ic);
  return out;
}

double retained_l1(const WeightTensor& flat, int go, int gi, double rho) {
  const BlockMask mask = conv1x1_connectivity_prune(flat, go, gi, rho);
  double sum = 0.0;
  for (int o = 0; o < flat.oc; ++o)
    for (int i = 0; i < flat.ic; ++i)
      if (mask.kept(o / go, i / gi))
        sum += std::fabs(flat.data[static_cast<size_t>(o) * flat.ic + i]);
  return sum;
}

}  // namespace

double permutation_objective(const WeightTensor& w, const std::vector<int>& perm, int go,
                             int gi, double rho) {
  const WeightTensor flat = flatten_rows(w);
  if (static_cast<int>(perm.size()) != flat.oc)
    throw std::invalid_argument("permutation_objective: perm length mismatch");
  return retained_l1(permute_rows(flat, perm), go, gi, rho);
}

std::vector<int> search_filter_permutation(const WeightTensor& w, int go, int gi, double rho,
                                           std::uint64_t budget) {
  const WeightTensor flat = flatten_rows(w);
  const int n = flat.oc;
  std::vector<int> identity(static_cast<size_t>(n));
  std::iota(identity.begin(), identity.end(), 0);

  if (n % go == 0) {
    std::uint64_t count = 0;
    try {
      count = unique_partition_count(n, go);
    } catch (const std::exception&) {
      count = std::numeric_limits<std::uint64_t>::max();
    }
    if (count <= budget) {
      // exhaustive; first-found wins ties, and enumeration is
      // lexicographic so the identity wins all-equal instances
      std::vector<int> best = identity;
      double best_score = -1.0;
      enumerate_canonical_permutations(n, go, budget, [&](const std::vector<int>& p) {
        const double score = retained_l1(permute_rows(flat, p), go, gi, rho);
        if (score > best_score) {
          best_score = score;
          best = p;
        }
        return true;
      });
      return best;
    }
  }

  // greedy pairwise-swap hill climbing under an evaluation budget
  std::vector<int> cur = identity;
  double cur_score = retained_l1(permute_rows(flat, cur), go, gi, rho);
  std::uint64_t evals = 1;
  bool improved = true;
  while (improved && evals < budget) {
    improved = false;
    int best_a = -1, best_b = -1;
    double best_gain = 0.0;
    for (int a = 0; a < n && evals < budget; ++a) {
      for (int b = a + 1; b < n && evals < budget; ++b) {
        if (a / go == b / go) continue;  // same group, no effect
        std::swap(cur[static_cast<size_t>(a)], cur[static_cast<size_t>(b)]);
        const double score = retained_l1(permute_rows(flat, cur), go, gi, rho);
        ++evals;
        std::swap(cur[static_cast<size_t>(a)], cur[static_cast<size_t>(b)]);
        if (score - cur_score > best_gain) {
          best_gain = score - cur_score;
          best_a = a;
          best_b = b;
        }
      }
    }
    if (best_a >= 0) {
      std::swap(cur[static_cast<size_t>(best_a)], cur[static_cast<size_t>(best_b)]);
      cur_score = retained_l1(permute_rows(flat, cur), go, gi, rho);
      improved = true;
    }
  }
  return cur;
}

namespace {

bool is_permuting_op(OpKind op) {
  return op == OpKind::Conv2d || op == OpKind::Conv1x1 || op == OpKind::Fc;
}

bool transmits_perm(OpKind op) {
  return op == OpKind::DwConv3x3 || op == OpKind::Pool || op == OpKind::Activation ||
         op == OpKind::Softmax;
}

std::vector<int> identity_perm(int n) {
  std::vector<int> p(static_cast<size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  return p;
}

bool is_identity(const std::vector<int>& p) {
  for (size_t i = 0; i < p.size(); ++i)
    if (p[i] != static_cast<int>(i)) return false;
  return true;
}

void check_bijection(const std::vector<int>& p, const std::string& where) {
  std::vector<bool> seen(p.size(), false);
  for (int v : p) {
    if (v < 0 || v >= static_cast<int>(p.size()) || seen[static_cast<size_t>(v)])
      throw std::invalid_argument(where + ": permutation is not a bijection");
    seen[static_cast<size_t>(v)] = true;
  }
}

}  // namespace

PermutationPlan propagate_permutations(
    const Model& m, const std::vector<std::optional<std::vector<int>>>& filter_perms) {
  if (static_cast<int>(filter_perms.size()) != m.layer_count())
    throw std::invalid_argument("propagate_permutations: perm list length mismatch");

  int last_permuting = -1;
  for (int i = 0; i < m.layer_count(); ++i)
    if (is_permuting_op(m.layers[static_cast<size_t>(i)].op)) last_permuting = i;

  PermutationPlan plan;
  std::vector<int> incoming = identity_perm(m.layers.empty() ? 0 : m.input_shape().c);
  for (int i = 0; i < m.layer_count(); ++i) {
    const LayerDesc& l = m.layers[static_cast<size_t>(i)];
    LayerPerm lp;
    lp.channel_perm = incoming;
    if (is_permuting_op(l.op)) {
      if (i == last_permuting) {
        lp.filter_perm = identity_perm(l.out_shape.c);  // pin network output order
      } else if (filter_perms[static_cast<size_t>(i)]) {
        lp.filter_perm = *filter_perms[static_cast<size_t>(i)];
        if (static_cast<int>(lp.filter_perm.size()) != l.out_shape.c)
          throw std::invalid_argument("propagate_permutations: layer '" + l.name +
                                      "': filter perm length mismatch");
        check_bijection(lp.filter_perm, l.name);
      } else {
        lp.filter_perm = identity_perm(l.out_shape.c);
      }
      incoming = lp.filter_perm;
    } else if (transmits_perm(l.op)) {
      if (filter_perms[static_cast<size_t>(i)])
        throw std::invalid_argument("propagate_permutations: layer '" + l.name +
                                    "' cannot take its own filter permutation");
      lp.filter_perm = incoming;  // moves with its channels
    } else {
      throw std::invalid_argument("propagate_permutations: layer '" + l.name + "' (op " +
                                  to_string(l.op) + ") has unknown permutation semantics");
    }
    plan.layers.push_back(std::move(lp));
  }
  return plan;
}

Model apply_permutation_plan(const Model& m, const PermutationPlan& plan) {
  if (static_cast<int>(plan.layers.size()) != m.layer_count())
    throw std::invalid_argument("apply_permutation_plan: plan length mismatch");

  // edge invariant: child channel order equals parent output order
  for (int i = 1; i < m.layer_count(); ++i)
    if (plan.layers[static_cast<size_t>(i)].channel_perm !=
        plan.layers[static_cast<size_t>(i - 1)].filter_perm)
      throw std::invalid_argument("apply_permutation_plan: edge invariant violated at layer '" +
                                  m.layers[static_cast<size_t>(i)].name + "'");

  Model out = m;
  for (int li = 0; li < m.layer_count(); ++li) {
    const LayerDesc& l = m.layers[static_cast<size_t>(li)];
    const LayerPerm& lp = plan.layers[static_cast<size_t>(li)];
    if (!l.has_weights()) continue;
    const WeightTensor& w = m.weights[static_cast<size_t>(li)];
    WeightTensor& dst = out.weights[static_cast<size_t>(li)];
    const std::vector<float>& bias = m.biases[static_cast<size_t>(li)];
    std::vector<float>& dst_bias = out.biases[static_cast<size_t>(li)];

    if (l.op == OpKind::DwConv3x3) {
      if (static_cast<int>(lp.filter_perm.size()) != w.oc)
        throw std::invalid_argument("apply_permutation_plan: dw perm shape mismatch at '" +
                                    l.name + "'");
      if (is_identity(lp.filter_perm)) continue;
      for (int j = 0; j < w.oc; ++j) {
        const int src = lp.filter_perm[static_cast<size_t>(j)];
        for (int t = 0; t < 9; ++t)
          dst.data[static_cast<size_t>(j) * 9 + t] = w.data[static_cast<size_t>(src) * 9 + t];
        if (!bias.empty()) dst_bias[static_cast<size_t>(j)] = bias[static_cast<size_t>(src)];
      }
      continue;
    }

    if (static_cast<int>(lp.filter_perm.size()) != w.oc ||
        static_cast<int>(lp.channel_perm.size()) != w.ic)
      throw std::invalid_argument("apply_permutation_plan: perm shape mismatch at '" + l.name +
                                  "'");
    if (is_identity(lp.filter_perm) && is_identity(lp.channel_perm)) continue;
    for (int j = 0; j < w.oc; ++j) {
      const int src_o = lp.filter_perm[static_cast<size_t>(j)];
      for (int kr = 0; kr < w.kh; ++kr)
        for (int kc = 0; kc < w.kw; ++kc)
          for (int i = 0; i < w.ic; ++i)
            dst.at(j, kr, kc, i) = w.at(src_o, kr, kc, lp.channel_perm[static_cast<size_t>(i)]);
      if (!bias.empty()) dst_bias[static_cast<size_t>(j)] = bias[static_cast<size_t>(src_o)];
    }
  }
  return out;
}

RearrangeOutcome rearrange_model(const Model& m, const RearrangeConfig& cfg) {
  int last_permuting = -1;
  for (int i = 0; i < m.layer_count(); ++i)
    if (is_permuting_op(m.layers[static_cast<size_t>(i)].op)) last_permuting = i;

  std::vector<std::optional<std::vector<int>>> perms(static_cast<size_t>(m.layer_count()));
  RearrangeOutcome outcome;
  for (int i = 0; i < m.layer_count(); ++i) {
    const LayerDesc& l = m.layers[static_cast<size_t>(i)];
    if (!is_permuting_op(l.op) || i == last_permuting) continue;
    const WeightTensor& w = m.weights[static_cast<size_t>(i)];
    std::vector<int> best = search_filter_permutation(w, cfg.go, cfg.gi, cfg.rho, cfg.budget);
    const double id_l1 = permutation_objective(w, identity_perm(w.oc), cfg.go, cfg.gi, cfg.rho);
    const double best_l1 = permutation_objective(w, best, cfg.go, cfg.gi, cfg.rho);
    outcome.gains.push_back({l.name, id_l1, best_l1});
    perms[static_cast<size_t>(i)] = std::move(best);
  }
  outcome.plan = propagate_permutations(m, perms);
  outcome.model = apply_permutation_plan(m, outcome.plan);
  return outcome;
}

}  // namespace sbnn
