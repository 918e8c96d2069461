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

#include "sbnn/pruner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace sbnn {

std::int64_t BlockMask::kept_count() const {
  return std::count_if(keep.begin(), keep.end(), [](std::uint8_t k) { return k != 0; });
}

std::int64_t BlockMask::removed_count() const {
  return static_cast<std::int64_t>(keep.size()) - kept_count();
}

double BlockMask::sparsity() const {
  if (keep.empty()) return 0.0;
  return static_cast<double>(removed_count()) / static_cast<double>(keep.size());
}

namespace {

// l1 of the (o, i) kernel block [r*go, ...) x [c*gi, ...), partial blocks
// scored by their actual members.
double block_l1(const WeightTensor& w, int r, int c, int go, int gi) {
  const int o_end = std::min((r + 1) * go, w.oc);
  const int i_end = std::min((c + 1) * gi, w.ic);
  double s = 0.0;
  for (int o = r * go; o < o_end; ++o)
    for (int kr = 0; kr < w.kh; ++kr)
      for (int kc = 0; kc < w.kw; ++kc)
        for (int i = c * gi; i < i_end; ++i) s += std::fabs(w.at(o, kr, kc, i));
  return s;
}

BlockMask connectivity_prune_impl(const WeightTensor& w, int go, int gi, double rho) {
  if (w.oc < 1 || w.ic < 1) throw std::invalid_argument("connectivity prune: empty weight");
  if (go < 1 || gi < 1) throw std::invalid_argument("connectivity prune: bad group size");
  if (rho < 0.0 || rho > 1.0) throw std::invalid_argument("connectivity prune: rho outside [0,1]");

  BlockMask m;
  m.go = go;
  m.gi = gi;
  m.rows = (w.oc + go - 1) / go;
  m.cols = (w.ic + gi - 1) / gi;
  m.keep.assign(static_cast<size_t>(m.rows) * m.cols, 1);

  const std::int64_t total = static_cast<std::int64_t>(m.rows) * m.cols;
  const std::int64_t n_remove =
      static_cast<std::int64_t>(std::floor(static_cast<double>(total) * rho));
  if (n_remove == 0) return m;

  struct Scored {
    double score;
    std::int64_t idx;
  };
  std::vector<Scored> scored;
  scored.reserve(static_cast<size_t>(total));
  for (int r = 0; r < m.rows; ++r)
    for (int c = 0; c < m.cols; ++c)
      scored.push_back({block_l1(w, r, c, go, gi), static_cast<std::int64_t>(r) * m.cols + c});

  // lowest importance first; equal scores remove earlier (row, col) first
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score < b.score;
    return a.idx < b.idx;
  });
  for (std::int64_t k = 0; k < n_remove; ++k) m.keep[static_cast<size_t>(scored[k].idx)] = 0;
  return m;
}

double group_pattern_loss(const WeightTensor& w, int ch_begin, int ch_count,
                          const KernelPattern& p) {
  double loss = 0.0;
  for (int ch = ch_begin; ch < ch_begin + ch_count; ++ch)
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c)
        if (!p.kept(r, c)) loss += std::fabs(w.at(ch, r, c, 0));
  return loss;
}

}  // namespace

BlockMask conv1x1_connectivity_prune(const WeightTensor& w, int go, int gi, double rho) {
  if (w.kh * w.kw != 1)
    throw std::invalid_argument("conv1x1_connectivity_prune: kernel must be 1x1");
  return connectivity_prune_impl(w, go, gi, rho);
}

std::vector<int> dw_pattern_prune(const WeightTensor& w, int go, int dense_groups,
                                  const PatternCatalog& catalog) {
  if (w.ic != 1 || w.kh != 3 || w.kw != 3)
    throw std::invalid_argument("dw_pattern_prune: weight must be depthwise 3x3");
  const ChannelGrouping grouping = partition_channels(w.oc, go);
  const int n_groups = grouping.group_count();
  if (dense_groups < 0 || dense_groups > n_groups)
    throw std::invalid_argument("dw_pattern_prune: dense_groups exceeds group count");

  std::vector<int> codes(static_cast<size_t>(n_groups), 0);
  std::vector<double> losses(static_cast<size_t>(n_groups), 0.0);
  for (int g = 0; g < n_groups; ++g) {
    const int begin = grouping.channel_offset(g);
    const int count = std::min(grouping.groups[g], w.oc - begin);
    std::vector<float> stack;
    stack.reserve(static_cast<size_t>(count) * 9);
    for (int ch = begin; ch < begin + count; ++ch)
      for (int t = 0; t < 9; ++t) stack.push_back(w.data[static_cast<size_t>(ch) * 9 + t]);
    const int code = best_pattern_for_group(stack, catalog);
    codes[static_cast<size_t>(g)] = code;
    losses[static_cast<size_t>(g)] = group_pattern_loss(w, begin, count, catalog.at(code));
  }

  // the groups losing the most l1 go dense; ties keep the lower index
  std::vector<int> order(static_cast<size_t>(n_groups));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (losses[static_cast<size_t>(a)] != losses[static_cast<size_t>(b)])
      return losses[static_cast<size_t>(a)] > losses[static_cast<size_t>(b)];
    return a < b;
  });
  for (int k = 0; k < dense_groups; ++k)
    codes[static_cast<size_t>(order[static_cast<size_t>(k)])] = catalog.dense_code;
  return codes;
}

std::pair<BlockMask, std::vector<int>> conv3x3_group_prune(const WeightTensor& w, int go,
                                                           int gi, double rho_conn,
                                                           const PatternCatalog& catalog59) {
  if (w.kh * w.kw != 9)
    throw std::invalid_argument("conv3x3_group_prune: kernel must be 3x3");
  BlockMask mask = connectivity_prune_impl(w, go, gi, rho_conn);

  std::vector<int> codes;
  for (int r = 0; r < mask.rows; ++r) {
    for (int c = 0; c < mask.cols; ++c) {
      if (!mask.kept(r, c)) continue;
      const int o_end = std::min((r + 1) * go, w.oc);
      const int i_end = std::min((c + 1) * gi, w.ic);
      std::vector<float> stack;
      for (int o = r * go; o < o_end; ++o)
        for (int i = c * gi; i < i_end; ++i)
          for (int kr = 0; kr < 3; ++kr)
            for (int kc = 0; kc < 3; ++kc) stack.push_back(w.at(o, kr, kc, i));
      codes.push_back(best_pattern_for_group(stack, catalog59));
    }
  }
  return {std::move(mask), std::move(codes)};
}

double pruning_quality(const WeightTensor& w, const WeightTensor& w_sparse) {
  if (w.oc != w_sparse.oc || w.kh != w_sparse.kh || w.kw != w_sparse.kw ||
      w.ic != w_sparse.ic)
    throw std::invalid_argument("pruning_quality: shape mismatch");
  double num = 0.0, den = 0.0;
  for (size_t i = 0; i < w.data.size(); ++i) {
    num += std::fabs(w.data[i] - w_sparse.data[i]);
    den += std::fabs(w.data[i]);
  }
  return den == 0.0 ? 0.0 : num / den;
}

WeightTensor apply_mask(const WeightTensor& w, const BlockMask& mask) {
  if (mask.rows != (w.oc + mask.go - 1) / mask.go ||
      mask.cols != (w.ic + mask.gi - 1) / mask.gi)
    throw std::invalid_argument("apply_mask: mask grid does not match weight shape");
  WeightTensor out = w;
  for (int o = 0; o < w.oc; ++o) {
    for (int i = 0; i < w.ic; ++i) {
      if (mask.kept(o / mask.go, i / mask.gi)) continue;
      for (int kr = 0; kr < w.kh; ++kr)
        for (int kc = 0; kc < w.kw; ++kc) out.at(o, kr, kc, i) = 0.0f;
    }
  }
  return out;
}

WeightTensor apply_dw_codes(const WeightTensor& w, const ChannelGrouping& grouping,
                            const std::vector<int>& codes, const PatternCatalog& catalog) {
  if (w.ic != 1 || w.kh != 3 || w.kw != 3)
    throw std::invalid_argument("apply_dw_codes: weight must be depthwise 3x3");
  if (static_cast<int>(codes.size()) != grouping.group_count())
    throw std::invalid_argument("apply_dw_codes: codes/grouping length mismatch");
  WeightTensor out = w;
  for (int g = 0; g < grouping.group_count(); ++g) {
    const int code = codes[static_cast<size_t>(g)];
    if (code == catalog.dense_code) continue;
    const KernelPattern& p = catalog.at(code);
    const int begin = grouping.channel_offset(g);
    const int end = std::min(begin + grouping.groups[g], w.oc);
    for (int ch = begin; ch < end; ++ch)
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c)
          if (!p.kept(r, c)) out.at(ch, r, c, 0) = 0.0f;
  }
  return out;
}

WeightTensor apply_conv3x3_mask(const WeightTensor& w, const BlockMask& mask,
                                const std::vector<int>& codes,
                                const PatternCatalog& catalog59) {
  WeightTensor out = apply_mask(w, mask);
  size_t code_idx = 0;
  for (int r = 0; r < mask.rows; ++r) {
    for (int c = 0; c < mask.cols; ++c) {
      if (!mask.kept(r, c)) continue;
      if (code_idx >= codes.size())
        throw std::invalid_argument("apply_conv3x3_mask: too few pattern codes");
      const KernelPattern& p = catalog59.at(codes[code_idx++]);
      const int o_end = std::min((r + 1) * mask.go, w.oc);
      const int i_end = std::min((c + 1) * mask.gi, w.ic);
      for (int o = r * mask.go; o < o_end; ++o)
        for (int kr = 0; kr < 3; ++kr)
          for (int kc = 0; kc < 3; ++kc)
            if (!p.kept(kr, kc))
              for (int i = c * mask.gi; i < i_end; ++i) out.at(o, kr, kc, i) = 0.0f;
    }
  }
  return out;
}

std::int64_t layer_dense_macs(const LayerDesc& l) {
  const Shape& o = l.out_shape;
  const Shape& i = l.in_shape;
  switch (l.op) {
    case OpKind::Conv2d:
      return static_cast<std::int64_t>(o.n) * o.h * o.w * o.c * 9 * i.c;
    case OpKind::DwConv3x3:
      return static_cast<std::int64_t>(o.n) * o.h * o.w * o.c * 9;
    case OpKind::Conv1x1:
      return static_cast<std::int64_t>(o.n) * o.h * o.w * o.c * i.c;
    case OpKind::Fc:
      return static_cast<std::int64_t>(o.n) * o.c * (static_cast<std::int64_t>(i.h) * i.w * i.c);
    default:
      return 0;
  }
}

namespace {

// weight-level sparsity of one pruned layer (removed weights / total)
double result_weight_sparsity(const LayerDesc& l, const WeightTensor& w,
                              const LayerPruneResult& res) {
  if (!res.pruned) return 0.0;
  switch (l.op) {
    case OpKind::Conv1x1:
      return res.mask ? res.mask->sparsity() : 0.0;
    case OpKind::DwConv3x3: {
      // removed taps: 3 of 9 per channel in non-dense groups
      std::int64_t removed_ch = 0;
      for (int g = 0; g < res.grouping.group_count(); ++g) {
        if (res.codes[static_cast<size_t>(g)] == kDwDenseCode) continue;
        const int begin = res.grouping.channel_offset(g);
        removed_ch += std::min(res.grouping.groups[g], w.oc - begin);
      }
      return static_cast<double>(removed_ch) * 3.0 / (static_cast<double>(w.oc) * 9.0);
    }
    case OpKind::Conv2d: {
      if (!res.mask) return 0.0;
      // removed blocks lose all 9 taps, kept blocks lose 5 of 9
      const double kept_frac = 1.0 - res.mask->sparsity();
      return 1.0 - kept_frac * (4.0 / 9.0);
    }
    default:
      return 0.0;
  }
}

}  // namespace

std::pair<std::vector<LayerPruneResult>, PruneReport> network_prune(const Model& m,
                                                                    const PruneConfig& cfg) {
  std::vector<LayerPruneResult> results;
  PruneReport report;
  double macs_total = 0.0, macs_removed = 0.0;
  double params_total = 0.0, params_removed = 0.0;

  for (int li = 0; li < m.layer_count(); ++li) {
    const LayerDesc& l = m.layers[li];
    const WeightTensor& w = m.weights[li];
    LayerPruneResult res;
    res.name = l.name;
    res.op = l.op;

    const bool enabled = cfg.enabled.count(l.op) > 0 && l.sparse_eligible;
    if (l.has_weights() && enabled) {
      switch (l.op) {
        case OpKind::Conv1x1: {
          res.mask = conv1x1_connectivity_prune(w, cfg.conv1x1.go, cfg.conv1x1.gi,
                                                cfg.conv1x1.rho);
          res.pruned = true;
          res.kept_blocks = res.mask->kept_count();
          res.removed_blocks = res.mask->removed_count();
          res.delta = pruning_quality(w, apply_mask(w, *res.mask));
          break;
        }
        case OpKind::DwConv3x3: {
          res.grouping = partition_channels(w.oc, cfg.dw.go);
          const int dg = std::min(cfg.dw.dense_groups, res.grouping.group_count());
          res.codes = dw_pattern_prune(w, cfg.dw.go, dg, dw_pattern_catalog());
          res.pruned = true;
          res.kept_blocks = res.grouping.group_count();
          res.delta = pruning_quality(
              w, apply_dw_codes(w, res.grouping, res.codes, dw_pattern_catalog()));
          break;
        }
        case OpKind::Conv2d: {
          auto [mask, codes] = conv3x3_group_prune(w, cfg.conv3x3.go, cfg.conv3x3.gi,
                                                   cfg.conv3x3.rho_conn,
                                                   conv59_pattern_catalog());
          res.mask = std::move(mask);
          res.codes = std::move(codes);
          res.pruned = true;
          res.kept_blocks = res.mask->kept_count();
          res.removed_blocks = res.mask->removed_count();
          res.delta = pruning_quality(
              w, apply_conv3x3_mask(w, *res.mask, res.codes, conv59_pattern_catalog()));
          break;
        }
        default:
          break;  // fc and others have no prune rule; fall through dense
      }
    }
    res.weight_sparsity = result_weight_sparsity(l, w, res);

    const double layer_macs = static_cast<double>(layer_dense_macs(l));
    macs_total += layer_macs;
    macs_removed += layer_macs * res.weight_sparsity;
    const double layer_params = static_cast<double>(w.count());
    params_total += layer_params;
    params_removed += layer_params * res.weight_sparsity;

    if (res.pruned) {
      report.layers.push_back({l.name, to_string(l.op), res.kept_blocks, res.removed_blocks,
                               res.weight_sparsity, res.delta});
    } else if (l.has_weights() || layer_macs > 0) {
      report.passed_through.push_back(l.name);
    }
    results.push_back(std::move(res));
  }

  report.flop_sparsity = macs_total == 0.0 ? 0.0 : macs_removed / macs_total;
  report.param_sparsity = params_total == 0.0 ? 0.0 : params_removed / params_total;
  return {std::move(results), std::move(report)};
}

Model apply_prune_results(const Model& m, const std::vector<LayerPruneResult>& results) {
  if (static_cast<int>(results.size()) != m.layer_count())
    throw std::invalid_argument("apply_prune_results: result count mismatch");
  Model out = m;
  for (int li = 0; li < m.layer_count(); ++li) {
    const LayerPruneResult& res = results[static_cast<size_t>(li)];
    if (!res.pruned) continue;
    switch (res.op) {
      case OpKind::Conv1x1:
        out.weights[static_cast<size_t>(li)] = apply_mask(m.weights[static_cast<size_t>(li)], *res.mask);
        break;
      case OpKind::DwConv3x3:
        out.weights[static_cast<size_t>(li)] = apply_dw_codes(
            m.weights[static_cast<size_t>(li)], res.grouping, res.codes, dw_pattern_catalog());
        break;
      case OpKind::Conv2d:
        out.weights[static_cast<size_t>(li)] = apply_conv3x3_mask(
            m.weights[static_cast<size_t>(li)], *res.mask, res.codes, conv59_pattern_catalog());
        break;
      default:
        break;
    }
  }
  return out;
}

}  // namespace sbnn
