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

#include "sbnn/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>

#include "sbnn/engine.hpp"
#include "sbnn/ir.hpp"
#include "sbnn/pruner.hpp"

namespace sbnn {

std::vector<std::array<int, 5>> default_conv1x1_grid() {
  return {
      {112, 112, 32, 64, 1},   {56, 56, 64, 128, 1}, {56, 56, 128, 128, 1},
      {28, 28, 128, 256, 1},   {28, 28, 256, 256, 1}, {14, 14, 256, 512, 1},
      {14, 14, 512, 512, 1},   {7, 7, 512, 1024, 1},  {7, 7, 1024, 1024, 1},
  };
}

std::vector<std::array<int, 5>> default_dw_grid() {
  return {
      {112, 112, 32, 32, 1},  {112, 112, 64, 64, 2}, {56, 56, 128, 128, 1},
      {56, 56, 128, 128, 2},  {28, 28, 256, 256, 1}, {28, 28, 256, 256, 2},
      {14, 14, 512, 512, 1},  {14, 14, 512, 512, 2}, {7, 7, 1024, 1024, 1},
  };
}

namespace {

double median_ms(const std::function<void()>& fn, int reps, int warmup) {
  for (int i = 0; i < warmup; ++i) fn();
  std::vector<double> ms(static_cast<size_t>(reps));
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    ms[static_cast<size_t>(i)] =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
  }
  std::sort(ms.begin(), ms.end());
  const size_t n = ms.size();
  return n % 2 == 1 ? ms[n / 2] : 0.5 * (ms[n / 2 - 1] + ms[n / 2]);
}

std::vector<float> randn(std::mt19937_64& rng, std::int64_t count, float stddev) {
  std::normal_distribution<float> d(0.0f, stddev);
  std::vector<float> v(static_cast<size_t>(count));
  for (float& x : v) x = d(rng);
  return v;
}

}  // namespace

std::vector<BenchRecord> run_bench(const BenchSpec& spec) {
  if (spec.reps < 3) throw std::invalid_argument("bench: repetitions must be >= 3");
  if (spec.op != OpKind::Conv1x1 && spec.op != OpKind::DwConv3x3)
    throw std::invalid_argument("bench: op must be conv1x1 or dwconv");
  auto shapes = spec.shapes;
  if (shapes.empty())
    shapes = spec.op == OpKind::Conv1x1 ? default_conv1x1_grid() : default_dw_grid();

  EngineOptions opts;
  opts.threads = spec.threads;
  std::vector<BenchRecord> records;

  for (const auto& s : shapes) {
    const int h = s[0], w = s[1], ic = s[2], oc = s[3], stride = s[4];
    if (h < 1 || w < 1 || ic < 1 || oc < 1)
      throw std::invalid_argument("bench: shapes must be positive");
    for (double rho : spec.sparsity) {
      std::mt19937_64 rng(spec.seed ^ (static_cast<std::uint64_t>(h) << 40) ^
                          (static_cast<std::uint64_t>(ic) << 20) ^
                          (static_cast<std::uint64_t>(oc) << 8) ^
                          static_cast<std::uint64_t>(rho * 1000));

      BenchRecord rec{};
      rec.op = spec.op;
      rec.h = h; rec.w = w; rec.ic = ic; rec.oc = oc; rec.stride = stride;
      rec.sparsity = rho;

      if (spec.op == OpKind::Conv1x1) {
        WeightTensor wt;
        wt.oc = oc; wt.kh = 1; wt.kw = 1; wt.ic = ic;
        wt.data = randn(rng, wt.count(), std::sqrt(2.0f / static_cast<float>(ic)));
        std::vector<float> bias = randn(rng, oc, 0.05f);

        Tensor in = Tensor::plain(1, h, w, ic);
        in.data = randn(rng, in.shape.elements(), 1.0f);

        DenseLayerIR dense;
        dense.name = "bench";
        dense.op = OpKind::Conv1x1;
        dense.in_shape = in.shape;
        dense.out_shape = {1, h, w, oc};
        dense.weight = wt;
        dense.bias = bias;

        const BlockMask mask = conv1x1_connectivity_prune(wt, 4, 4, rho);
        LayerPruneResult res;
        res.name = "bench";
        res.op = OpKind::Conv1x1;
        res.pruned = true;
        res.mask = mask;

        Model m;
        LayerDesc ld;
        ld.name = "bench";
        ld.op = OpKind::Conv1x1;
        ld.in_shape = in.shape;
        ld.out_shape = dense.out_shape;
        m.layers.push_back(ld);
        m.weights.push_back(wt);
        m.biases.push_back(bias);
        const ModelIR ir = convert(m, {res});
        const auto& sl = std::get<Conv1x1SparseIR>(ir.layers.front());
        const TileConfig tile = solve_tile_config(static_cast<std::int64_t>(h) * w, oc, ic,
                                                  opts.register_budget, 4);

        rec.dense_ms = median_ms([&] { dense_conv1x1(in, dense); }, spec.reps, spec.warmup);
        rec.sparse_ms =
            median_ms([&] { sparse_conv1x1(in, sl, tile, opts); }, spec.reps, spec.warmup);
        const FlopCount f = layer_flops(ir.layers.front());
        rec.dense_macs = f.dense_macs;
        rec.effective_macs = f.effective_macs;
      } else {
        WeightTensor wt;
        wt.oc = ic; wt.kh = 3; wt.kw = 3; wt.ic = 1;
        wt.data = randn(rng, wt.count(), std::sqrt(2.0f / 9.0f));
        std::vector<float> bias = randn(rng, ic, 0.05f);

        Tensor in = Tensor::plain(1, h, w, ic);
        in.data = randn(rng, in.shape.elements(), 1.0f);

        DenseLayerIR dense;
        dense.name = "bench";
        dense.op = OpKind::DwConv3x3;
        dense.in_shape = in.shape;
        dense.out_shape = {1, (h + 2 - 3) / stride + 1, (w + 2 - 3) / stride + 1, ic};
        dense.stride = stride;
        dense.pad = 1;
        dense.weight = wt;
        dense.bias = bias;

        // target weight sparsity rho in [0, 1/3]: dense groups cover the rest
        const ChannelGrouping grouping = partition_channels(ic, 16);
        const double dense_frac = std::clamp(1.0 - 3.0 * rho, 0.0, 1.0);
        const int dense_groups =
            static_cast<int>(std::lround(dense_frac * grouping.group_count()));
        LayerPruneResult res;
        res.name = "bench";
        res.op = OpKind::DwConv3x3;
        res.pruned = true;
        res.grouping = grouping;
        res.codes = dw_pattern_prune(wt, 16, dense_groups, dw_pattern_catalog());

        Model m;
        LayerDesc ld;
        ld.name = "bench";
        ld.op = OpKind::DwConv3x3;
        ld.in_shape = in.shape;
        ld.out_shape = dense.out_shape;
        ld.stride = stride;
        ld.pad = 1;
        m.layers.push_back(ld);
        m.weights.push_back(wt);
        m.biases.push_back(bias);
        const ModelIR ir = convert(m, {res});
        const auto& sl = std::get<DwSparseIR>(ir.layers.front());
        const Tensor grouped = pack_grouped(in, grouping);

        rec.dense_ms = median_ms([&] { dense_dwconv3x3(in, dense); }, spec.reps, spec.warmup);
        rec.sparse_ms = median_ms([&] { sparse_dwconv3x3(grouped, sl, stride, 1, opts); },
                                  spec.reps, spec.warmup);
        const FlopCount f = layer_flops(ir.layers.front());
        rec.dense_macs = f.dense_macs;
        rec.effective_macs = f.effective_macs;
      }

      rec.speedup = rec.dense_ms / rec.sparse_ms - 1.0;
      records.push_back(rec);
    }
  }
  return records;
}

void write_csv(std::ostream& os, const std::vector<BenchRecord>& records) {
  os << kBenchCsvHeader << "\n";
  char line[256];
  for (const BenchRecord& r : records) {
    std::snprintf(line, sizeof(line), "%s,%d,%d,%d,%d,%d,%.4f,%.6f,%.6f,%.6f,%lld,%lld\n",
                  to_string(r.op), r.h, r.w, r.ic, r.oc, r.stride, r.sparsity, r.dense_ms,
                  r.sparse_ms, r.speedup, static_cast<long long>(r.dense_macs),
                  static_cast<long long>(r.effective_macs));
    os << line;
  }
}

}  // namespace sbnn
