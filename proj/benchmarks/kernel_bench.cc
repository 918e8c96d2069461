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

#include <random>

#include "benchmark/benchmark.h"
#include "sbnn/engine.hpp"
#include "sbnn/ir.hpp"
#include "sbnn/pruner.hpp"

namespace {

using namespace sbnn;

std::vector<float> randu(std::mt19937_64& rng, std::int64_t n) {
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  std::vector<float> v(static_cast<size_t>(n));
  for (float& x : v) x = d(rng);
  return v;
}

struct Conv1x1Fixture {
  Tensor in;
  DenseLayerIR dense;
  Conv1x1SparseIR sparse;
  TileConfig tile;

  Conv1x1Fixture(int h, int w, int ic, int oc, double rho) {
    std::mt19937_64 rng(42);
    in = Tensor::plain(1, h, w, ic);
    in.data = randu(rng, in.shape.elements());
    WeightTensor wt = WeightTensor::zeros(oc, 1, 1, ic);
    wt.data = randu(rng, wt.count());
    std::vector<float> bias = randu(rng, oc);

    dense.op = OpKind::Conv1x1;
    dense.in_shape = in.shape;
    dense.out_shape = {1, h, w, oc};
    dense.weight = wt;
    dense.bias = bias;

    Model m;
    LayerDesc ld;
    ld.name = "bench";
    ld.op = OpKind::Conv1x1;
    ld.in_shape = in.shape;
    ld.out_shape = dense.out_shape;
    m.layers.push_back(ld);
    m.weights.push_back(wt);
    m.biases.push_back(bias);
    LayerPruneResult res;
    res.name = "bench";
    res.op = OpKind::Conv1x1;
    res.pruned = true;
    res.mask = conv1x1_connectivity_prune(wt, 4, 4, rho);
    sparse = std::get<Conv1x1SparseIR>(convert(m, {res}).layers.front());
    tile = solve_tile_config(static_cast<std::int64_t>(h) * w, oc, ic, 32, 4);
  }
};

void BM_DenseConv1x1(benchmark::State& state) {
  const Conv1x1Fixture f(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)),
                         static_cast<int>(state.range(1)), static_cast<int>(state.range(2)),
                         0.0);
  for (auto _ : state) {
    Tensor out = dense_conv1x1(f.in, f.dense);
    benchmark::DoNotOptimize(out.data.data());
  }
  state.SetItemsProcessed(state.iterations() * f.in.shape.elements() * state.range(2));
}

void BM_SparseConv1x1(benchmark::State& state) {
  const double rho = static_cast<double>(state.range(3)) / 100.0;
  const Conv1x1Fixture f(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)),
                         static_cast<int>(state.range(1)), static_cast<int>(state.range(2)),
                         rho);
  for (auto _ : state) {
    Tensor out = sparse_conv1x1(f.in, f.sparse, f.tile);
    benchmark::DoNotOptimize(out.data.data());
  }
  state.SetItemsProcessed(state.iterations() * f.in.shape.elements() * state.range(2));
}

struct DwFixture {
  Tensor grouped;
  Tensor plain;
  DenseLayerIR dense;
  DwSparseIR sparse;

  DwFixture(int h, int w, int c, bool dense_codes) {
    std::mt19937_64 rng(43);
    plain = Tensor::plain(1, h, w, c);
    plain.data = randu(rng, plain.shape.elements());
    WeightTensor wt = WeightTensor::zeros(c, 3, 3, 1);
    wt.data = randu(rng, wt.count());
    std::vector<float> bias = randu(rng, c);

    dense.op = OpKind::DwConv3x3;
    dense.in_shape = plain.shape;
    dense.out_shape = plain.shape;
    dense.stride = 1;
    dense.pad = 1;
    dense.weight = wt;
    dense.bias = bias;

    const ChannelGrouping grouping = partition_channels(c);
    Model m;
    LayerDesc ld;
    ld.name = "bench";
    ld.op = OpKind::DwConv3x3;
    ld.in_shape = plain.shape;
    ld.out_shape = plain.shape;
    ld.stride = 1;
    ld.pad = 1;
    m.layers.push_back(ld);
    m.weights.push_back(wt);
    m.biases.push_back(bias);
    LayerPruneResult res;
    res.name = "bench";
    res.op = OpKind::DwConv3x3;
    res.pruned = true;
    res.grouping = grouping;
    res.codes = dw_pattern_prune(wt, 16, dense_codes ? grouping.group_count() : 0,
                                 dw_pattern_catalog());
    sparse = std::get<DwSparseIR>(convert(m, {res}).layers.front());
    grouped = pack_grouped(plain, grouping);
  }
};

void BM_DenseDw3x3(benchmark::State& state) {
  const DwFixture f(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)),
                    static_cast<int>(state.range(1)), true);
  for (auto _ : state) {
    Tensor out = dense_dwconv3x3(f.plain, f.dense);
    benchmark::DoNotOptimize(out.data.data());
  }
}

void BM_SparseDw3x3(benchmark::State& state) {
  const DwFixture f(static_cast<int>(state.range(0)), static_cast<int>(state.range(0)),
                    static_cast<int>(state.range(1)), false);
  for (auto _ : state) {
    Tensor out = sparse_dwconv3x3(f.grouped, f.sparse, 1, 1);
    benchmark::DoNotOptimize(out.data.data());
  }
}

}  // namespace

// MobileNet-v1 style shapes: {feature map, ic, oc(, sparsity%)}
BENCHMARK(BM_DenseConv1x1)->Args({56, 128, 128})->Args({14, 512, 512})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SparseConv1x1)
    ->Args({56, 128, 128, 0})
    ->Args({56, 128, 128, 30})
    ->Args({56, 128, 128, 50})
    ->Args({14, 512, 512, 0})
    ->Args({14, 512, 512, 30})
    ->Args({14, 512, 512, 50})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DenseDw3x3)->Args({112, 32})->Args({14, 512})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SparseDw3x3)->Args({112, 32})->Args({14, 512})->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
