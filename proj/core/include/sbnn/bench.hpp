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

#ifndef SBNN_BENCH_HPP_
#define SBNN_BENCH_HPP_

#include <array>
#include <cstdint>
#include <ostream>
#include <vector>

#include "sbnn/manifest.hpp"

namespace sbnn {

/// Operator latency sweep: shapes are (h, w, ic, oc, stride). Weights and
/// inputs are generated from `seed`, so records are reproducible run to
/// run (up to wall-clock noise in the ms columns).
struct BenchSpec {
  OpKind op = OpKind::Conv1x1;
  std::vector<std::array<int, 5>> shapes;
  std::vector<double> sparsity = {0.0, 0.1, 0.3, 0.5};
  int reps = 10;    // >= 3
  int warmup = 3;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct BenchRecord {
  OpKind op;
  int h, w, ic, oc, stride;
  double sparsity;
  double dense_ms;   // median
  double sparse_ms;  // median
  double speedup;    // dense_ms / sparse_ms - 1
  std::int64_t dense_macs;
  std::int64_t effective_macs;
};

/// MobileNet-v1 pointwise layer shapes.
std::vector<std::array<int, 5>> default_conv1x1_grid();
/// MobileNet-v1 depthwise layer shapes (both strides).
std::vector<std::array<int, 5>> default_dw_grid();

std::vector<BenchRecord> run_bench(const BenchSpec& spec);

inline constexpr const char* kBenchCsvHeader =
    "op,h,w,ic,oc,stride,sparsity,dense_ms,sparse_ms,speedup,dense_macs,effective_macs";

void write_csv(std::ostream& os, const std::vector<BenchRecord>& records);

}  // namespace sbnn

#endif  // SBNN_BENCH_HPP_
