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

#include "sbnn/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <limits>
#include <stdexcept>
#include <thread>

namespace sbnn {

namespace {

constexpr int kMaxMp = 1024;

void parallel_for(std::int64_t count, int threads, const std::function<void(std::int64_t)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::int64_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const int t = static_cast<int>(std::min<std::int64_t>(threads, count));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(t));
  for (int k = 0; k < t; ++k) {
    pool.emplace_back([&, k] {
      // static contiguous chunks; every index is handled exactly once
      const std::int64_t lo = count * k / t;
      const std::int64_t hi = count * (k + 1) / t;
      for (std::int64_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

inline float apply_act(float v, ActKind act) {
  switch (act) {
    case ActKind::Relu: return v > 0.0f ? v : 0.0f;
    case ActKind::Relu6: return v < 0.0f ? 0.0f : (v > 6.0f ? 6.0f : v);
    default: return v;
  }
}

void check_plain(const Tensor& t, const char* who) {
  if (t.layout != Layout::PlainNHWC)
    throw std::invalid_argument(std::string(who) + ": input must be PlainNHWC");
}

Shape conv_out_shape(const Shape& in, int oc, int kh, int kw, int stride, int pad) {
  Shape o;
  o.n = in.n;
  o.h = (in.h + 2 * pad - kh) / stride + 1;
  o.w = (in.w + 2 * pad - kw) / stride + 1;
  o.c = oc;
  return o;
}

}  // namespace

TileConfig solve_tile_config(std::int64_t M, std::int64_t N, std::int64_t K, int R,
                             int np_fixed) {
  (void)M;
  (void)N;
  (void)K;  // the objective is monotone in mp for fixed np, so only R matters
  if (np_fixed < 4 || np_fixed % 4 != 0)
    throw std::invalid_argument("solve_tile_config: np must be a positive multiple of 4");
  const auto regs = [np_fixed](int mp) { return mp * np_fixed / 4 + mp / 4 + np_fixed; };
  if (regs(4) > R)
    throw std::invalid_argument("solve_tile_config: register budget " + std::to_string(R) +
                                " infeasible (needs >= " + std::to_string(regs(4)) + ")");
  int mp = 4;
  while (mp + 4 <= kMaxMp && regs(mp + 4) <= R) mp += 4;
  return {mp, np_fixed, regs(mp)};
}

Tensor dense_conv2d(const Tensor& in, const DenseLayerIR& l) {
  check_plain(in, "dense_conv2d");
  const WeightTensor& w = l.weight;
  if (w.ic != in.shape.c) throw std::invalid_argument("dense_conv2d: channel mismatch");
  const Shape os = conv_out_shape(in.shape, w.oc, w.kh, w.kw, l.stride, l.pad);
  Tensor out = Tensor::plain(os.n, os.h, os.w, os.c);

  for (int n = 0; n < os.n; ++n) {
    for (int oy = 0; oy < os.h; ++oy) {
      for (int ox = 0; ox < os.w; ++ox) {
        float* orow = out.data.data() + out.index(n, oy, ox, 0);
        for (int o = 0; o < w.oc; ++o) {
          float acc = l.bias.empty() ? 0.0f : l.bias[static_cast<size_t>(o)];
          for (int c = 0; c < w.ic; ++c) {
            for (int kr = 0; kr < w.kh; ++kr) {
              const int iy = oy * l.stride - l.pad + kr;
              if (iy < 0 || iy >= in.shape.h) continue;
              for (int kc = 0; kc < w.kw; ++kc) {
                const int ix = ox * l.stride - l.pad + kc;
                if (ix < 0 || ix >= in.shape.w) continue;
                acc += in.at(n, iy, ix, c) * w.at(o, kr, kc, c);
              }
            }
          }
          orow[o] = apply_act(acc, l.act);
        }
      }
    }
  }
  return out;
}

Tensor dense_dwconv3x3(const Tensor& in, const DenseLayerIR& l) {
  check_plain(in, "dense_dwconv3x3");
  const WeightTensor& w = l.weight;
  if (w.oc != in.shape.c || w.ic != 1 || w.kh != 3 || w.kw != 3)
    throw std::invalid_argument("dense_dwconv3x3: weight shape mismatch");
  const Shape os = conv_out_shape(in.shape, w.oc, 3, 3, l.stride, l.pad);
  Tensor out = Tensor::plain(os.n, os.h, os.w, os.c);

  for (int n = 0; n < os.n; ++n) {
    for (int oy = 0; oy < os.h; ++oy) {
      for (int ox = 0; ox < os.w; ++ox) {
        float* orow = out.data.data() + out.index(n, oy, ox, 0);
        for (int ch = 0; ch < w.oc; ++ch) {
          float acc = l.bias.empty() ? 0.0f : l.bias[static_cast<size_t>(ch)];
          for (int kr = 0; kr < 3; ++kr) {
            const int iy = oy * l.stride - l.pad + kr;
            if (iy < 0 || iy >= in.shape.h) continue;
            for (int kc = 0; kc < 3; ++kc) {
              const int ix = ox * l.stride - l.pad + kc;
              if (ix < 0 || ix >= in.shape.w) continue;
              acc += in.at(n, iy, ix, ch) * w.data[static_cast<size_t>(ch) * 9 + kr * 3 + kc];
            }
          }
          orow[ch] = apply_act(acc, l.act);
        }
      }
    }
  }
  return out;
}

Tensor dense_conv1x1(const Tensor& in, const DenseLayerIR& l) {
  check_plain(in, "dense_conv1x1");
  const WeightTensor& w = l.weight;
  if (w.ic != in.shape.c || w.kh != 1 || w.kw != 1)
    throw std::invalid_argument("dense_conv1x1: weight shape mismatch");
  Tensor out = Tensor::plain(in.shape.n, in.shape.h, in.shape.w, w.oc);

  const std::int64_t pixels = static_cast<std::int64_t>(in.shape.n) * in.shape.h * in.shape.w;
  const int ic = w.ic, oc = w.oc;
  for (std::int64_t p = 0; p < pixels; ++p) {
    const float* irow = in.data.data() + p * ic;
    float* orow = out.data.data() + p * oc;
    for (int o = 0; o < oc; ++o) {
      const float* wrow = w.data.data() + static_cast<std::int64_t>(o) * ic;
      float acc = l.bias.empty() ? 0.0f : l.bias[static_cast<size_t>(o)];
      for (int i = 0; i < ic; ++i) acc += irow[i] * wrow[i];
      orow[o] = apply_act(acc, l.act);
    }
  }
  return out;
}

Tensor dense_fc(const Tensor& in, const DenseLayerIR& l) {
  check_plain(in, "dense_fc");
  const WeightTensor& w = l.weight;
  const std::int64_t features =
      static_cast<std::int64_t>(in.shape.h) * in.shape.w * in.shape.c;
  if (w.ic != features || w.kh != 1 || w.kw != 1)
    throw std::invalid_argument("dense_fc: weight shape mismatch");
  Tensor out = Tensor::plain(in.shape.n, 1, 1, w.oc);
  for (int n = 0; n < in.shape.n; ++n) {
    const float* irow = in.data.data() + n * features;
    float* orow = out.data.data() + static_cast<std::int64_t>(n) * w.oc;
    for (int o = 0; o < w.oc; ++o) {
      const float* wrow = w.data.data() + static_cast<std::int64_t>(o) * features;
      float acc = l.bias.empty() ? 0.0f : l.bias[static_cast<size_t>(o)];
      for (std::int64_t i = 0; i < features; ++i) acc += irow[i] * wrow[i];
      orow[o] = apply_act(acc, l.act);
    }
  }
  return out;
}

Tensor pool(const Tensor& in, const DenseLayerIR& l) {
  check_plain(in, "pool");
  const int kh = l.pool_kh, kw = l.pool_kw;
  if (kh < 1 || kw < 1) throw std::invalid_argument("pool: window not set");
  const Shape os = conv_out_shape(in.shape, in.shape.c, kh, kw, l.stride, l.pad);
  Tensor out = Tensor::plain(os.n, os.h, os.w, os.c);
  for (int n = 0; n < os.n; ++n) {
    for (int oy = 0; oy < os.h; ++oy) {
      for (int ox = 0; ox < os.w; ++ox) {
        for (int ch = 0; ch < os.c; ++ch) {
          float acc = l.pool_kind == PoolKind::Max ? -std::numeric_limits<float>::infinity()
                                                   : 0.0f;
          int cnt = 0;
          for (int kr = 0; kr < kh; ++kr) {
            const int iy = oy * l.stride - l.pad + kr;
            if (iy < 0 || iy >= in.shape.h) continue;
            for (int kc = 0; kc < kw; ++kc) {
              const int ix = ox * l.stride - l.pad + kc;
              if (ix < 0 || ix >= in.shape.w) continue;
              const float v = in.at(n, iy, ix, ch);
              if (l.pool_kind == PoolKind::Max)
                acc = std::max(acc, v);
              else
                acc += v;
              ++cnt;
            }
          }
          out.at(n, oy, ox, ch) =
              l.pool_kind == PoolKind::Max ? acc : (cnt > 0 ? acc / static_cast<float>(cnt) : 0.0f);
        }
      }
    }
  }
  return out;
}

Tensor relu(const Tensor& in) {
  Tensor out = in;
  for (float& v : out.data) v = v > 0.0f ? v : 0.0f;
  return out;
}

Tensor relu6(const Tensor& in) {
  Tensor out = in;
  for (float& v : out.data) v = apply_act(v, ActKind::Relu6);
  return out;
}

Tensor softmax(const Tensor& in) {
  check_plain(in, "softmax");
  Tensor out = in;
  const std::int64_t pixels = static_cast<std::int64_t>(in.shape.n) * in.shape.h * in.shape.w;
  const int c = in.shape.c;
  for (std::int64_t p = 0; p < pixels; ++p) {
    const float* irow = in.data.data() + p * c;
    float* orow = out.data.data() + p * c;
    float mx = irow[0];
    for (int i = 1; i < c; ++i) mx = std::max(mx, irow[i]);
    float sum = 0.0f;
    for (int i = 0; i < c; ++i) {
      orow[i] = std::exp(irow[i] - mx);
      sum += orow[i];
    }
    for (int i = 0; i < c; ++i) orow[i] /= sum;
  }
  return out;
}

Tensor sparse_conv1x1(const Tensor& in, const Conv1x1SparseIR& l, const TileConfig& tile,
                      const EngineOptions& opts) {
  check_plain(in, "sparse_conv1x1");
  if (in.shape.c != l.ic) throw std::invalid_argument("sparse_conv1x1: channel mismatch");
  if (tile.mp < 4 || tile.mp > kMaxMp || tile.mp % 4 != 0 || tile.np != 4)
    throw std::invalid_argument("sparse_conv1x1: bad tile config");
  const int rows = (l.oc + 3) / 4;
  if (static_cast<int>(l.sd.size()) != rows)
    throw std::invalid_argument("sparse_conv1x1: sd row count mismatch");
  const int cols = (l.ic + 3) / 4;
  for (const auto& row : l.sd)
    for (std::uint32_t v : row)
      if (v >= static_cast<std::uint32_t>(cols))
        throw std::out_of_range("sparse_conv1x1: sd index out of range in layer '" + l.name +
                                "'");

  Tensor out = Tensor::plain(in.shape.n, in.shape.h, in.shape.w, l.oc);
  const std::int64_t M = static_cast<std::int64_t>(in.shape.h) * in.shape.w;
  const int mp = tile.mp;
  const std::int64_t ptiles = (M + mp - 1) / mp;

  // packed blocks are row-major over block rows, sd order within a row
  std::vector<std::int64_t> row_base(static_cast<size_t>(rows) + 1, 0);
  for (int r = 0; r < rows; ++r)
    row_base[static_cast<size_t>(r) + 1] =
        row_base[static_cast<size_t>(r)] + static_cast<std::int64_t>(l.sd[static_cast<size_t>(r)].size());

  for (int n = 0; n < in.shape.n; ++n) {
    const float* ibase = in.data.data() + n * M * l.ic;
    float* obase = out.data.data() + n * M * l.oc;

    parallel_for(ptiles * rows, opts.threads, [&](std::int64_t cell) {
      const std::int64_t tp = cell / rows;
      const int jb = static_cast<int>(cell % rows);
      const std::int64_t p0 = tp * mp;
      const int pe = static_cast<int>(std::min<std::int64_t>(mp, M - p0));
      const int oc0 = jb * 4;
      const int vo = std::min(4, l.oc - oc0);

      float acc[kMaxMp * 4];
      for (int p = 0; p < pe; ++p)
        for (int o = 0; o < 4; ++o)
          acc[p * 4 + o] = o < vo ? l.bias[static_cast<size_t>(oc0 + o)] : 0.0f;

      std::uint64_t macs = 0;
      const auto& sd_row = l.sd[static_cast<size_t>(jb)];
      const float* blocks = l.packed.data() + row_base[static_cast<size_t>(jb)] * 16;
      for (size_t k = 0; k < sd_row.size(); ++k) {
        const int ic0 = static_cast<int>(sd_row[k]) * 4;
        const int vi = std::min(4, l.ic - ic0);
        const float* blk = blocks + k * 16;
        const float* icol = ibase + p0 * l.ic + ic0;
        for (int p = 0; p < pe; ++p) {
          const float* inp = icol + static_cast<std::int64_t>(p) * l.ic;
          float* a = acc + p * 4;
          for (int i = 0; i < vi; ++i) {
            const float v = inp[i];
            const float* wv = blk + i * 4;
            a[0] += v * wv[0];
            a[1] += v * wv[1];
            a[2] += v * wv[2];
            a[3] += v * wv[3];
          }
        }
        macs += static_cast<std::uint64_t>(pe) * static_cast<std::uint64_t>(vi) *
                static_cast<std::uint64_t>(vo);
      }

      for (int p = 0; p < pe; ++p) {
        float* orow = obase + (p0 + p) * l.oc + oc0;
        for (int o = 0; o < vo; ++o) orow[o] = apply_act(acc[p * 4 + o], l.act);
      }
      if (opts.counters) opts.counters->macs.fetch_add(macs, std::memory_order_relaxed);
    });
  }
  return out;
}

namespace {

// One channel group of the pattern-dispatch depthwise kernel. Stride 1
// computes output pixel pairs over a zero-padded scratch image so the
// middle input column is loaded once for both pixels (3 columns per
// kernel row instead of 4); odd tail pixels run as a pair whose second
// result is dropped. Counter semantics follow OpCounters.
struct DwGroupArgs {
  const float* padded;  // (h+2) x (w+3) x gw, zero-filled border
  float* out;           // oh x ow x gw group slab
  int h, w, oh, ow, gw;
  int valid_lanes;  // real channels in this group
  const float* wtaps;  // tap-major: wtaps[t*gw + lane]
  const float* bias;   // gw lanes, zero beyond valid
  ActKind act;
  int stride;
};

template <int Code>
void dw_sparse_group(const DwGroupArgs& a, std::uint64_t* macs, std::uint64_t* loads) {
  // bit r of the code names the REMOVED column of kernel row r (0 removes
  // the first column, 1 the third); the kept side column is the other one
  constexpr int side0 = (Code >> 0) & 1 ? 0 : 2;
  constexpr int side1 = (Code >> 1) & 1 ? 0 : 2;
  constexpr int side2 = (Code >> 2) & 1 ? 0 : 2;
  const int sides[3] = {side0, side1, side2};
  // packed tap index per (row, slot): slot 0 is the lower kernel column
  int tap_lo[3], tap_hi[3];
  for (int r = 0; r < 3; ++r) {
    tap_lo[r] = 2 * r;
    tap_hi[r] = 2 * r + 1;
  }

  const int gw = a.gw;
  const std::int64_t prow = static_cast<std::int64_t>(a.w + 3) * gw;
  float acc0[16], acc1[16];

  if (a.stride == 1) {
    for (int y = 0; y < a.oh; ++y) {
      const float* rows[3] = {a.padded + static_cast<std::int64_t>(y) * prow,
                              a.padded + static_cast<std::int64_t>(y + 1) * prow,
                              a.padded + static_cast<std::int64_t>(y + 2) * prow};
      for (int x0 = 0; x0 < a.ow; x0 += 2) {
        for (int l = 0; l < gw; ++l) {
          acc0[l] = a.bias[l];
          acc1[l] = a.bias[l];
        }
        for (int r = 0; r < 3; ++r) {
          const int side = sides[r];
          const int start = x0 + (side == 0 ? 0 : 1);
          const float* v0 = rows[r] + static_cast<std::int64_t>(start) * gw;
          const float* v1 = v0 + gw;
          const float* v2 = v1 + gw;
          const float* wlo = a.wtaps + tap_lo[r] * gw;
          const float* whi = a.wtaps + tap_hi[r] * gw;
          // the shared middle column sits at v1 for both output pixels;
          // packed taps are kernel-column ascending, matching v0/v1 and
          // v1/v2 regardless of which side column the pattern keeps
          for (int l = 0; l < gw; ++l) acc0[l] += wlo[l] * v0[l];
          for (int l = 0; l < gw; ++l) acc0[l] += whi[l] * v1[l];
          for (int l = 0; l < gw; ++l) acc1[l] += wlo[l] * v1[l];
          for (int l = 0; l < gw; ++l) acc1[l] += whi[l] * v2[l];
        }
        *loads += static_cast<std::uint64_t>(9) * static_cast<std::uint64_t>(gw);
        float* o0 = a.out + (static_cast<std::int64_t>(y) * a.ow + x0) * gw;
        for (int l = 0; l < gw; ++l) o0[l] = apply_act(acc0[l], a.act);
        int stored = 1;
        if (x0 + 1 < a.ow) {
          float* o1 = o0 + gw;
          for (int l = 0; l < gw; ++l) o1[l] = apply_act(acc1[l], a.act);
          stored = 2;
        }
        *macs += static_cast<std::uint64_t>(6) * static_cast<std::uint64_t>(a.valid_lanes) *
                 static_cast<std::uint64_t>(stored);
      }
    }
    return;
  }

  // stride 2: single-pixel steps, two columns per kernel row
  for (int y = 0; y < a.oh; ++y) {
    const float* rows[3] = {a.padded + static_cast<std::int64_t>(2 * y) * prow,
                            a.padded + static_cast<std::int64_t>(2 * y + 1) * prow,
                            a.padded + static_cast<std::int64_t>(2 * y + 2) * prow};
    for (int x = 0; x < a.ow; ++x) {
      for (int l = 0; l < gw; ++l) acc0[l] = a.bias[l];
      for (int r = 0; r < 3; ++r) {
        const int side = sides[r];
        const float* vs = rows[r] + static_cast<std::int64_t>(2 * x + side) * gw;
        const float* vm = rows[r] + static_cast<std::int64_t>(2 * x + 1) * gw;
        const float* wlo = a.wtaps + tap_lo[r] * gw;
        const float* whi = a.wtaps + tap_hi[r] * gw;
        const float* first = side == 0 ? vs : vm;
        const float* second = side == 0 ? vm : vs;
        for (int l = 0; l < gw; ++l) acc0[l] += wlo[l] * first[l];
        for (int l = 0; l < gw; ++l) acc0[l] += whi[l] * second[l];
      }
      *loads += static_cast<std::uint64_t>(6) * static_cast<std::uint64_t>(gw);
      float* o0 = a.out + (static_cast<std::int64_t>(y) * a.ow + x) * gw;
      for (int l = 0; l < gw; ++l) o0[l] = apply_act(acc0[l], a.act);
      *macs += static_cast<std::uint64_t>(6) * static_cast<std::uint64_t>(a.valid_lanes);
    }
  }
}

void dw_dense_group(const DwGroupArgs& a, std::uint64_t* macs, std::uint64_t* loads) {
  const int gw = a.gw;
  const std::int64_t prow = static_cast<std::int64_t>(a.w + 3) * gw;
  float acc0[16], acc1[16];

  if (a.stride == 1) {
    for (int y = 0; y < a.oh; ++y) {
      const float* rows[3] = {a.padded + static_cast<std::int64_t>(y) * prow,
                              a.padded + static_cast<std::int64_t>(y + 1) * prow,
                              a.padded + static_cast<std::int64_t>(y + 2) * prow};
      for (int x0 = 0; x0 < a.ow; x0 += 2) {
        for (int l = 0; l < gw; ++l) {
          acc0[l] = a.bias[l];
          acc1[l] = a.bias[l];
        }
        for (int r = 0; r < 3; ++r) {
          const float* v0 = rows[r] + static_cast<std::int64_t>(x0) * gw;
          const float* v1 = v0 + gw;
          const float* v2 = v1 + gw;
          const float* v3 = v2 + gw;
          const float* w0 = a.wtaps + (3 * r + 0) * gw;
          const float* w1 = a.wtaps + (3 * r + 1) * gw;
          const float* w2 = a.wtaps + (3 * r + 2) * gw;
          for (int l = 0; l < gw; ++l) acc0[l] += w0[l] * v0[l];
          for (int l = 0; l < gw; ++l) acc0[l] += w1[l] * v1[l];
          for (int l = 0; l < gw; ++l) acc0[l] += w2[l] * v2[l];
          for (int l = 0; l < gw; ++l) acc1[l] += w0[l] * v1[l];
          for (int l = 0; l < gw; ++l) acc1[l] += w1[l] * v2[l];
          for (int l = 0; l < gw; ++l) acc1[l] += w2[l] * v3[l];
        }
        *loads += static_cast<std::uint64_t>(12) * static_cast<std::uint64_t>(gw);
        float* o0 = a.out + (static_cast<std::int64_t>(y) * a.ow + x0) * gw;
        for (int l = 0; l < gw; ++l) o0[l] = apply_act(acc0[l], a.act);
        int stored = 1;
        if (x0 + 1 < a.ow) {
          float* o1 = o0 + gw;
          for (int l = 0; l < gw; ++l) o1[l] = apply_act(acc1[l], a.act);
          stored = 2;
        }
        *macs += static_cast<std::uint64_t>(9) * static_cast<std::uint64_t>(a.valid_lanes) *
                 static_cast<std::uint64_t>(stored);
      }
    }
    return;
  }

  for (int y = 0; y < a.oh; ++y) {
    const float* rows[3] = {a.padded + static_cast<std::int64_t>(2 * y) * prow,
                            a.padded + static_cast<std::int64_t>(2 * y + 1) * prow,
                            a.padded + static_cast<std::int64_t>(2 * y + 2) * prow};
    for (int x = 0; x < a.ow; ++x) {
      for (int l = 0; l < gw; ++l) acc0[l] = a.bias[l];
      for (int r = 0; r < 3; ++r) {
        const float* base = rows[r] + static_cast<std::int64_t>(2 * x) * gw;
        for (int kc = 0; kc < 3; ++kc) {
          const float* v = base + static_cast<std::int64_t>(kc) * gw;
          const float* wv = a.wtaps + (3 * r + kc) * gw;
          for (int l = 0; l < gw; ++l) acc0[l] += wv[l] * v[l];
        }
      }
      *loads += static_cast<std::uint64_t>(9) * static_cast<std::uint64_t>(gw);
      float* o0 = a.out + (static_cast<std::int64_t>(y) * a.ow + x) * gw;
      for (int l = 0; l < gw; ++l) o0[l] = apply_act(acc0[l], a.act);
      *macs += static_cast<std::uint64_t>(9) * static_cast<std::uint64_t>(a.valid_lanes);
    }
  }
}

using DwGroupFn = void (*)(const DwGroupArgs&, std::uint64_t*, std::uint64_t*);

constexpr DwGroupFn kDwVariants[9] = {
    dw_sparse_group<0>, dw_sparse_group<1>, dw_sparse_group<2>,
    dw_sparse_group<3>, dw_sparse_group<4>, dw_sparse_group<5>,
    dw_sparse_group<6>, dw_sparse_group<7>, dw_dense_group,
};

}  // namespace

Tensor sparse_dwconv3x3(const Tensor& in, const DwSparseIR& l, int stride, int pad,
                        const EngineOptions& opts) {
  if (in.layout != Layout::GroupedNHWC || !(in.grouping == l.grouping))
    throw std::invalid_argument("sparse_dwconv3x3: input must be grouped per the layer");
  if (pad != 1) throw std::invalid_argument("sparse_dwconv3x3: pad must be 1");
  if (stride != 1 && stride != 2)
    throw std::invalid_argument("sparse_dwconv3x3: stride must be 1 or 2");
  for (std::uint32_t code : l.codes)
    if (code > kDwDenseCode)
      throw std::out_of_range("sparse_dwconv3x3: pattern code out of range in layer '" +
                              l.name + "'");

  const int h = in.shape.h, w = in.shape.w;
  const int oh = (h + 2 * pad - 3) / stride + 1;
  const int ow = (w + 2 * pad - 3) / stride + 1;
  const int oc = l.grouping.total;
  const int padded_c = l.grouping.padded_total();

  Tensor out;
  out.shape = {in.shape.n, oh, ow, oc};
  out.layout = Layout::GroupedNHWC;
  out.grouping = l.grouping;
  out.data.assign(static_cast<size_t>(in.shape.n) * oh * ow * padded_c, 0.0f);

  // packed weight offset per group
  const int ngroups = l.grouping.group_count();
  std::vector<std::int64_t> wbase(static_cast<size_t>(ngroups) + 1, 0);
  for (int g = 0; g < ngroups; ++g) {
    const int taps = l.codes[static_cast<size_t>(g)] == kDwDenseCode ? 9 : 6;
    wbase[static_cast<size_t>(g) + 1] =
        wbase[static_cast<size_t>(g)] + static_cast<std::int64_t>(taps) * l.grouping.groups[static_cast<size_t>(g)];
  }

  const std::int64_t in_pixels = static_cast<std::int64_t>(h) * w;
  const std::int64_t out_pixels = static_cast<std::int64_t>(oh) * ow;

  parallel_for(static_cast<std::int64_t>(in.shape.n) * ngroups, opts.threads,
               [&](std::int64_t cell) {
    const int n = static_cast<int>(cell / ngroups);
    const int g = static_cast<int>(cell % ngroups);
    const int gw = l.grouping.groups[static_cast<size_t>(g)];
    const int choff = l.grouping.channel_offset(g);

    // zero-padded scratch: top/bottom/left ring of 1, right margin of 2 so
    // odd-width tails can run as full pixel pairs
    std::vector<float> padded(static_cast<size_t>(h + 2) * (w + 3) * gw, 0.0f);
    const float* src =
        in.data.data() + n * in_pixels * padded_c + static_cast<std::int64_t>(choff) * in_pixels;
    for (int y = 0; y < h; ++y)
      std::memcpy(padded.data() + (static_cast<std::int64_t>(y + 1) * (w + 3) + 1) * gw,
                  src + static_cast<std::int64_t>(y) * w * gw,
                  static_cast<size_t>(w) * gw * sizeof(float));

    float bias[16] = {};
    for (int lane = 0; lane < gw; ++lane)
      bias[lane] = choff + lane < oc ? l.bias[static_cast<size_t>(choff + lane)] : 0.0f;

    DwGroupArgs args;
    args.padded = padded.data();
    args.out = out.data.data() + n * out_pixels * padded_c +
               static_cast<std::int64_t>(choff) * out_pixels;
    args.h = h;
    args.w = w;
    args.oh = oh;
    args.ow = ow;
    args.gw = gw;
    args.valid_lanes = std::min(gw, oc - choff);
    args.wtaps = l.packed.data() + wbase[static_cast<size_t>(g)];
    args.bias = bias;
    args.act = l.act;
    args.stride = stride;

    std::uint64_t macs = 0, loads = 0;
    kDwVariants[l.codes[static_cast<size_t>(g)]](args, &macs, &loads);
    if (opts.counters) {
      opts.counters->macs.fetch_add(macs, std::memory_order_relaxed);
      opts.counters->input_loads.fetch_add(loads, std::memory_order_relaxed);
    }
  });
  return out;
}

ExecutionPlan plan_model(const ModelIR& ir, const EngineOptions& opts) {
  ExecutionPlan plan;
  for (const LayerIR& layer : ir.layers) {
    LayerPlan lp;
    if (const auto* s = std::get_if<Conv1x1SparseIR>(&layer)) {
      lp.sparse = true;
      lp.tile = solve_tile_config(static_cast<std::int64_t>(s->in_shape.h) * s->in_shape.w,
                                  s->oc, s->ic, opts.register_budget, 4);
    } else if (const auto* dw = std::get_if<DwSparseIR>(&layer)) {
      lp.sparse = true;
      lp.grouped_input = true;
      lp.scratch_floats = static_cast<std::int64_t>(dw->in_shape.h + 2) *
                          (dw->in_shape.w + 3) * 16;
    }
    plan.layers.push_back(lp);
  }
  return plan;
}

namespace {

Tensor run_dense_layer(const DenseLayerIR& l, const Tensor& x) {
  switch (l.op) {
    case OpKind::Conv2d: return dense_conv2d(x, l);
    case OpKind::DwConv3x3: return dense_dwconv3x3(x, l);
    case OpKind::Conv1x1: return dense_conv1x1(x, l);
    case OpKind::Fc: return dense_fc(x, l);
    case OpKind::Pool: return pool(x, l);
    case OpKind::Activation: {
      Tensor out = x;
      for (float& v : out.data) v = apply_act(v, l.act);
      return out;
    }
    case OpKind::Softmax: return softmax(x);
    default:
      throw std::invalid_argument("unsupported op kind '" + std::string(to_string(l.op)) +
                                  "' in layer '" + l.name + "'");
  }
}

}  // namespace

Tensor run_model(const ModelIR& ir, const Tensor& input, const ExecutionPlan& plan,
                 const EngineOptions& opts) {
  if (static_cast<int>(plan.layers.size()) != ir.layer_count())
    throw std::invalid_argument("run_model: plan does not cover all layers");
  if (!(input.shape == ir.input_shape))
    throw std::invalid_argument("run_model: input shape mismatch");

  Tensor cur = input;
  for (int li = 0; li < ir.layer_count(); ++li) {
    const LayerIR& layer = ir.layers[static_cast<size_t>(li)];
    if (const auto* s = std::get_if<Conv1x1SparseIR>(&layer)) {
      if (cur.layout == Layout::GroupedNHWC) cur = unpack_grouped(cur, s->in_shape.c);
      cur = sparse_conv1x1(cur, *s, plan.layers[static_cast<size_t>(li)].tile, opts);
    } else if (const auto* dw = std::get_if<DwSparseIR>(&layer)) {
      if (cur.layout == Layout::PlainNHWC)
        cur = pack_grouped(cur, dw->grouping);
      else if (!(cur.grouping == dw->grouping))
        cur = pack_grouped(unpack_grouped(cur, dw->in_shape.c), dw->grouping);
      cur = sparse_dwconv3x3(cur, *dw, dw->stride, dw->pad, opts);
    } else {
      const auto& d = std::get<DenseLayerIR>(layer);
      if (cur.layout == Layout::GroupedNHWC) cur = unpack_grouped(cur, d.in_shape.c);
      cur = run_dense_layer(d, cur);
    }
  }
  if (cur.layout == Layout::GroupedNHWC) cur = unpack_grouped(cur, ir.output_shape.c);
  return cur;
}

Tensor run_dense_model(const Model& m, const Tensor& input) {
  Tensor cur = input;
  for (int li = 0; li < m.layer_count(); ++li) {
    const LayerDesc& l = m.layers[static_cast<size_t>(li)];
    DenseLayerIR d;
    d.name = l.name;
    d.op = l.op;
    d.in_shape = l.in_shape;
    d.out_shape = l.out_shape;
    d.stride = l.stride;
    d.pad = l.pad;
    d.act = l.act;
    d.pool_kind = l.pool_kind;
    d.pool_kh = l.pool_kh;
    d.pool_kw = l.pool_kw;
    d.weight = m.weights[static_cast<size_t>(li)];
    d.bias = m.biases[static_cast<size_t>(li)];
    cur = run_dense_layer(d, cur);
  }
  return cur;
}

FlopCount layer_flops(const LayerIR& layer) {
  FlopCount f;
  if (const auto* d = std::get_if<DenseLayerIR>(&layer)) {
    const Shape& o = d->out_shape;
    const std::int64_t out_pixels = static_cast<std::int64_t>(o.n) * o.h * o.w;
    switch (d->op) {
      case OpKind::Conv2d:
      case OpKind::DwConv3x3:
      case OpKind::Conv1x1:
      case OpKind::Fc: {
        // every weight fires once per output pixel (once per batch for fc);
        // counting nonzeros keeps masked dense-fallback layers exact
        std::int64_t nnz = 0;
        for (float v : d->weight.data) nnz += v != 0.0f;
        const std::int64_t pix = d->op == OpKind::Fc ? o.n : out_pixels;
        f.dense_macs = pix * d->weight.count();
        f.effective_macs = pix * nnz;
        break;
      }
      default:
        break;
    }
  } else if (const auto* s = std::get_if<Conv1x1SparseIR>(&layer)) {
    const std::int64_t pixels =
        static_cast<std::int64_t>(s->out_shape.n) * s->out_shape.h * s->out_shape.w;
    f.dense_macs = pixels * s->oc * s->ic;
    std::int64_t eff = 0;
    for (size_t r = 0; r < s->sd.size(); ++r) {
      const int vo = std::min(4, s->oc - static_cast<int>(r) * 4);
      for (std::uint32_t c : s->sd[r]) eff += vo * std::min(4, s->ic - static_cast<int>(c) * 4);
    }
    f.effective_macs = pixels * eff;
  } else {
    const auto& dw = std::get<DwSparseIR>(layer);
    const std::int64_t pixels =
        static_cast<std::int64_t>(dw.out_shape.n) * dw.out_shape.h * dw.out_shape.w;
    f.dense_macs = pixels * dw.grouping.total * 9;
    std::int64_t eff = 0;
    for (int g = 0; g < dw.grouping.group_count(); ++g) {
      const int taps = dw.codes[static_cast<size_t>(g)] == kDwDenseCode ? 9 : 6;
      const int valid =
          std::min(dw.grouping.groups[static_cast<size_t>(g)],
                   dw.grouping.total - dw.grouping.channel_offset(g));
      eff += static_cast<std::int64_t>(taps) * std::max(0, valid);
    }
    f.effective_macs = pixels * eff;
  }
  return f;
}

FlopCount flop_count(const ModelIR& ir) {
  FlopCount total;
  for (const LayerIR& layer : ir.layers) {
    const FlopCount f = layer_flops(layer);
    total.dense_macs += f.dense_macs;
    total.effective_macs += f.effective_macs;
  }
  return total;
}

}  // namespace sbnn
