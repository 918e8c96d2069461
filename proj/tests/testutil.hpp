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

#ifndef SBNN_TESTS_TESTUTIL_HPP_
#define SBNN_TESTS_TESTUTIL_HPP_

#include <cmath>
#include <random>
#include <vector>

#include "sbnn/manifest.hpp"
#include "sbnn/tensor.hpp"

namespace sbnn::test {

inline std::vector<float> random_floats(std::mt19937_64& rng, std::int64_t count,
                                        float lo = -1.0f, float hi = 1.0f) {
  std::uniform_real_distribution<float> d(lo, hi);
  std::vector<float> v(static_cast<size_t>(count));
  for (float& x : v) x = d(rng);
  return v;
}

inline Tensor random_tensor(std::mt19937_64& rng, int n, int h, int w, int c) {
  Tensor t = Tensor::plain(n, h, w, c);
  t.data = random_floats(rng, t.shape.elements());
  return t;
}

inline WeightTensor random_weight(std::mt19937_64& rng, int oc, int kh, int kw, int ic) {
  WeightTensor w = WeightTensor::zeros(oc, kh, kw, ic);
  w.data = random_floats(rng, w.count());
  return w;
}

// Scratch reference convolution, independent of the engine: a plain
// quadruple loop over (output pixel, out channel, tap). Summation order
// per output is ascending channel, then kernel row, then kernel column --
// the same documented order the engine uses, so results match bitwise.
inline Tensor naive_conv(const Tensor& in, const WeightTensor& w,
                         const std::vector<float>& bias, int stride, int pad,
                         bool depthwise) {
  const int oh = (in.shape.h + 2 * pad - w.kh) / stride + 1;
  const int ow = (in.shape.w + 2 * pad - w.kw) / stride + 1;
  Tensor out = Tensor::plain(in.shape.n, oh, ow, w.oc);
  for (int n = 0; n < in.shape.n; ++n) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        for (int o = 0; o < w.oc; ++o) {
          float acc = bias.empty() ? 0.0f : bias[static_cast<size_t>(o)];
          const int cfirst = depthwise ? o : 0;
          const int clast = depthwise ? o + 1 : in.shape.c;
          for (int c = cfirst; c < clast; ++c) {
            for (int kr = 0; kr < w.kh; ++kr) {
              for (int kc = 0; kc < w.kw; ++kc) {
                const int iy = oy * stride - pad + kr;
                const int ix = ox * stride - pad + kc;
                if (iy < 0 || iy >= in.shape.h || ix < 0 || ix >= in.shape.w) continue;
                const float wv =
                    depthwise ? w.at(o, kr, kc, 0) : w.at(o, kr, kc, c);
                acc += in.at(n, iy, ix, c) * wv;
              }
            }
          }
          out.at(n, oy, ox, o) = acc;
        }
      }
    }
  }
  return out;
}

inline float max_abs_diff(const std::vector<float>& a, const std::vector<float>& b) {
  float m = a.size() == b.size() ? 0.0f : std::numeric_limits<float>::infinity();
  for (size_t i = 0; i < a.size() && i < b.size(); ++i)
    m = std::max(m, std::fabs(a[i] - b[i]));
  return m;
}

// max |a-b| / max(1, |b|): relative for large magnitudes, absolute near 0
inline float max_rel_err(const std::vector<float>& a, const std::vector<float>& b) {
  float m = a.size() == b.size() ? 0.0f : std::numeric_limits<float>::infinity();
  for (size_t i = 0; i < a.size() && i < b.size(); ++i)
    m = std::max(m, std::fabs(a[i] - b[i]) / std::max(1.0f, std::fabs(b[i])));
  return m;
}

}  // namespace sbnn::test

#endif  // SBNN_TESTS_TESTUTIL_HPP_
