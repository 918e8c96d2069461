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

#include <cstring>

#include "doctest.h"
#include "sbnn/ir.hpp"
#include "sbnn/pruner.hpp"
#include "testutil.hpp"

using namespace sbnn;

namespace {

Model one_conv1x1(std::mt19937_64& rng, int h, int w, int ic, int oc) {
  Model m;
  m.name = "one";
  LayerDesc l;
  l.name = "pw";
  l.op = OpKind::Conv1x1;
  l.in_shape = {1, h, w, ic};
  l.out_shape = {1, h, w, oc};
  m.layers.push_back(l);
  m.weights.push_back(test::random_weight(rng, oc, 1, 1, ic));
  m.biases.push_back(test::random_floats(rng, oc));
  return m;
}

Model one_dw(std::mt19937_64& rng, int h, int w, int c, int stride = 1) {
  Model m;
  m.name = "onedw";
  LayerDesc l;
  l.name = "dw";
  l.op = OpKind::DwConv3x3;
  l.in_shape = {1, h, w, c};
  l.out_shape = {1, (h - 1) / stride + 1, (w - 1) / stride + 1, c};
  l.stride = stride;
  l.pad = 1;
  m.layers.push_back(l);
  m.weights.push_back(test::random_weight(rng, c, 3, 3, 1));
  m.biases.push_back(test::random_floats(rng, c));
  return m;
}

LayerPruneResult prune_conv1x1_layer(const Model& m, double rho) {
  LayerPruneResult res;
  res.name = m.layers[0].name;
  res.op = OpKind::Conv1x1;
  res.pruned = true;
  res.mask = conv1x1_connectivity_prune(m.weights[0], 4, 4, rho);
  return res;
}

LayerPruneResult prune_dw_layer(const Model& m, int dense_groups) {
  LayerPruneResult res;
  res.name = m.layers[0].name;
  res.op = OpKind::DwConv3x3;
  res.pruned = true;
  res.grouping = partition_channels(m.weights[0].oc);
  res.codes = dw_pattern_prune(m.weights[0], 16, dense_groups, dw_pattern_catalog());
  return res;
}

bool models_equal(const ModelIR& a, const ModelIR& b) {
  if (a.version != b.version || a.layer_count() != b.layer_count()) return false;
  if (a.input_name != b.input_name || a.output_name != b.output_name) return false;
  if (!(a.input_shape == b.input_shape) || !(a.output_shape == b.output_shape)) return false;
  const auto feq = [](const std::vector<float>& x, const std::vector<float>& y) {
    return x.size() == y.size() &&
           std::memcmp(x.data(), y.data(), x.size() * sizeof(float)) == 0;
  };
  for (int i = 0; i < a.layer_count(); ++i) {
    const LayerIR& la = a.layers[static_cast<size_t>(i)];
    const LayerIR& lb = b.layers[static_cast<size_t>(i)];
    if (la.index() != lb.index()) return false;
    if (const auto* da = std::get_if<DenseLayerIR>(&la)) {
      const auto& db = std::get<DenseLayerIR>(lb);
      if (da->name != db.name || da->op != db.op || da->stride != db.stride ||
          da->pad != db.pad || da->act != db.act || !feq(da->weight.data, db.weight.data) ||
          !feq(da->bias, db.bias))
        return false;
    } else if (const auto* sa = std::get_if<Conv1x1SparseIR>(&la)) {
      const auto& sb = std::get<Conv1x1SparseIR>(lb);
      if (sa->name != sb.name || sa->sd != sb.sd || !feq(sa->packed, sb.packed) ||
          !feq(sa->bias, sb.bias))
        return false;
    } else {
      const auto& wa = std::get<DwSparseIR>(la);
      const auto& wb = std::get<DwSparseIR>(lb);
      if (wa.name != wb.name || !(wa.grouping == wb.grouping) || wa.codes != wb.codes ||
          !feq(wa.packed, wb.packed) || !feq(wa.bias, wb.bias))
        return false;
    }
  }
  return true;
}

}  // namespace

TEST_CASE("convert with all blocks kept decompresses to the original weights") {
  std::mt19937_64 rng(40);
  const Model m = one_conv1x1(rng, 4, 4, 16, 16);
  const ModelIR ir = convert(m, {prune_conv1x1_layer(m, 0.0)});
  const auto& s = std::get<Conv1x1SparseIR>(ir.layers[0]);
  CHECK(s.kept_blocks() == 16);
  CHECK(decompress_conv1x1(s).data == m.weights[0].data);
}

TEST_CASE("convert at rho=0.5 packs half the dense bytes plus 4 per kept block") {
  std::mt19937_64 rng(41);
  const Model m = one_conv1x1(rng, 4, 4, 16, 40);  // 10x4 = 40 blocks
  const ModelIR ir = convert(m, {prune_conv1x1_layer(m, 0.5)});
  const auto& s = std::get<Conv1x1SparseIR>(ir.layers[0]);
  CHECK(s.kept_blocks() == 20);
  const std::int64_t dense_bytes = static_cast<std::int64_t>(40) * 16 * 4;  // blocks*floats*bytes
  const std::int64_t packed_bytes = static_cast<std::int64_t>(s.packed.size()) * 4;
  const std::int64_t index_bytes = s.kept_blocks() * 4;
  CHECK(packed_bytes == dense_bytes / 2);
  CHECK(packed_bytes + index_bytes == dense_bytes / 2 + 4 * s.kept_blocks());
  // decompression reproduces W (.) M bitwise
  CHECK(decompress_conv1x1(s).data == apply_mask(m.weights[0], *prune_conv1x1_layer(m, 0.5).mask).data);
}

TEST_CASE("dw layer with all-sparse codes packs oc*6 floats") {
  std::mt19937_64 rng(42);
  const Model m = one_dw(rng, 8, 8, 32);
  const LayerPruneResult res = prune_dw_layer(m, 0);
  const ModelIR ir = convert(m, {res});
  const auto& s = std::get<DwSparseIR>(ir.layers[0]);
  CHECK(s.packed.size() == 32u * 6u);
  CHECK(decompress_dw(s).data ==
        apply_dw_codes(m.weights[0], res.grouping, res.codes, dw_pattern_catalog()).data);
}

TEST_CASE("empty model round-trips") {
  ModelIR ir;
  ir.input_shape = {1, 1, 1, 1};
  ir.output_shape = {1, 1, 1, 1};
  const ModelIR back = deserialize(serialize(ir));
  CHECK(models_equal(ir, back));
}

TEST_CASE("fuzzed pruned models round-trip bitwise") {
  std::mt19937_64 rng(43);
  std::uniform_int_distribution<int> cd(1, 40), hd(1, 5);
  std::uniform_real_distribution<double> rd(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    ModelIR ir;
    const int kind = trial % 3;
    if (kind == 0) {
      const Model m = one_conv1x1(rng, hd(rng), hd(rng), cd(rng), cd(rng));
      ir = convert(m, {prune_conv1x1_layer(m, rd(rng))});
    } else if (kind == 1) {
      const Model m = one_dw(rng, hd(rng) + 2, hd(rng) + 2, cd(rng));
      const ChannelGrouping g = partition_channels(m.weights[0].oc);
      ir = convert(m, {prune_dw_layer(m, trial % (g.group_count() + 1))});
    } else {
      ir = convert_dense(tiny_model(rng()));
    }
    const std::vector<std::uint8_t> bytes = serialize(ir);
    const ModelIR back = deserialize(bytes);
    REQUIRE(models_equal(ir, back));
    // serialization is deterministic
    REQUIRE(serialize(back) == bytes);
  }
}

TEST_CASE("a corrupted sd index fails to load, naming the layer") {
  std::mt19937_64 rng(44);
  const Model m = one_conv1x1(rng, 2, 2, 16, 16);
  ModelIR ir = convert(m, {prune_conv1x1_layer(m, 0.5)});
  auto& s = std::get<Conv1x1SparseIR>(ir.layers[0]);
  REQUIRE(!s.sd[0].empty());
  s.sd[0][0] = 99;  // out of bounds; serialize does not police content
  const std::vector<std::uint8_t> bytes = serialize(ir);
  CHECK_THROWS_WITH_AS(deserialize(bytes), doctest::Contains("pw"), IrError);
}

TEST_CASE("bit flips and truncation are rejected") {
  std::mt19937_64 rng(45);
  const Model m = one_conv1x1(rng, 2, 2, 8, 8);
  const std::vector<std::uint8_t> bytes = serialize(convert(m, {prune_conv1x1_layer(m, 0.25)}));

  std::vector<std::uint8_t> flipped = bytes;
  flipped[flipped.size() / 2] ^= 0x40;
  CHECK_THROWS_WITH_AS(deserialize(flipped), doctest::Contains("checksum"), IrError);

  std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + 40);
  CHECK_THROWS_AS(deserialize(truncated), IrError);

  std::vector<std::uint8_t> badmagic = bytes;
  badmagic[0] = 'X';
  CHECK_THROWS_WITH_AS(deserialize(badmagic), doctest::Contains("magic"), IrError);
}

TEST_CASE("validate flags sd bounds at exactly ceil(ic/4)") {
  std::mt19937_64 rng(46);
  const Model m = one_conv1x1(rng, 2, 2, 16, 8);
  ModelIR ir = convert(m, {prune_conv1x1_layer(m, 0.0)});
  CHECK(validate(ir).ok());
  auto& s = std::get<Conv1x1SparseIR>(ir.layers[0]);
  s.sd[0][0] = 4;  // cols == ceil(16/4) == 4, so 4 is one past the end
  const ValidationReport r = validate(ir);
  CHECK(!r.ok());
  bool found = false;
  for (const auto& v : r.violations) found = found || v.find("out of bounds") != std::string::npos;
  CHECK(found);
}

TEST_CASE("validate reports every violation, not just the first") {
  std::mt19937_64 rng(47);
  const Model m = one_dw(rng, 4, 4, 32);
  ModelIR ir = convert(m, {prune_dw_layer(m, 0)});
  auto& s = std::get<DwSparseIR>(ir.layers[0]);
  s.codes.pop_back();              // codes length != group count
  s.bias.pop_back();               // bias length != channels
  const ValidationReport r = validate(ir);
  CHECK(r.violations.size() >= 2);
}

TEST_CASE("validate flags shape chain breaks") {
  Model m = tiny_model(48);
  ModelIR ir = convert_dense(m);
  auto& d = std::get<DenseLayerIR>(ir.layers[1]);
  d.in_shape.c += 1;
  const ValidationReport r = validate(ir);
  CHECK(!r.ok());
}
