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

#include "sbnn/ir.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

namespace sbnn {

namespace {

constexpr std::uint8_t kMagic[4] = {'S', 'B', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kTagDense = 1;
constexpr std::uint32_t kTagSparseConv1x1 = 2;
constexpr std::uint32_t kTagSparseDw = 3;

struct Writer {
  std::vector<std::uint8_t> out;

  void u32(std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 24));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out.insert(out.end(), s.begin(), s.end());
  }
  void shape(const Shape& s) {
    u32(static_cast<std::uint32_t>(s.n));
    u32(static_cast<std::uint32_t>(s.h));
    u32(static_cast<std::uint32_t>(s.w));
    u32(static_cast<std::uint32_t>(s.c));
  }
  void floats(const std::vector<float>& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    for (float f : v) f32(f);
  }
};

struct Reader {
  const std::vector<std::uint8_t>* bytes;
  size_t pos = 0;
  std::string context = "stream";

  void need(size_t n) const {
    if (pos + n > bytes->size())
      throw IrError("truncated stream while reading " + context);
  }
  std::uint32_t u32() {
    need(4);
    const std::uint8_t* p = bytes->data() + pos;
    pos += 4;
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string str() {
    const std::uint32_t len = u32();
    need(len);
    std::string s(reinterpret_cast<const char*>(bytes->data() + pos), len);
    pos += len;
    return s;
  }
  Shape shape() {
    Shape s;
    s.n = static_cast<int>(u32());
    s.h = static_cast<int>(u32());
    s.w = static_cast<int>(u32());
    s.c = static_cast<int>(u32());
    return s;
  }
  std::vector<float> floats(std::uint32_t max_count = 1u << 28) {
    const std::uint32_t count = u32();
    if (count > max_count) throw IrError("float array too large in " + context);
    need(static_cast<size_t>(count) * 4);
    std::vector<float> v(count);
    for (std::uint32_t i = 0; i < count; ++i) v[i] = f32();
    return v;
  }
};

int dw_code_taps(std::uint32_t code) { return code == kDwDenseCode ? 9 : 6; }

void write_dense(Writer& w, const DenseLayerIR& l) {
  w.str(l.name);
  w.u32(static_cast<std::uint32_t>(l.op));
  w.shape(l.in_shape);
  w.shape(l.out_shape);
  w.u32(static_cast<std::uint32_t>(l.stride));
  w.u32(static_cast<std::uint32_t>(l.pad));
  w.u32(static_cast<std::uint32_t>(l.act));
  w.u32(static_cast<std::uint32_t>(l.pool_kind));
  w.u32(static_cast<std::uint32_t>(l.pool_kh));
  w.u32(static_cast<std::uint32_t>(l.pool_kw));
  w.u32(static_cast<std::uint32_t>(l.weight.oc));
  w.u32(static_cast<std::uint32_t>(l.weight.kh));
  w.u32(static_cast<std::uint32_t>(l.weight.kw));
  w.u32(static_cast<std::uint32_t>(l.weight.ic));
  w.floats(l.weight.data);
  w.floats(l.bias);
}

DenseLayerIR read_dense(Reader& r) {
  DenseLayerIR l;
  l.name = r.str();
  r.context = "layer '" + l.name + "'";
  const std::uint32_t op = r.u32();
  if (op > static_cast<std::uint32_t>(OpKind::Concat))
    throw IrError(r.context + ": unknown op kind " + std::to_string(op));
  l.op = static_cast<OpKind>(op);
  l.in_shape = r.shape();
  l.out_shape = r.shape();
  l.stride = static_cast<int>(r.u32());
  l.pad = static_cast<int>(r.u32());
  const std::uint32_t act = r.u32();
  if (act > 2) throw IrError(r.context + ": bad activation code");
  l.act = static_cast<ActKind>(act);
  const std::uint32_t pk = r.u32();
  if (pk > 2) throw IrError(r.context + ": bad pool kind");
  l.pool_kind = static_cast<PoolKind>(pk);
  l.pool_kh = static_cast<int>(r.u32());
  l.pool_kw = static_cast<int>(r.u32());
  l.weight.oc = static_cast<int>(r.u32());
  l.weight.kh = static_cast<int>(r.u32());
  l.weight.kw = static_cast<int>(r.u32());
  l.weight.ic = static_cast<int>(r.u32());
  l.weight.data = r.floats();
  l.bias = r.floats();
  return l;
}

void write_conv1x1(Writer& w, const Conv1x1SparseIR& l) {
  w.str(l.name);
  w.shape(l.in_shape);
  w.shape(l.out_shape);
  w.u32(static_cast<std::uint32_t>(l.oc));
  w.u32(static_cast<std::uint32_t>(l.ic));
  w.u32(static_cast<std::uint32_t>(l.go));
  w.u32(static_cast<std::uint32_t>(l.gi));
  w.u32(static_cast<std::uint32_t>(l.act));
  w.u32(static_cast<std::uint32_t>(l.sd.size()));
  for (const auto& row : l.sd) {
    w.u32(static_cast<std::uint32_t>(row.size()));
    for (std::uint32_t v : row) w.u32(v);
  }
  w.floats(l.packed);
  w.floats(l.bias);
}

Conv1x1SparseIR read_conv1x1(Reader& r) {
  Conv1x1SparseIR l;
  l.name = r.str();
  r.context = "layer '" + l.name + "'";
  l.in_shape = r.shape();
  l.out_shape = r.shape();
  l.oc = static_cast<int>(r.u32());
  l.ic = static_cast<int>(r.u32());
  l.go = static_cast<int>(r.u32());
  l.gi = static_cast<int>(r.u32());
  const std::uint32_t act = r.u32();
  if (act > 2) throw IrError(r.context + ": bad activation code");
  l.act = static_cast<ActKind>(act);
  const std::uint32_t rows = r.u32();
  if (rows > (1u << 24)) throw IrError(r.context + ": sd row count too large");
  l.sd.resize(rows);
  for (auto& row : l.sd) {
    const std::uint32_t cnt = r.u32();
    if (cnt > (1u << 24)) throw IrError(r.context + ": sd entry count too large");
    row.resize(cnt);
    for (auto& v : row) v = r.u32();
  }
  l.packed = r.floats();
  l.bias = r.floats();
  return l;
}

void write_dw(Writer& w, const DwSparseIR& l) {
  w.str(l.name);
  w.shape(l.in_shape);
  w.shape(l.out_shape);
  w.u32(static_cast<std::uint32_t>(l.stride));
  w.u32(static_cast<std::uint32_t>(l.pad));
  w.u32(static_cast<std::uint32_t>(l.act));
  w.u32(static_cast<std::uint32_t>(l.grouping.total));
  w.u32(static_cast<std::uint32_t>(l.grouping.groups.size()));
  for (int g : l.grouping.groups) w.u32(static_cast<std::uint32_t>(g));
  w.u32(static_cast<std::uint32_t>(l.codes.size()));
  for (std::uint32_t c : l.codes) w.u32(c);
  w.floats(l.packed);
  w.floats(l.bias);
}

DwSparseIR read_dw(Reader& r) {
  DwSparseIR l;
  l.name = r.str();
  r.context = "layer '" + l.name + "'";
  l.in_shape = r.shape();
  l.out_shape = r.shape();
  l.stride = static_cast<int>(r.u32());
  l.pad = static_cast<int>(r.u32());
  const std::uint32_t act = r.u32();
  if (act > 2) throw IrError(r.context + ": bad activation code");
  l.act = static_cast<ActKind>(act);
  l.grouping.total = static_cast<int>(r.u32());
  const std::uint32_t ngroups = r.u32();
  if (ngroups > (1u << 20)) throw IrError(r.context + ": group count too large");
  l.grouping.groups.resize(ngroups);
  for (int& g : l.grouping.groups) g = static_cast<int>(r.u32());
  const std::uint32_t ncodes = r.u32();
  if (ncodes > (1u << 20)) throw IrError(r.context + ": code count too large");
  l.codes.resize(ncodes);
  for (auto& c : l.codes) c = r.u32();
  l.packed = r.floats();
  l.bias = r.floats();
  return l;
}

void validate_layer(const LayerIR& layer, std::vector<std::string>& out) {
  if (const auto* d = std::get_if<DenseLayerIR>(&layer)) {
    const std::string where = "layer '" + d->name + "': ";
    if (static_cast<std::int64_t>(d->weight.data.size()) != d->weight.count())
      out.push_back(where + "weight blob length mismatch");
    if (!d->bias.empty() && d->weight.oc > 0 &&
        static_cast<int>(d->bias.size()) != d->weight.oc)
      out.push_back(where + "bias length mismatch");
    if (d->op == OpKind::DwConv3x3 && d->in_shape.c != d->out_shape.c)
      out.push_back(where + "depthwise channel count changes across the layer");
    if (d->op == OpKind::Concat) out.push_back(where + "concat is not executable");
  } else if (const auto* s = std::get_if<Conv1x1SparseIR>(&layer)) {
    const std::string where = "layer '" + s->name + "': ";
    if (s->go != 4 || s->gi != 4) out.push_back(where + "block size must be 4x4");
    const int rows = (s->oc + 3) / 4;
    const int cols = (s->ic + 3) / 4;
    if (static_cast<int>(s->sd.size()) != rows)
      out.push_back(where + "sd row count != ceil(oc/4)");
    std::int64_t kept = 0;
    for (size_t r = 0; r < s->sd.size(); ++r) {
      const auto& row = s->sd[r];
      kept += static_cast<std::int64_t>(row.size());
      for (size_t k = 0; k < row.size(); ++k) {
        if (row[k] >= static_cast<std::uint32_t>(cols))
          out.push_back(where + "sd[" + std::to_string(r) + "][" + std::to_string(k) +
                        "] = " + std::to_string(row[k]) + " out of bounds (cols = " +
                        std::to_string(cols) + ")");
        if (k > 0 && row[k] <= row[k - 1])
          out.push_back(where + "sd row " + std::to_string(r) + " not strictly ascending");
      }
    }
    if (static_cast<std::int64_t>(s->packed.size()) != kept * 16)
      out.push_back(where + "packed length != 16 * kept blocks");
    if (static_cast<int>(s->bias.size()) != s->oc) out.push_back(where + "bias length != oc");
    if (s->in_shape.c != s->ic || s->out_shape.c != s->oc)
      out.push_back(where + "shape/channel mismatch");
  } else if (const auto* dw = std::get_if<DwSparseIR>(&layer)) {
    const std::string where = "layer '" + dw->name + "': ";
    if (dw->codes.size() != dw->grouping.groups.size())
      out.push_back(where + "codes length != group count");
    for (int g : dw->grouping.groups)
      if (g != 4 && g != 8 && g != 16) out.push_back(where + "group width must be 4, 8 or 16");
    std::int64_t expect_packed = 0;
    for (size_t g = 0; g < dw->codes.size(); ++g) {
      if (dw->codes[g] > kDwDenseCode)
        out.push_back(where + "pattern code " + std::to_string(dw->codes[g]) +
                      " out of range");
      if (g < dw->grouping.groups.size())
        expect_packed += static_cast<std::int64_t>(dw_code_taps(dw->codes[g])) *
                         dw->grouping.groups[g];
    }
    if (dw->codes.size() == dw->grouping.groups.size() &&
        static_cast<std::int64_t>(dw->packed.size()) != expect_packed)
      out.push_back(where + "packed length inconsistent with codes");
    if (static_cast<int>(dw->bias.size()) != dw->grouping.total)
      out.push_back(where + "bias length != channel count");
    if (dw->in_shape.c != dw->grouping.total || dw->out_shape.c != dw->grouping.total)
      out.push_back(where + "shape/grouping channel mismatch");
    if (dw->grouping.padded_total() < dw->grouping.total)
      out.push_back(where + "grouping does not cover channels");
  }
}

struct ShapeIO {
  Shape in, out;
};

ShapeIO layer_shapes(const LayerIR& l) {
  if (const auto* d = std::get_if<DenseLayerIR>(&l)) return {d->in_shape, d->out_shape};
  if (const auto* s = std::get_if<Conv1x1SparseIR>(&l)) return {s->in_shape, s->out_shape};
  const auto& dw = std::get<DwSparseIR>(l);
  return {dw.in_shape, dw.out_shape};
}

}  // namespace

const std::string& layer_ir_name(const LayerIR& l) {
  if (const auto* d = std::get_if<DenseLayerIR>(&l)) return d->name;
  if (const auto* s = std::get_if<Conv1x1SparseIR>(&l)) return s->name;
  return std::get<DwSparseIR>(l).name;
}

std::int64_t Conv1x1SparseIR::kept_blocks() const {
  std::int64_t kept = 0;
  for (const auto& row : sd) kept += static_cast<std::int64_t>(row.size());
  return kept;
}

ModelIR convert(const Model& m, const std::vector<LayerPruneResult>& results) {
  if (!results.empty() && static_cast<int>(results.size()) != m.layer_count())
    throw std::invalid_argument("convert: prune results length mismatch");

  ModelIR ir;
  ir.input_shape = m.input_shape();
  ir.output_shape = m.output_shape();

  for (int li = 0; li < m.layer_count(); ++li) {
    const LayerDesc& l = m.layers[static_cast<size_t>(li)];
    const WeightTensor& w = m.weights[static_cast<size_t>(li)];
    const std::vector<float>& bias = m.biases[static_cast<size_t>(li)];
    const LayerPruneResult* res =
        results.empty() ? nullptr : &results[static_cast<size_t>(li)];

    if (res && res->pruned && l.op == OpKind::Conv1x1) {
      const BlockMask& mask = *res->mask;
      Conv1x1SparseIR s;
      s.name = l.name;
      s.in_shape = l.in_shape;
      s.out_shape = l.out_shape;
      s.oc = w.oc;
      s.ic = w.ic;
      s.go = mask.go;
      s.gi = mask.gi;
      s.act = l.act;
      s.sd.resize(static_cast<size_t>(mask.rows));
      for (int r = 0; r < mask.rows; ++r) {
        for (int c = 0; c < mask.cols; ++c) {
          if (!mask.kept(r, c)) continue;
          s.sd[static_cast<size_t>(r)].push_back(static_cast<std::uint32_t>(c));
          for (int i = 0; i < 4; ++i) {
            for (int o = 0; o < 4; ++o) {
              const int oo = r * 4 + o, ii = c * 4 + i;
              s.packed.push_back(oo < w.oc && ii < w.ic ? w.at(oo, 0, 0, ii) : 0.0f);
            }
          }
        }
      }
      s.bias = bias.empty() ? std::vector<float>(static_cast<size_t>(w.oc), 0.0f) : bias;
      ir.layers.emplace_back(std::move(s));
      continue;
    }

    if (res && res->pruned && l.op == OpKind::DwConv3x3) {
      DwSparseIR s;
      s.name = l.name;
      s.in_shape = l.in_shape;
      s.out_shape = l.out_shape;
      s.stride = l.stride;
      s.pad = l.pad;
      s.act = l.act;
      s.grouping = res->grouping;
      s.codes.assign(res->codes.begin(), res->codes.end());
      const PatternCatalog& cat = dw_pattern_catalog();
      for (int g = 0; g < s.grouping.group_count(); ++g) {
        const int gw = s.grouping.groups[g];
        const int begin = s.grouping.channel_offset(g);
        const std::uint32_t code = s.codes[static_cast<size_t>(g)];
        for (int t = 0; t < 9; ++t) {
          if (code != kDwDenseCode && !cat.at(static_cast<int>(code)).kept(t / 3, t % 3))
            continue;
          for (int lane = 0; lane < gw; ++lane) {
            const int ch = begin + lane;
            s.packed.push_back(ch < w.oc ? w.data[static_cast<size_t>(ch) * 9 + t] : 0.0f);
          }
        }
      }
      s.bias = bias.empty() ? std::vector<float>(static_cast<size_t>(w.oc), 0.0f) : bias;
      ir.layers.emplace_back(std::move(s));
      continue;
    }

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
    if (res && res->pruned && l.op == OpKind::Conv2d) {
      d.weight = apply_conv3x3_mask(w, *res->mask, res->codes, conv59_pattern_catalog());
    } else {
      d.weight = w;
    }
    d.bias = bias;
    ir.layers.emplace_back(std::move(d));
  }
  return ir;
}

ModelIR convert_dense(const Model& m) { return convert(m, {}); }

std::vector<std::uint8_t> serialize(const ModelIR& ir) {
  Writer w;
  w.out.insert(w.out.end(), kMagic, kMagic + 4);
  w.u32(ir.version);
  w.u32(static_cast<std::uint32_t>(ir.layers.size()));
  w.str(ir.input_name);
  w.shape(ir.input_shape);
  w.str(ir.output_name);
  w.shape(ir.output_shape);

  for (const LayerIR& layer : ir.layers) {
    Writer body;
    std::uint32_t tag = 0;
    if (const auto* d = std::get_if<DenseLayerIR>(&layer)) {
      tag = kTagDense;
      write_dense(body, *d);
    } else if (const auto* s = std::get_if<Conv1x1SparseIR>(&layer)) {
      tag = kTagSparseConv1x1;
      write_conv1x1(body, *s);
    } else {
      tag = kTagSparseDw;
      write_dw(body, std::get<DwSparseIR>(layer));
    }
    w.u32(tag);
    w.u32(static_cast<std::uint32_t>(body.out.size()));
    w.out.insert(w.out.end(), body.out.begin(), body.out.end());
  }

  const std::uint32_t crc = static_cast<std::uint32_t>(
      crc32(0L, w.out.data(), static_cast<uInt>(w.out.size())));
  w.u32(crc);
  return w.out;
}

ModelIR deserialize(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8) throw IrError("stream too short for header");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw IrError("bad magic, not an IR stream");

  const std::uint32_t stored_crc =
      static_cast<std::uint32_t>(bytes[bytes.size() - 4]) |
      (static_cast<std::uint32_t>(bytes[bytes.size() - 3]) << 8) |
      (static_cast<std::uint32_t>(bytes[bytes.size() - 2]) << 16) |
      (static_cast<std::uint32_t>(bytes[bytes.size() - 1]) << 24);
  const std::uint32_t crc = static_cast<std::uint32_t>(
      crc32(0L, bytes.data(), static_cast<uInt>(bytes.size() - 4)));
  if (crc != stored_crc) throw IrError("checksum mismatch");

  Reader r{&bytes, 4, "header"};
  ModelIR ir;
  ir.version = r.u32();
  if (ir.version != kVersion)
    throw IrError("unsupported version " + std::to_string(ir.version));
  const std::uint32_t layer_count = r.u32();
  if (layer_count > (1u << 20)) throw IrError("layer count too large");
  ir.input_name = r.str();
  ir.input_shape = r.shape();
  ir.output_name = r.str();
  ir.output_shape = r.shape();

  for (std::uint32_t i = 0; i < layer_count; ++i) {
    r.context = "layer record " + std::to_string(i);
    const std::uint32_t tag = r.u32();
    const std::uint32_t len = r.u32();
    r.need(len);
    const size_t end = r.pos + len;
    switch (tag) {
      case kTagDense:
        ir.layers.emplace_back(read_dense(r));
        break;
      case kTagSparseConv1x1:
        ir.layers.emplace_back(read_conv1x1(r));
        break;
      case kTagSparseDw:
        ir.layers.emplace_back(read_dw(r));
        break;
      default:
        throw IrError("unknown layer tag " + std::to_string(tag));
    }
    if (r.pos != end)
      throw IrError("layer '" + layer_ir_name(ir.layers.back()) +
                    "': record length mismatch");
  }
  if (r.pos != bytes.size() - 4) throw IrError("trailing bytes after last layer");

  const ValidationReport report = validate(ir);
  if (!report.ok()) throw IrError("invalid model: " + report.violations.front());
  return ir;
}

void save_ir(const ModelIR& ir, const std::filesystem::path& path) {
  const std::vector<std::uint8_t> bytes = serialize(ir);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("short write on " + path.string());
}

ModelIR load_ir(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string());
  f.seekg(0, std::ios::end);
  const auto size = static_cast<std::int64_t>(f.tellg());
  f.seekg(0);
  std::vector<std::uint8_t> bytes(static_cast<size_t>(size));
  f.read(reinterpret_cast<char*>(bytes.data()), size);
  if (!f) throw std::runtime_error("short read on " + path.string());
  return deserialize(bytes);
}

ValidationReport validate(const ModelIR& ir) {
  ValidationReport report;
  for (const LayerIR& layer : ir.layers) validate_layer(layer, report.violations);
  for (size_t i = 0; i + 1 < ir.layers.size(); ++i) {
    const Shape prev = layer_shapes(ir.layers[i]).out;
    const Shape next = layer_shapes(ir.layers[i + 1]).in;
    if (!(prev == next))
      report.violations.push_back("layer '" + layer_ir_name(ir.layers[i + 1]) +
                                  "': in_shape does not chain from previous layer");
  }
  if (!ir.layers.empty()) {
    if (!(layer_shapes(ir.layers.front()).in == ir.input_shape))
      report.violations.push_back("input binding shape does not match first layer");
    if (!(layer_shapes(ir.layers.back()).out == ir.output_shape))
      report.violations.push_back("output binding shape does not match last layer");
  }
  return report;
}

WeightTensor decompress_conv1x1(const Conv1x1SparseIR& l) {
  WeightTensor w = WeightTensor::zeros(l.oc, 1, 1, l.ic);
  size_t p = 0;
  for (size_t r = 0; r < l.sd.size(); ++r) {
    for (const std::uint32_t c : l.sd[r]) {
      for (int i = 0; i < 4; ++i) {
        for (int o = 0; o < 4; ++o) {
          const int oo = static_cast<int>(r) * 4 + o;
          const int ii = static_cast<int>(c) * 4 + i;
          const float v = l.packed[p++];
          if (oo < l.oc && ii < l.ic) w.at(oo, 0, 0, ii) = v;
        }
      }
    }
  }
  return w;
}

WeightTensor decompress_dw(const DwSparseIR& l) {
  const int oc = l.grouping.total;
  WeightTensor w = WeightTensor::zeros(oc, 3, 3, 1);
  const PatternCatalog& cat = dw_pattern_catalog();
  size_t p = 0;
  for (int g = 0; g < l.grouping.group_count(); ++g) {
    const int gw = l.grouping.groups[static_cast<size_t>(g)];
    const int begin = l.grouping.channel_offset(g);
    const std::uint32_t code = l.codes[static_cast<size_t>(g)];
    for (int t = 0; t < 9; ++t) {
      if (code != kDwDenseCode && !cat.at(static_cast<int>(code)).kept(t / 3, t % 3)) continue;
      for (int lane = 0; lane < gw; ++lane) {
        const float v = l.packed[p++];
        const int ch = begin + lane;
        if (ch < oc) w.data[static_cast<size_t>(ch) * 9 + t] = v;
      }
    }
  }
  return w;
}

Model decompress_to_dense_model(const ModelIR& ir) {
  Model m;
  m.name = "decompressed";
  for (const LayerIR& layer : ir.layers) {
    LayerDesc l;
    WeightTensor w;
    std::vector<float> bias;
    if (const auto* d = std::get_if<DenseLayerIR>(&layer)) {
      l.name = d->name;
      l.op = d->op;
      l.in_shape = d->in_shape;
      l.out_shape = d->out_shape;
      l.stride = d->stride;
      l.pad = d->pad;
      l.act = d->act;
      l.pool_kind = d->pool_kind;
      l.pool_kh = d->pool_kh;
      l.pool_kw = d->pool_kw;
      w = d->weight;
      bias = d->bias;
    } else if (const auto* s = std::get_if<Conv1x1SparseIR>(&layer)) {
      l.name = s->name;
      l.op = OpKind::Conv1x1;
      l.in_shape = s->in_shape;
      l.out_shape = s->out_shape;
      l.act = s->act;
      w = decompress_conv1x1(*s);
      bias = s->bias;
    } else {
      const auto& dw = std::get<DwSparseIR>(layer);
      l.name = dw.name;
      l.op = OpKind::DwConv3x3;
      l.in_shape = dw.in_shape;
      l.out_shape = dw.out_shape;
      l.stride = dw.stride;
      l.pad = dw.pad;
      l.act = dw.act;
      w = decompress_dw(dw);
      bias = dw.bias;
    }
    m.layers.push_back(std::move(l));
    m.weights.push_back(std::move(w));
    m.biases.push_back(std::move(bias));
  }
  return m;
}

}  // namespace sbnn
