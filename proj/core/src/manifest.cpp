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

#include "sbnn/manifest.hpp"

#include <fstream>
#include <random>
#include <stdexcept>

#include "json.hpp"

namespace sbnn {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(OpKind op) {
  switch (op) {
    case OpKind::Conv2d: return "conv2d";
    case OpKind::DwConv3x3: return "dwconv";
    case OpKind::Conv1x1: return "conv1x1";
    case OpKind::Fc: return "fc";
    case OpKind::Pool: return "pool";
    case OpKind::Activation: return "activation";
    case OpKind::Softmax: return "softmax";
    case OpKind::Concat: return "concat";
  }
  return "?";
}

const char* to_string(ActKind a) {
  switch (a) {
    case ActKind::None: return "none";
    case ActKind::Relu: return "relu";
    case ActKind::Relu6: return "relu6";
  }
  return "?";
}

OpKind op_kind_from_string(const std::string& s) {
  if (s == "conv2d") return OpKind::Conv2d;
  if (s == "dwconv") return OpKind::DwConv3x3;
  if (s == "conv1x1") return OpKind::Conv1x1;
  if (s == "fc") return OpKind::Fc;
  if (s == "pool") return OpKind::Pool;
  if (s == "activation") return OpKind::Activation;
  if (s == "softmax") return OpKind::Softmax;
  if (s == "concat") return OpKind::Concat;
  throw std::invalid_argument("unknown op kind: " + s);
}

ActKind act_kind_from_string(const std::string& s) {
  if (s == "none" || s.empty()) return ActKind::None;
  if (s == "relu") return ActKind::Relu;
  if (s == "relu6") return ActKind::Relu6;
  throw std::invalid_argument("unknown activation: " + s);
}

Shape Model::input_shape() const {
  if (layers.empty()) return {};
  return layers.front().in_shape;
}

Shape Model::output_shape() const {
  if (layers.empty()) return {};
  return layers.back().out_shape;
}

namespace {

Shape expected_weight_shape(const LayerDesc& l, int* kh, int* kw, int* ic, int* oc) {
  switch (l.op) {
    case OpKind::Conv2d:
      *oc = l.out_shape.c; *kh = 3; *kw = 3; *ic = l.in_shape.c;
      break;
    case OpKind::DwConv3x3:
      *oc = l.out_shape.c; *kh = 3; *kw = 3; *ic = 1;
      break;
    case OpKind::Conv1x1:
      *oc = l.out_shape.c; *kh = 1; *kw = 1; *ic = l.in_shape.c;
      break;
    case OpKind::Fc:
      *oc = l.out_shape.c; *kh = 1; *kw = 1;
      *ic = l.in_shape.c * l.in_shape.h * l.in_shape.w;
      break;
    default:
      *oc = *kh = *kw = *ic = 0;
  }
  return {};
}

}  // namespace

std::vector<std::string> Model::check() const {
  std::vector<std::string> problems;
  if (layers.size() != weights.size() || layers.size() != biases.size())
    problems.push_back("layers/weights/biases arrays are not the same length");
  for (size_t i = 0; i + 1 < layers.size(); ++i) {
    if (!(layers[i].out_shape == layers[i + 1].in_shape))
      problems.push_back("layer '" + layers[i + 1].name +
                         "': in_shape does not chain from previous out_shape");
  }
  for (size_t i = 0; i < layers.size() && i < weights.size(); ++i) {
    const LayerDesc& l = layers[i];
    if (!l.has_weights()) continue;
    int kh = 0, kw = 0, ic = 0, oc = 0;
    expected_weight_shape(l, &kh, &kw, &ic, &oc);
    const WeightTensor& w = weights[i];
    if (w.oc != oc || w.kh != kh || w.kw != kw || w.ic != ic ||
        static_cast<std::int64_t>(w.data.size()) != w.count())
      problems.push_back("layer '" + l.name + "': weight shape/blob size mismatch");
    if (i < biases.size() && !biases[i].empty() &&
        static_cast<int>(biases[i].size()) != oc)
      problems.push_back("layer '" + l.name + "': bias length mismatch");
  }
  return problems;
}

std::vector<float> load_blob(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open blob: " + path.string());
  f.seekg(0, std::ios::end);
  const auto bytes = static_cast<std::int64_t>(f.tellg());
  f.seekg(0);
  if (bytes % 4 != 0)
    throw std::runtime_error("blob size not a multiple of 4: " + path.string());
  std::vector<float> v(static_cast<size_t>(bytes / 4));
  f.read(reinterpret_cast<char*>(v.data()), bytes);
  if (!f) throw std::runtime_error("short read on blob: " + path.string());
  return v;
}

void save_blob(const fs::path& path, const std::vector<float>& v) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write blob: " + path.string());
  f.write(reinterpret_cast<const char*>(v.data()),
          static_cast<std::streamsize>(v.size() * 4));
  if (!f) throw std::runtime_error("short write on blob: " + path.string());
}

namespace {

Shape shape_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 4)
    throw std::invalid_argument(where + ": shape must be [n,h,w,c]");
  return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

json shape_to_json(const Shape& s) { return json::array({s.n, s.h, s.w, s.c}); }

}  // namespace

namespace {

Model parse_manifest(const json& j, const fs::path& base) {
  Model m;
  m.name = j.value("name", "model");
  if (!j.contains("layers") || !j["layers"].is_array())
    throw std::invalid_argument("manifest: missing layers[]");
  for (const json& lj : j["layers"]) {
    LayerDesc l;
    l.name = lj.at("name").get<std::string>();
    l.op = op_kind_from_string(lj.at("op").get<std::string>());
    l.in_shape = shape_from_json(lj.at("in_shape"), l.name);
    l.out_shape = shape_from_json(lj.at("out_shape"), l.name);
    l.stride = lj.value("stride", 1);
    l.pad = lj.value("pad", 0);
    l.act = act_kind_from_string(lj.value("act", "none"));
    if (lj.contains("pool_kind")) {
      const std::string pk = lj["pool_kind"].get<std::string>();
      l.pool_kind = pk == "max" ? PoolKind::Max : PoolKind::Avg;
    }
    l.pool_kh = lj.value("pool_kh", 0);
    l.pool_kw = lj.value("pool_kw", 0);
    l.weight_blob = lj.value("weight_blob", "");
    l.bias_blob = lj.value("bias_blob", "");
    l.sparse_eligible = lj.value("sparse", true);

    WeightTensor w;
    std::vector<float> b;
    if (l.has_weights()) {
      if (l.weight_blob.empty())
        throw std::invalid_argument("layer '" + l.name + "': weight_blob required");
      int kh = 0, kw = 0, ic = 0, oc = 0;
      expected_weight_shape(l, &kh, &kw, &ic, &oc);
      w.oc = oc; w.kh = kh; w.kw = kw; w.ic = ic;
      w.data = load_blob(base / l.weight_blob);
      if (static_cast<std::int64_t>(w.data.size()) != w.count())
        throw std::invalid_argument("layer '" + l.name + "': weight blob has " +
                                    std::to_string(w.data.size()) + " floats, expected " +
                                    std::to_string(w.count()));
      if (!l.bias_blob.empty()) {
        b = load_blob(base / l.bias_blob);
        if (static_cast<int>(b.size()) != oc)
          throw std::invalid_argument("layer '" + l.name + "': bias blob length mismatch");
      }
    }
    m.layers.push_back(std::move(l));
    m.weights.push_back(std::move(w));
    m.biases.push_back(std::move(b));
  }

  auto problems = m.check();
  if (!problems.empty()) throw std::invalid_argument("manifest: " + problems.front());
  return m;
}

}  // namespace

Model load_model(const fs::path& manifest_path, const fs::path& blob_dir) {
  std::ifstream f(manifest_path);
  if (!f) throw std::runtime_error("cannot open manifest: " + manifest_path.string());
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("manifest parse error: " + std::string(e.what()));
  }
  const fs::path base = blob_dir.empty() ? manifest_path.parent_path() : blob_dir;
  try {
    return parse_manifest(j, base);
  } catch (const json::exception& e) {
    throw std::invalid_argument("manifest schema error: " + std::string(e.what()));
  }
}

void save_model(const Model& m, const fs::path& dir) {
  fs::create_directories(dir);
  json j;
  j["name"] = m.name;
  j["layers"] = json::array();
  for (int i = 0; i < m.layer_count(); ++i) {
    const LayerDesc& l = m.layers[i];
    json lj;
    lj["name"] = l.name;
    lj["op"] = to_string(l.op);
    lj["in_shape"] = shape_to_json(l.in_shape);
    lj["out_shape"] = shape_to_json(l.out_shape);
    lj["stride"] = l.stride;
    lj["pad"] = l.pad;
    if (l.act != ActKind::None) lj["act"] = to_string(l.act);
    if (l.op == OpKind::Pool) {
      lj["pool_kind"] = l.pool_kind == PoolKind::Max ? "max" : "avg";
      lj["pool_kh"] = l.pool_kh;
      lj["pool_kw"] = l.pool_kw;
    }
    if (!l.sparse_eligible) lj["sparse"] = false;
    if (l.has_weights()) {
      const std::string wname = l.name + ".w.bin";
      const std::string bname = l.name + ".b.bin";
      save_blob(dir / wname, m.weights[i].data);
      lj["weight_blob"] = wname;
      if (!m.biases[i].empty()) {
        save_blob(dir / bname, m.biases[i]);
        lj["bias_blob"] = bname;
      }
    }
    j["layers"].push_back(std::move(lj));
  }
  std::ofstream f(dir / "manifest.json", std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write manifest in " + dir.string());
  f << j.dump(2) << "\n";
}

namespace {

struct ModelBuilder {
  Model m;
  std::mt19937_64 rng;
  Shape cur;

  explicit ModelBuilder(std::uint64_t seed) : rng(seed) {}

  std::vector<float> randn(std::int64_t count, float stddev) {
    std::normal_distribution<float> d(0.0f, stddev);
    std::vector<float> v(static_cast<size_t>(count));
    for (float& x : v) x = d(rng);
    return v;
  }

  void add_weighted(const std::string& name, OpKind op, Shape out, int stride, int pad,
                    ActKind act) {
    LayerDesc l;
    l.name = name;
    l.op = op;
    l.in_shape = cur;
    l.out_shape = out;
    l.stride = stride;
    l.pad = pad;
    l.act = act;
    int kh = 0, kw = 0, ic = 0, oc = 0;
    expected_weight_shape(l, &kh, &kw, &ic, &oc);
    WeightTensor w;
    w.oc = oc; w.kh = kh; w.kw = kw; w.ic = ic;
    const float stddev = std::sqrt(2.0f / static_cast<float>(kh * kw * ic));
    w.data = randn(w.count(), stddev);
    m.layers.push_back(std::move(l));
    m.weights.push_back(std::move(w));
    m.biases.push_back(randn(oc, 0.05f));
    cur = out;
  }

  void conv3x3(const std::string& name, int oc, int stride) {
    add_weighted(name, OpKind::Conv2d, {cur.n, cur.h / stride, cur.w / stride, oc},
                 stride, 1, ActKind::Relu6);
  }
  void dw(const std::string& name, int stride) {
    add_weighted(name, OpKind::DwConv3x3,
                 {cur.n, cur.h / stride, cur.w / stride, cur.c}, stride, 1, ActKind::Relu6);
  }
  void pw(const std::string& name, int oc) {
    add_weighted(name, OpKind::Conv1x1, {cur.n, cur.h, cur.w, oc}, 1, 0, ActKind::Relu6);
  }
  void global_avg_pool(const std::string& name) {
    LayerDesc l;
    l.name = name;
    l.op = OpKind::Pool;
    l.in_shape = cur;
    l.out_shape = {cur.n, 1, 1, cur.c};
    l.pool_kind = PoolKind::Avg;
    l.pool_kh = cur.h;
    l.pool_kw = cur.w;
    l.stride = 1;
    m.layers.push_back(std::move(l));
    m.weights.emplace_back();
    m.biases.emplace_back();
    cur = {cur.n, 1, 1, cur.c};
  }
  void fc(const std::string& name, int out) {
    add_weighted(name, OpKind::Fc, {cur.n, 1, 1, out}, 1, 0, ActKind::None);
  }
  void softmax(const std::string& name) {
    LayerDesc l;
    l.name = name;
    l.op = OpKind::Softmax;
    l.in_shape = cur;
    l.out_shape = cur;
    m.layers.push_back(std::move(l));
    m.weights.emplace_back();
    m.biases.emplace_back();
  }
};

}  // namespace

Model mobilenet_v1_model(std::uint64_t seed) {
  ModelBuilder b(seed);
  b.m.name = "mobilenet_v1";
  b.cur = {1, 224, 224, 3};
  b.conv3x3("conv0", 32, 2);

  const struct { int oc; int stride; } blocks[13] = {
      {64, 1},  {128, 2}, {128, 1}, {256, 2}, {256, 1},  {512, 2},  {512, 1},
      {512, 1}, {512, 1}, {512, 1}, {512, 1}, {1024, 2}, {1024, 1},
  };
  for (int i = 0; i < 13; ++i) {
    b.dw("dw" + std::to_string(i + 1), blocks[i].stride);
    b.pw("pw" + std::to_string(i + 1), blocks[i].oc);
  }
  b.global_avg_pool("avgpool");
  b.fc("fc", 1000);
  b.softmax("softmax");
  return b.m;
}

Model tiny_model(std::uint64_t seed) {
  ModelBuilder b(seed);
  b.m.name = "tiny";
  b.cur = {1, 8, 8, 8};
  b.pw("pw1", 16);
  b.dw("dw1", 1);
  b.pw("pw2", 16);
  b.global_avg_pool("avgpool");
  b.fc("fc", 10);
  b.softmax("softmax");
  return b.m;
}

}  // namespace sbnn
