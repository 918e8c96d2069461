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

#include <chrono>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "sbnn/bench.hpp"
#include "sbnn/engine.hpp"
#include "sbnn/ir.hpp"
#include "sbnn/manifest.hpp"
#include "sbnn/pruner.hpp"
#include "sbnn/rearrange.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;

sbnn::PruneConfig load_prune_config(const std::string& path) {
  sbnn::PruneConfig cfg;
  if (path.empty()) return cfg;
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open config: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("config parse error: " + std::string(e.what()));
  }
  if (j.contains("conv1x1")) {
    cfg.conv1x1.go = j["conv1x1"].value("go", 4);
    cfg.conv1x1.gi = j["conv1x1"].value("gi", 4);
    cfg.conv1x1.rho = j["conv1x1"].value("rho", 0.0);
  }
  if (j.contains("dw")) {
    cfg.dw.go = j["dw"].value("go", 16);
    cfg.dw.dense_groups = j["dw"].value("dense_groups", 0);
  }
  if (j.contains("conv3x3")) {
    cfg.conv3x3.go = j["conv3x3"].value("go", 4);
    cfg.conv3x3.gi = j["conv3x3"].value("gi", 4);
    cfg.conv3x3.rho_conn = j["conv3x3"].value("rho_conn", 0.0);
  }
  if (j.contains("enabled")) {
    cfg.enabled.clear();
    for (const auto& op : j["enabled"])
      cfg.enabled.insert(sbnn::op_kind_from_string(op.get<std::string>()));
  }
  return cfg;
}

json report_to_json(const sbnn::PruneReport& report) {
  json rj;
  rj["flop_sparsity"] = report.flop_sparsity;
  rj["param_sparsity"] = report.param_sparsity;
  rj["layers"] = json::array();
  for (const auto& l : report.layers)
    rj["layers"].push_back({{"name", l.name},
                            {"op", l.op},
                            {"kept_blocks", l.kept_blocks},
                            {"removed_blocks", l.removed_blocks},
                            {"sparsity", l.sparsity},
                            {"delta", l.delta}});
  rj["passed_through"] = report.passed_through;
  return rj;
}

json masks_to_json(const sbnn::Model& m, const std::vector<sbnn::LayerPruneResult>& results,
                   const sbnn::PruneReport& report) {
  json j;
  j["model"] = m.name;
  j["report"] = report_to_json(report);
  j["layers"] = json::array();
  for (const auto& res : results) {
    json lj;
    lj["name"] = res.name;
    lj["op"] = sbnn::to_string(res.op);
    lj["pruned"] = res.pruned;
    if (res.mask) {
      lj["mask"] = {{"rows", res.mask->rows},
                    {"cols", res.mask->cols},
                    {"go", res.mask->go},
                    {"gi", res.mask->gi},
                    {"keep", std::vector<int>(res.mask->keep.begin(), res.mask->keep.end())}};
    }
    if (!res.codes.empty()) lj["codes"] = res.codes;
    if (res.grouping.group_count() > 0) {
      lj["groups"] = res.grouping.groups;
      lj["channels"] = res.grouping.total;
    }
    lj["sparsity"] = res.weight_sparsity;
    lj["delta"] = res.delta;
    j["layers"].push_back(std::move(lj));
  }
  return j;
}

std::vector<sbnn::LayerPruneResult> masks_from_json(const std::string& path,
                                                    const sbnn::Model& m) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open masks file: " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw std::invalid_argument("masks parse error: " + std::string(e.what()));
  }
  if (!j.contains("layers") || !j["layers"].is_array() ||
      j["layers"].size() != m.layers.size())
    throw std::invalid_argument("masks file does not match the manifest layer list");

  std::vector<sbnn::LayerPruneResult> results;
  for (size_t i = 0; i < j["layers"].size(); ++i) {
    const json& lj = j["layers"][i];
    sbnn::LayerPruneResult res;
    res.name = lj.at("name").get<std::string>();
    if (res.name != m.layers[i].name)
      throw std::invalid_argument("masks layer '" + res.name + "' does not match manifest '" +
                                  m.layers[i].name + "'");
    res.op = sbnn::op_kind_from_string(lj.at("op").get<std::string>());
    res.pruned = lj.value("pruned", false);
    if (lj.contains("mask")) {
      sbnn::BlockMask mask;
      mask.rows = lj["mask"].at("rows").get<int>();
      mask.cols = lj["mask"].at("cols").get<int>();
      mask.go = lj["mask"].at("go").get<int>();
      mask.gi = lj["mask"].at("gi").get<int>();
      for (const auto& v : lj["mask"].at("keep"))
        mask.keep.push_back(static_cast<std::uint8_t>(v.get<int>()));
      if (static_cast<int>(mask.keep.size()) != mask.rows * mask.cols)
        throw std::invalid_argument("masks layer '" + res.name + "': keep length mismatch");
      res.mask = std::move(mask);
    }
    if (lj.contains("codes")) res.codes = lj["codes"].get<std::vector<int>>();
    if (lj.contains("groups")) {
      res.grouping.groups = lj["groups"].get<std::vector<int>>();
      res.grouping.total = lj.value("channels", m.layers[i].out_shape.c);
    }
    results.push_back(std::move(res));
  }
  return results;
}

int cmd_prune(const std::string& manifest, const std::string& weights,
              const std::string& config, const std::string& out) {
  const sbnn::Model m = sbnn::load_model(manifest, weights);
  const sbnn::PruneConfig cfg = load_prune_config(config);
  auto [results, report] = sbnn::network_prune(m, cfg);
  const json j = masks_to_json(m, results, report);
  if (!out.empty()) {
    std::ofstream f(out, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + out);
    f << j.dump(2) << "\n";
    std::cout << j["report"].dump(2) << "\n";
  } else {
    std::cout << j.dump(2) << "\n";
  }
  return kExitOk;
}

int cmd_rearrange(const std::string& manifest, const std::string& weights,
                  const std::string& config, const std::string& out) {
  const sbnn::Model m = sbnn::load_model(manifest, weights);
  sbnn::RearrangeConfig cfg;
  if (!config.empty()) {
    std::ifstream f(config);
    if (!f) throw std::runtime_error("cannot open config: " + config);
    json j;
    f >> j;
    cfg.go = j.value("go", 4);
    cfg.gi = j.value("gi", 4);
    cfg.rho = j.value("rho", 0.5);
    cfg.budget = j.value("budget", static_cast<std::uint64_t>(100000));
  }
  const sbnn::RearrangeOutcome outcome = sbnn::rearrange_model(m, cfg);
  sbnn::save_model(outcome.model, out);

  json plan;
  plan["layers"] = json::array();
  for (size_t i = 0; i < outcome.plan.layers.size(); ++i)
    plan["layers"].push_back({{"name", m.layers[i].name},
                              {"filter_perm", outcome.plan.layers[i].filter_perm},
                              {"channel_perm", outcome.plan.layers[i].channel_perm}});
  std::ofstream pf(std::filesystem::path(out) / "plan.json", std::ios::trunc);
  if (!pf) throw std::runtime_error("cannot write plan.json in " + out);
  pf << plan.dump(2) << "\n";

  json gains = json::array();
  for (const auto& g : outcome.gains)
    gains.push_back({{"layer", g.name},
                     {"identity_retained_l1", g.identity_l1},
                     {"best_retained_l1", g.best_l1}});
  std::cout << gains.dump(2) << "\n";
  return kExitOk;
}

int cmd_convert(const std::string& manifest, const std::string& weights,
                const std::string& masks, const std::string& out) {
  const sbnn::Model m = sbnn::load_model(manifest, weights);
  std::vector<sbnn::LayerPruneResult> results;
  if (!masks.empty()) results = masks_from_json(masks, m);
  const sbnn::ModelIR ir = sbnn::convert(m, results);
  const sbnn::ValidationReport report = sbnn::validate(ir);
  if (!report.ok()) {
    for (const auto& v : report.violations) std::cerr << "error: " << v << "\n";
    return kExitValidation;
  }
  sbnn::save_ir(ir, out);

  // size report: stored weight payload vs the dense equivalent
  std::int64_t dense_bytes = 0, stored_bytes = 0;
  for (const auto& layer : ir.layers) {
    if (const auto* d = std::get_if<sbnn::DenseLayerIR>(&layer)) {
      dense_bytes += static_cast<std::int64_t>(d->weight.data.size()) * 4;
      stored_bytes += static_cast<std::int64_t>(d->weight.data.size()) * 4;
    } else if (const auto* s = std::get_if<sbnn::Conv1x1SparseIR>(&layer)) {
      dense_bytes += static_cast<std::int64_t>(s->oc) * s->ic * 4;
      stored_bytes += static_cast<std::int64_t>(s->packed.size()) * 4 + s->kept_blocks() * 4;
    } else {
      const auto& dw = std::get<sbnn::DwSparseIR>(layer);
      dense_bytes += static_cast<std::int64_t>(dw.grouping.total) * 9 * 4;
      stored_bytes += static_cast<std::int64_t>(dw.packed.size()) * 4;
    }
  }
  json size_report;
  size_report["file"] = out;
  size_report["layers"] = ir.layer_count();
  size_report["dense_weight_bytes"] = dense_bytes;
  size_report["stored_weight_bytes"] = stored_bytes;
  size_report["ratio"] =
      dense_bytes == 0 ? 1.0 : static_cast<double>(stored_bytes) / static_cast<double>(dense_bytes);
  std::cout << size_report.dump(2) << "\n";
  return kExitOk;
}

int cmd_validate(const std::string& model_path) {
  sbnn::ModelIR ir;
  try {
    ir = sbnn::load_ir(model_path);
  } catch (const sbnn::IrError& e) {
    std::cerr << "invalid: " << e.what() << "\n";
    return kExitValidation;
  }
  const sbnn::ValidationReport report = sbnn::validate(ir);
  if (!report.ok()) {
    for (const auto& v : report.violations) std::cerr << "violation: " << v << "\n";
    return kExitValidation;
  }
  std::cout << "ok: " << ir.layer_count() << " layers\n";
  return kExitOk;
}

int cmd_run(const std::string& model_path, const std::string& input,
            const std::string& out, int threads, int reps) {
  const sbnn::ModelIR ir = sbnn::load_ir(model_path);
  sbnn::EngineOptions opts;
  opts.threads = threads;
  const sbnn::ExecutionPlan plan = sbnn::plan_model(ir, opts);

  sbnn::Tensor x;
  x.shape = ir.input_shape;
  x.data = sbnn::load_blob(input);
  if (static_cast<std::int64_t>(x.data.size()) != x.shape.elements())
    throw std::invalid_argument("input blob has " + std::to_string(x.data.size()) +
                                " floats, model expects " +
                                std::to_string(x.shape.elements()));

  std::vector<double> ms;
  sbnn::Tensor y;
  for (int i = 0; i < std::max(1, reps); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    y = sbnn::run_model(ir, x, plan, opts);
    const auto t1 = std::chrono::steady_clock::now();
    ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  std::sort(ms.begin(), ms.end());
  if (!out.empty()) sbnn::save_blob(out, y.data);

  json timing;
  timing["model"] = model_path;
  timing["threads"] = threads;
  timing["runs"] = ms.size();
  timing["total_ms"] = ms[ms.size() / 2];
  timing["output_blob"] = out;
  timing["output_elements"] = y.data.size();
  std::cout << timing.dump(2) << "\n";
  return kExitOk;
}

int cmd_bench(const std::string& config, const std::string& op, const std::string& out,
              std::uint64_t seed, int reps, int warmup, int threads) {
  sbnn::BenchSpec spec;
  spec.op = sbnn::op_kind_from_string(op);
  if (!config.empty()) {
    std::ifstream f(config);
    if (!f) throw std::runtime_error("cannot open config: " + config);
    json j;
    f >> j;
    if (j.contains("op")) spec.op = sbnn::op_kind_from_string(j["op"].get<std::string>());
    if (j.contains("shapes")) {
      spec.shapes.clear();
      for (const auto& s : j["shapes"]) {
        if (!s.is_array() || (s.size() != 4 && s.size() != 5))
          throw std::invalid_argument("bench config: shapes entries must be [h,w,ic,oc(,stride)]");
        spec.shapes.push_back({s[0].get<int>(), s[1].get<int>(), s[2].get<int>(),
                               s[3].get<int>(), s.size() == 5 ? s[4].get<int>() : 1});
      }
    }
    if (j.contains("sparsity")) spec.sparsity = j["sparsity"].get<std::vector<double>>();
    if (j.contains("reps")) spec.reps = j["reps"].get<int>();
    if (j.contains("warmup")) spec.warmup = j["warmup"].get<int>();
  }
  if (reps > 0) spec.reps = reps;
  if (warmup >= 0) spec.warmup = warmup;
  spec.seed = seed;
  spec.threads = threads;

  const std::vector<sbnn::BenchRecord> records = sbnn::run_bench(spec);
  if (!out.empty()) {
    std::ofstream f(out, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + out);
    sbnn::write_csv(f, records);
    std::cout << "wrote " << records.size() << " records to " << out << "\n";
  } else {
    sbnn::write_csv(std::cout, records);
  }
  return kExitOk;
}

json inspect_to_json(const sbnn::ModelIR& ir) {
  json j;
  j["version"] = ir.version;
  j["input"] = {{"name", ir.input_name},
                {"shape", {ir.input_shape.n, ir.input_shape.h, ir.input_shape.w, ir.input_shape.c}}};
  j["output"] = {{"name", ir.output_name},
                 {"shape", {ir.output_shape.n, ir.output_shape.h, ir.output_shape.w, ir.output_shape.c}}};
  j["layers"] = json::array();
  std::int64_t dense_total = 0, eff_total = 0;
  for (const auto& layer : ir.layers) {
    const sbnn::FlopCount f = sbnn::layer_flops(layer);
    dense_total += f.dense_macs;
    eff_total += f.effective_macs;
    json lj;
    lj["name"] = sbnn::layer_ir_name(layer);
    lj["dense_macs"] = f.dense_macs;
    lj["effective_macs"] = f.effective_macs;
    lj["sparsity"] =
        f.dense_macs == 0 ? 0.0 : 1.0 - static_cast<double>(f.effective_macs) / static_cast<double>(f.dense_macs);
    if (const auto* d = std::get_if<sbnn::DenseLayerIR>(&layer)) {
      lj["kind"] = "dense";
      lj["op"] = sbnn::to_string(d->op);
    } else if (const auto* s = std::get_if<sbnn::Conv1x1SparseIR>(&layer)) {
      lj["kind"] = "sparse_conv1x1";
      lj["op"] = "conv1x1";
      lj["kept_blocks"] = s->kept_blocks();
      lj["total_blocks"] = static_cast<std::int64_t>((s->oc + 3) / 4) * ((s->ic + 3) / 4);
    } else {
      const auto& dw = std::get<sbnn::DwSparseIR>(layer);
      lj["kind"] = "sparse_dw";
      lj["op"] = "dwconv";
      lj["codes"] = dw.codes;
      lj["groups"] = dw.grouping.groups;
    }
    j["layers"].push_back(std::move(lj));
  }
  j["totals"] = {{"dense_macs", dense_total},
                 {"effective_macs", eff_total},
                 {"flop_sparsity", dense_total == 0 ? 0.0
                                                    : 1.0 - static_cast<double>(eff_total) /
                                                                static_cast<double>(dense_total)}};
  return j;
}

int cmd_inspect(const std::string& model_path, const std::string& out) {
  const sbnn::ModelIR ir = sbnn::load_ir(model_path);
  const json j = inspect_to_json(ir);

  std::cout << "model: " << model_path << " (version " << ir.version << ", "
            << ir.layer_count() << " layers)\n";
  std::cout << "input " << ir.input_shape.n << "x" << ir.input_shape.h << "x"
            << ir.input_shape.w << "x" << ir.input_shape.c << " -> output "
            << ir.output_shape.n << "x" << ir.output_shape.h << "x" << ir.output_shape.w
            << "x" << ir.output_shape.c << "\n";
  char line[160];
  std::snprintf(line, sizeof(line), "%-12s %-16s %-10s %14s %14s %9s\n", "layer", "kind", "op",
                "dense_macs", "effective", "sparsity");
  std::cout << line;
  for (const auto& lj : j["layers"]) {
    std::snprintf(line, sizeof(line), "%-12s %-16s %-10s %14lld %14lld %8.3f%%\n",
                  lj["name"].get<std::string>().c_str(),
                  lj["kind"].get<std::string>().c_str(), lj["op"].get<std::string>().c_str(),
                  lj["dense_macs"].get<long long>(), lj["effective_macs"].get<long long>(),
                  lj["sparsity"].get<double>() * 100.0);
    std::cout << line;
  }
  const auto& t = j["totals"];
  std::snprintf(line, sizeof(line), "total dense %lld MACs, effective %lld MACs, sparsity %.3f%%\n",
                t["dense_macs"].get<long long>(), t["effective_macs"].get<long long>(),
                t["flop_sparsity"].get<double>() * 100.0);
  std::cout << line;

  if (!out.empty()) {
    std::ofstream f(out, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + out);
    f << j.dump(2) << "\n";
  }
  return kExitOk;
}

int cmd_gen(const std::string& arch, const std::string& out, std::uint64_t seed) {
  sbnn::Model m;
  if (arch == "mobilenet-v1")
    m = sbnn::mobilenet_v1_model(seed);
  else if (arch == "tiny")
    m = sbnn::tiny_model(seed);
  else
    throw std::invalid_argument("unknown arch '" + arch + "' (mobilenet-v1 or tiny)");
  sbnn::save_model(m, out);
  std::cout << "wrote " << m.layer_count() << "-layer " << m.name << " to " << out << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fine-grained group-sparse model pipeline: prune, rearrange, convert, run"};
  app.require_subcommand(1);

  std::string manifest, weights, config, out, masks, model_path, input;
  std::string op = "conv1x1", arch = "mobilenet-v1";
  std::uint64_t seed = 1;
  int threads = 1, reps = 0, warmup = -1;

  auto* prune = app.add_subcommand("prune", "score and mask a dense model");
  prune->add_option("--manifest", manifest)->required();
  prune->add_option("--weights", weights);
  prune->add_option("--config", config);
  prune->add_option("--out", out);

  auto* rearrange = app.add_subcommand("rearrange", "search and apply filter permutations");
  rearrange->add_option("--manifest", manifest)->required();
  rearrange->add_option("--weights", weights);
  rearrange->add_option("--config", config);
  rearrange->add_option("--out", out)->required();

  auto* convert = app.add_subcommand("convert", "pack a pruned model into a .sbnn file");
  convert->add_option("--manifest", manifest)->required();
  convert->add_option("--weights", weights);
  convert->add_option("--masks", masks);
  convert->add_option("--out", out)->required();

  auto* validate = app.add_subcommand("validate", "structural checks on a .sbnn file");
  validate->add_option("model", model_path)->required();

  auto* run = app.add_subcommand("run", "run a .sbnn model on a raw float32 blob");
  run->add_option("model", model_path)->required();
  run->add_option("--input", input)->required();
  run->add_option("--out", out);
  run->add_option("--threads", threads);
  run->add_option("--reps", reps);

  auto* bench = app.add_subcommand("bench", "operator latency sweep to CSV");
  bench->add_option("--config", config);
  bench->add_option("--op", op);
  bench->add_option("--out", out);
  bench->add_option("--seed", seed);
  bench->add_option("--reps", reps);
  bench->add_option("--warmup", warmup);
  bench->add_option("--threads", threads);

  auto* inspect = app.add_subcommand("inspect", "dump layers, sparsity and MAC counts");
  inspect->add_option("model", model_path)->required();
  inspect->add_option("--out", out);

  auto* gen = app.add_subcommand("gen", "write a random-weight model manifest");
  gen->add_option("--arch", arch);
  gen->add_option("--out", out)->required();
  gen->add_option("--seed", seed);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (prune->parsed()) return cmd_prune(manifest, weights, config, out);
    if (rearrange->parsed()) return cmd_rearrange(manifest, weights, config, out);
    if (convert->parsed()) return cmd_convert(manifest, weights, masks, out);
    if (validate->parsed()) return cmd_validate(model_path);
    if (run->parsed()) return cmd_run(model_path, input, out, threads, reps);
    if (bench->parsed()) return cmd_bench(config, op, out, seed, reps, warmup, threads);
    if (inspect->parsed()) return cmd_inspect(model_path, out);
    if (gen->parsed()) return cmd_gen(arch, out, seed);
  } catch (const sbnn::IrError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}
