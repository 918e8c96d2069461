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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "sbnn/engine.hpp"
#include "sbnn/ir.hpp"
#include "sbnn/manifest.hpp"

using namespace sbnn;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CmdResult {
  int exit_code;
  std::string out;
};

CmdResult run_cli(const std::string& args) {
  const fs::path dir = fs::temp_directory_path() / "sbnn_cli_out";
  fs::create_directories(dir);
  const fs::path capture = dir / "stdout.txt";
  const std::string cmd = std::string(SBNN_CLI_PATH) + " " + args + " > " +
                          capture.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  CmdResult r;
  r.exit_code = raw == -1 ? -1 : WEXITSTATUS(raw);
  std::ifstream f(capture);
  std::stringstream ss;
  ss << f.rdbuf();
  r.out = ss.str();
  return r;
}

fs::path workdir() {
  const fs::path dir = fs::temp_directory_path() / "sbnn_cli_work";
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream f(p, std::ios::trunc);
  f << content;
}

}  // namespace

TEST_CASE("cli pipeline: gen, prune, convert, validate, run, inspect") {
  const fs::path dir = workdir();
  const fs::path model_dir = dir / "tiny";

  auto gen = run_cli("gen --arch tiny --out " + model_dir.string() + " --seed 7");
  REQUIRE(gen.exit_code == 0);
  REQUIRE(fs::exists(model_dir / "manifest.json"));

  // rho = 0: the report must show zero sparsity
  write_file(dir / "cfg0.json", R"({"conv1x1": {"rho": 0.0}, "enabled": ["conv1x1"]})");
  auto prune0 = run_cli("prune --manifest " + (model_dir / "manifest.json").string() +
                        " --config " + (dir / "cfg0.json").string() + " --out " +
                        (dir / "masks0.json").string());
  REQUIRE(prune0.exit_code == 0);
  const json rep0 = json::parse(prune0.out);
  CHECK(rep0["flop_sparsity"].get<double>() == 0.0);

  write_file(dir / "cfg.json",
             R"({"conv1x1": {"rho": 0.5}, "dw": {"dense_groups": 0}, "enabled": ["conv1x1","dwconv"]})");
  auto prune = run_cli("prune --manifest " + (model_dir / "manifest.json").string() +
                       " --config " + (dir / "cfg.json").string() + " --out " +
                       (dir / "masks.json").string());
  REQUIRE(prune.exit_code == 0);

  auto convert = run_cli("convert --manifest " + (model_dir / "manifest.json").string() +
                         " --masks " + (dir / "masks.json").string() + " --out " +
                         (dir / "tiny.sbnn").string());
  REQUIRE(convert.exit_code == 0);

  auto validate = run_cli("validate " + (dir / "tiny.sbnn").string());
  CHECK(validate.exit_code == 0);

  // run against the library path, bitwise
  const ModelIR ir = load_ir(dir / "tiny.sbnn");
  Tensor x = Tensor::plain(1, 8, 8, 8);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<float> d(-1.0f, 1.0f);
  for (float& v : x.data) v = d(rng);
  save_blob(dir / "input.bin", x.data);

  auto run = run_cli("run " + (dir / "tiny.sbnn").string() + " --input " +
                     (dir / "input.bin").string() + " --out " + (dir / "output.bin").string());
  REQUIRE(run.exit_code == 0);
  const json timing = json::parse(run.out);
  CHECK(timing.contains("total_ms"));
  CHECK(timing.contains("threads"));
  CHECK(timing.contains("runs"));

  const std::vector<float> got = load_blob(dir / "output.bin");
  const Tensor want = run_model(ir, x, plan_model(ir));
  REQUIRE(got.size() == want.data.size());
  CHECK(std::equal(got.begin(), got.end(), want.data.begin()));

  auto inspect = run_cli("inspect " + (dir / "tiny.sbnn").string() + " --out " +
                         (dir / "dump.json").string());
  REQUIRE(inspect.exit_code == 0);
  std::ifstream df(dir / "dump.json");
  json dump;
  df >> dump;
  CHECK(dump["totals"]["dense_macs"].get<std::int64_t>() ==
        flop_count(ir).dense_macs);
  CHECK(dump["totals"]["flop_sparsity"].get<double>() > 0.0);
}

TEST_CASE("cli prune rejects an invalid manifest with exit 2") {
  const fs::path dir = workdir();
  write_file(dir / "bad.json", R"({"layers": [{"name": "x"}]})");
  auto r = run_cli("prune --manifest " + (dir / "bad.json").string());
  CHECK(r.exit_code == 2);

  write_file(dir / "notjson.json", "not json at all {");
  auto r2 = run_cli("prune --manifest " + (dir / "notjson.json").string());
  CHECK(r2.exit_code == 2);
}

TEST_CASE("cli reports I/O failures with exit 3") {
  auto r = run_cli("run /nonexistent/model.sbnn --input /nonexistent/in.bin");
  CHECK(r.exit_code == 3);
  auto r2 = run_cli("inspect /nonexistent/model.sbnn");
  CHECK(r2.exit_code == 3);
}

TEST_CASE("cli rearrange rejects graphs with concat") {
  const fs::path dir = workdir();
  const fs::path model_dir = dir / "concat_model";
  Model m = tiny_model(3);
  m.layers[1].op = OpKind::Concat;
  m.layers[1].name = "join";
  m.weights[1] = WeightTensor{};
  m.biases[1] = {};
  save_model(m, model_dir);
  auto r = run_cli("rearrange --manifest " + (model_dir / "manifest.json").string() +
                   " --out " + (dir / "re_out").string());
  CHECK(r.exit_code == 2);
  CHECK(r.out.find("join") != std::string::npos);
}

TEST_CASE("cli rearrange logs objective improvements and stays runnable") {
  const fs::path dir = workdir();
  const fs::path model_dir = dir / "tiny2";
  REQUIRE(run_cli("gen --arch tiny --out " + model_dir.string() + " --seed 21").exit_code == 0);
  write_file(dir / "recfg.json", R"({"go": 2, "gi": 2, "rho": 0.5, "budget": 100000})");
  auto r = run_cli("rearrange --manifest " + (model_dir / "manifest.json").string() +
                   " --config " + (dir / "recfg.json").string() + " --out " +
                   (dir / "rearranged").string());
  REQUIRE(r.exit_code == 0);
  const json gains = json::parse(r.out);
  for (const auto& g : gains)
    CHECK(g["best_retained_l1"].get<double>() >=
          g["identity_retained_l1"].get<double>() - 1e-9);
  CHECK(fs::exists(dir / "rearranged" / "manifest.json"));
  CHECK(fs::exists(dir / "rearranged" / "plan.json"));
}

TEST_CASE("cli bench emits the documented CSV schema") {
  const fs::path dir = workdir();
  write_file(dir / "bench.json",
             R"({"op": "conv1x1", "shapes": [[8,8,16,16]], "sparsity": [0.0, 0.5], "reps": 3, "warmup": 1})");
  auto r = run_cli("bench --config " + (dir / "bench.json").string() + " --seed 5");
  REQUIRE(r.exit_code == 0);
  std::istringstream is(r.out);
  std::string header;
  std::getline(is, header);
  CHECK(header ==
        "op,h,w,ic,oc,stride,sparsity,dense_ms,sparse_ms,speedup,dense_macs,effective_macs");
  std::string line;
  int rows = 0;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 2);
}

TEST_CASE("cli convert fails cleanly on a corrupt masks file") {
  const fs::path dir = workdir();
  const fs::path model_dir = dir / "tiny3";
  REQUIRE(run_cli("gen --arch tiny --out " + model_dir.string()).exit_code == 0);
  write_file(dir / "badmasks.json", R"({"layers": []})");
  auto r = run_cli("convert --manifest " + (model_dir / "manifest.json").string() +
                   " --masks " + (dir / "badmasks.json").string() + " --out " +
                   (dir / "x.sbnn").string());
  CHECK(r.exit_code == 2);
}
