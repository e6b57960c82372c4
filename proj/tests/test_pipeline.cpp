// Copyright 2026 The attrx Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "attrx/data.hpp"
#include "attrx/error.hpp"
#include "attrx/pipeline.hpp"
#include "test_util.hpp"

using namespace attrx;
using attrx::testing::read_text;
using attrx::testing::TempDir;
using attrx::testing::write_text;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

RunConfig quick(const fs::path& out) {
  RunConfig c;
  c.out_dir = out.string();
  c.sweep.epsilons_rel = {0.0, 0.3, 0.6};
  return c;
}

json read_json(const fs::path& p) { return json::parse(read_text(p)); }

// Digests of every artifact listed in the given manifests.
std::map<std::string, std::string> digests(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir / "manifests")) {
    const json m = read_json(e.path());
    for (const auto& a : m["artifacts"]) out[a["path"].get<std::string>()] = a["sha256"].get<std::string>();
  }
  return out;
}

void full_run(const RunConfig& c) {
  cmd_generate(c);
  cmd_train(c);
  cmd_robust_train(c);
  cmd_sweep(c);
  cmd_explain(c);
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(read_text(p));
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
    rows.push_back(f);
  }
  return rows;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ATTRX_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config layers: defaults, file, overrides") {
  TempDir dir("cfg");
  CHECK(resolve_config(std::nullopt, {}).to_json() == RunConfig{}.to_json());

  write_text(dir / "c.json", R"({"seed": 11, "attack": {"steps": 3}, "data": {"num_classes": 6}})");
  auto c = resolve_config(dir / "c.json", {"attack.steps=5", "explain.k=4", "train.prediction_rule=nearest-attribute"});
  CHECK(c.seed == 11);
  CHECK(c.attack.steps == 5);  // flag beats file
  CHECK(c.data.num_classes == 6);
  CHECK(c.explain.k == std::optional<std::size_t>(4));
  CHECK(c.train.prediction_rule == "nearest-attribute");
  CHECK(RunConfig::from_json(c.to_json()).to_json() == c.to_json());

  CHECK_THROWS_WITH_AS(resolve_config(std::nullopt, {"attack.bogus=1"}),
                       doctest::Contains("unknown config key 'attack.bogus'"), ValidationError);
  write_text(dir / "bad.json", R"({"data": {"colour": 1}})");
  CHECK_THROWS_AS(resolve_config(dir / "bad.json", {}), ValidationError);
  write_text(dir / "broken.json", "{");
  CHECK_THROWS_AS(resolve_config(dir / "broken.json", {}), ValidationError);
  CHECK_THROWS_AS(resolve_config(std::nullopt, {"attack.steps=0"}), ValidationError);
  CHECK_THROWS_AS(resolve_config(std::nullopt, {"attack.loss=cross-entropy"}), ValidationError);
  CHECK_THROWS_AS(resolve_config(std::nullopt, {"nokeyvalue"}), ValidationError);
}

TEST_CASE("generate writes loadable files and creates the output directory") {
  TempDir dir("gen");
  auto c = quick(dir / "nested" / "run");
  cmd_generate(c);
  const Dataset ds = load_dataset({dir / "nested/run/data/features.csv",
                                   dir / "nested/run/data/attributes.csv",
                                   dir / "nested/run/data/names.txt"});
  CHECK(ds == generate_synthetic(synthetic_spec(c)));
  const auto m = read_json(dir / "nested/run/manifests/generate.json");
  CHECK(m["artifacts"].size() == 3);
  CHECK(m["tool_version"] == kToolVersion);
}

TEST_CASE("unwritable output location is an explicit error") {
  TempDir dir("unwritable");
  write_text(dir / "file", "x");
  CHECK_THROWS_AS(cmd_generate(quick(dir / "file" / "run")), ValidationError);
}

TEST_CASE("corrupt dataset stops training before any model is written") {
  TempDir dir("corrupt");
  auto c = quick(dir.path());
  cmd_generate(c);
  std::ofstream(dir / "data/features.csv", std::ios::app) << "1,2,3\n";
  CHECK_THROWS_AS(cmd_train(c), ValidationError);
  CHECK_FALSE(fs::exists(dir / "models/sje_standard.model"));
  CHECK_FALSE(fs::exists(dir / "models/general_standard.model"));
}

TEST_CASE("full pipeline outputs") {
  TempDir dir("full");
  auto c = quick(dir.path());
  full_run(c);

  SUBCASE("train report: both classifiers accurate and close") {
    const auto r = read_json(dir / "train_report.json");
    CHECK(r["attribute"]["test_acc"].get<double>() >= 0.95);
    CHECK(r["general"]["test_acc"].get<double>() >= 0.95);
    CHECK(r["test_acc_difference"].get<double>() <= 0.05);
  }
  SUBCASE("sweep rows") {
    const auto rows = read_csv(dir / "sweep.csv");
    CHECK(rows[0] == std::vector<std::string>{"epsilon", "epsilon_rel", "classifier", "model", "n",
                                              "clean_acc", "adv_acc", "flip_rate"});
    std::map<std::string, std::vector<double>> adv;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      const auto& r = rows[i];
      if (r[1] == "0") CHECK(r[5] == r[6]);  // epsilon 0: adversarial equals clean
      adv[r[2] + "/" + r[3]].push_back(parse_double(r[6]));
    }
    CHECK(adv.size() == 4);
    for (const auto& [key, v] : adv)
      for (std::size_t i = 1; i < v.size(); ++i) CHECK(v[i] <= v[i - 1] + 0.005);
    const auto rob = read_csv(dir / "robustification_attribute.csv");
    CHECK(rob[0] == std::vector<std::string>{"epsilon", "clean_acc", "adv_acc_standard",
                                             "adv_acc_robust", "measure"});
    CHECK(rob.size() == 1 + c.sweep.epsilons_rel.size());
    CHECK(rob[1][4] == "NA");  // epsilon 0 causes no drop
  }
  SUBCASE("explanations") {
    std::istringstream in(read_text(dir / "explanations.jsonl"));
    std::size_t n = 0;
    for (std::string line; std::getline(in, line); ++n) {
      const auto r = json::parse(line);
      CHECK(r["explainable"] == true);
      CHECK_FALSE(r["counter_examples"].empty());
      CHECK(r["counter_class"] != r["true_class"]);
    }
    const auto summary = read_json(dir / "explain_summary.json");
    CHECK(summary["records"].get<std::size_t>() == n);
    CHECK(n > 0);
    CHECK(fs::exists(dir / "distance_standard.csv"));
    CHECK(fs::exists(dir / "distance_robust.json"));
    CHECK(summary.contains("distance_robust"));
    std::size_t total = 0;
    for (const auto& [k, v] : summary["status_counts"].items()) total += v.get<std::size_t>();
    CHECK(total == summary["attack"]["n"].get<std::size_t>());
  }
  SUBCASE("report verifies digests and catches tampering") {
    const auto text = cmd_report(c);
    CHECK(text.find("attribute") != std::string::npos);
    CHECK(fs::exists(dir / "report.json"));
    std::ofstream(dir / "sweep.csv", std::ios::app) << "tampered\n";
    CHECK_THROWS_WITH_AS(cmd_report(c), doctest::Contains("sweep.csv"), ValidationError);
  }
}

TEST_CASE("explain without robust models emits only the standard analysis") {
  TempDir dir("norobust");
  auto c = quick(dir.path());
  cmd_generate(c);
  cmd_train(c);
  cmd_explain(c);
  CHECK(fs::exists(dir / "distance_standard.json"));
  CHECK_FALSE(fs::exists(dir / "distance_robust.json"));
}

TEST_CASE("repeated runs give identical digests") {
  TempDir a("det-a"), b("det-b");
  auto ca = quick(a.path()), cb = quick(b.path());
  full_run(ca);
  full_run(cb);
  const auto da = digests(a.path()), db = digests(b.path());
  CHECK(da.size() >= 15);
  CHECK(da == db);

  auto cc = quick(a / "other");
  cc.seed = 8;
  cmd_generate(cc);
  CHECK(sha256_file(a / "other/data/features.csv") != da.at("data/features.csv"));
}

TEST_CASE("command-line exit codes") {
  TempDir dir("cli");
  const std::string out = " -o " + (dir / "run").string();
  CHECK(run_cli("--version") == 0);
  CHECK(run_cli("generate" + out + " --set data.samples_per_class=10") == 0);
  CHECK(run_cli("train" + out + " --set data.samples_per_class=10 --set train.epochs=2") == 0);
  CHECK(run_cli("train" + out + " --set train.bogus=1") == 1);
  CHECK(run_cli("frobnicate") == 1);
  CHECK(run_cli("explain" + out + " --set attack.steps=0") == 1);
  // A learning rate that overflows the weights is a numerical failure.
  CHECK(run_cli("train" + out +
                " --set data.samples_per_class=10 --set train.learning_rate=1e308 "
                "--set train.weight_init_sigma=1") == 2);
}
