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

#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "attrx/error.hpp"
#include "attrx/pipeline.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attrx: attribute and counter-example explanations for classifier decisions"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", attrx::kToolVersion);

  std::string config_file;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_file, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("-o,--out", out_dir, "output directory (overrides out_dir)");
  app.add_option("--seed", seed, "global seed (overrides seed)");
  app.add_option("--set", overrides, "override a config key, e.g. --set attack.epsilon_rel=0.2")
      ->take_all();
  bool dump_config = false;
  app.add_flag("--print-config", dump_config, "print the resolved configuration and exit");

  auto* gen = app.add_subcommand("generate", "generate or import the dataset");
  auto* train = app.add_subcommand("train", "train the attribute and general classifiers");
  auto* robust = app.add_subcommand("robust-train", "adversarially train both classifiers");
  auto* sweep = app.add_subcommand("sweep", "accuracy versus epsilon for every trained model");
  auto* explain = app.add_subcommand("explain", "explanation records and distance analyses");
  auto* report = app.add_subcommand("report", "verify artifacts and summarize a run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    std::vector<std::string> layered = overrides;
    if (!out_dir.empty()) layered.push_back("out_dir=" + nlohmann::json(out_dir).dump());
    if (seed) layered.push_back("seed=" + std::to_string(*seed));
    std::optional<std::filesystem::path> file;
    if (!config_file.empty()) file = config_file;
    const auto config = attrx::resolve_config(file, layered);
    if (dump_config) {
      std::cout << config.to_json().dump(2) << '\n';
      return 0;
    }

    if (*gen) attrx::cmd_generate(config);
    if (*train) attrx::cmd_train(config);
    if (*robust) attrx::cmd_robust_train(config);
    if (*sweep) attrx::cmd_sweep(config);
    if (*explain) attrx::cmd_explain(config);
    if (*report) std::cout << attrx::cmd_report(config);
  } catch (const attrx::NumericalError& e) {
    std::cerr << "attrx: numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const attrx::ValidationError& e) {
    std::cerr << "attrx: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "attrx: " << e.what() << '\n';
    return kExitValidation;
  }
  return 0;
}
