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

#pragma once

// End-to-end pipeline behind the `attrx` command-line tool. Every command
// reads and writes inside RunConfig::out_dir:
//
//   data/features.csv, data/attributes.csv, data/names.txt      generate
//   models/*.model, split.json, train_report.json               train
//   models/*_robust.model, robust_report.json                   robust-train
//   sweep.csv, robustification_{attribute,general}.csv          sweep
//   explanations.jsonl, explain_summary.json, distance_*.csv/json  explain
//   report.json                                                 report
//   manifests/<command>.json                                    every command

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "attrx/data.hpp"
#include "attrx/embed.hpp"
#include "attrx/perturb.hpp"

namespace attrx {

inline constexpr const char* kToolVersion = "0.3.0";

struct RunConfig {
  std::uint64_t seed = 7;
  std::string out_dir = "run";

  struct Data {
    std::string source = "synthetic";  // or "files"
    std::size_t num_classes = 10;
    std::size_t num_attributes = 8;
    std::size_t feature_dim = 16;
    std::size_t samples_per_class = 60;
    double noise_sigma = 0.05;
    double class_similarity = 0.7;
    std::string features, attributes, names;  // used when source == "files"
    std::array<double, 3> split{0.6, 0.1, 0.3};
    std::optional<std::array<double, 2>> feature_bounds;
  } data;

  struct Map {
    std::string kind = "identity";  // or "tanh"
    std::size_t hidden = 32;
    std::size_t output_dim = 0;  // 0: same as the feature dimension
  } map;

  struct Train {
    double learning_rate = 0.01;
    int epochs = 40;
    double margin = 1.0;
    double weight_init_sigma = 0.01;
    bool normalize_class_attributes = false;
    std::string prediction_rule = "compatibility-argmax";
  } train;

  // Epsilons are given relative to the mean per-dimension feature standard
  // deviation of the training split; absolute values are reported alongside.
  struct Attack {
    double epsilon_rel = 0.6;
    int steps = 10;
    std::optional<double> alpha_rel;  // default epsilon_rel / steps
    std::string loss = "ranking-margin";
  } attack;

  struct Robust {
    double mix_alpha = 0.5;
  } robust;

  struct Sweep {
    std::vector<double> epsilons_rel{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8};
  } sweep;

  struct Explain {
    std::optional<std::size_t> k;  // default min(A, 10)
    std::size_t m = 5;
    std::string gallery = "train";  // train | val | test
  } explain;

  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  void validate() const;
};

// Defaults, then the config file, then `key.path=value` overrides. Unknown
// keys are rejected at every layer.
RunConfig resolve_config(const std::optional<std::filesystem::path>& file,
                         const std::vector<std::string>& overrides);

std::string sha256_file(const std::filesystem::path& path);

// Building blocks shared by the commands. Every random stage draws its seed
// from the global seed and a stage name ("synthetic", "split", "map",
// "train-sje", "train-general").
std::uint64_t stage_seed(const RunConfig& config, std::string_view stage);
SyntheticSpec synthetic_spec(const RunConfig& config);
DifferentiableMap make_map(const RunConfig& config, std::size_t feature_dim);
TrainConfig train_config(const RunConfig& config, std::string_view stage);
std::optional<FeatureBounds> bounds_for(const RunConfig& config, std::size_t feature_dim);
// Absolute attack settings for a relative epsilon and feature scale.
AttackConfig attack_config(const RunConfig& config, double epsilon_rel, double feature_scale,
                           AttackLoss loss);

void cmd_generate(const RunConfig& config);
void cmd_train(const RunConfig& config);
void cmd_robust_train(const RunConfig& config);
void cmd_sweep(const RunConfig& config);
void cmd_explain(const RunConfig& config);
// Collects reports and manifests into report.json and returns a text summary.
std::string cmd_report(const RunConfig& config);

}  // namespace attrx
