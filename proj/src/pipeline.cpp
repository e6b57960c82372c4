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

#include "attrx/pipeline.hpp"

#include <chrono>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include <openssl/evp.h>

#include "attrx/embed.hpp"
#include "attrx/error.hpp"
#include "attrx/explain.hpp"
#include "attrx/json_io.hpp"
#include "attrx/model_io.hpp"
#include "attrx/perturb.hpp"
#include "attrx/rng.hpp"
#include "attrx/robust.hpp"

namespace attrx {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

json RunConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["data"] = {{"source", data.source},
               {"num_classes", data.num_classes},
               {"num_attributes", data.num_attributes},
               {"feature_dim", data.feature_dim},
               {"samples_per_class", data.samples_per_class},
               {"noise_sigma", data.noise_sigma},
               {"class_similarity", data.class_similarity},
               {"features", data.features},
               {"attributes", data.attributes},
               {"names", data.names},
               {"split", data.split},
               {"feature_bounds", data.feature_bounds ? json(*data.feature_bounds) : json()}};
  j["map"] = {{"kind", map.kind}, {"hidden", map.hidden}, {"output_dim", map.output_dim}};
  j["train"] = {{"learning_rate", train.learning_rate},
                {"epochs", train.epochs},
                {"margin", train.margin},
                {"weight_init_sigma", train.weight_init_sigma},
                {"normalize_class_attributes", train.normalize_class_attributes},
                {"prediction_rule", train.prediction_rule}};
  j["attack"] = {{"epsilon_rel", attack.epsilon_rel},
                 {"steps", attack.steps},
                 {"alpha_rel", attack.alpha_rel ? json(*attack.alpha_rel) : json()},
                 {"loss", attack.loss}};
  j["robust"] = {{"mix_alpha", robust.mix_alpha}};
  j["sweep"] = {{"epsilons_rel", sweep.epsilons_rel}};
  j["explain"] = {{"k", explain.k ? json(*explain.k) : json()},
                  {"m", explain.m},
                  {"gallery", explain.gallery}};
  return j;
}

namespace {

template <typename T>
void get(const json& j, const char* key, T& out) {
  try {
    j.at(key).get_to(out);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("config key '") + key + "': " + e.what());
  }
}

template <typename T>
void get_optional(const json& j, const char* key, std::optional<T>& out) {
  if (j.at(key).is_null()) {
    out.reset();
    return;
  }
  T v{};
  get(j, key, v);
  out = v;
}

// Every key in `layer` must already exist in `base`; objects merge recursively.
void merge_checked(json& base, const json& layer, const std::string& prefix) {
  require(layer.is_object(), "config " + (prefix.empty() ? std::string("root") : prefix) +
                                 " must be an object");
  for (auto it = layer.begin(); it != layer.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    require(base.contains(it.key()), "unknown config key '" + path + "'");
    json& slot = base[it.key()];
    if (slot.is_object())
      merge_checked(slot, it.value(), path);
    else
      slot = it.value();
  }
}

json parse_override_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return json(text);
  }
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  json full = RunConfig{}.to_json();
  merge_checked(full, j, "");
  RunConfig c;
  get(full, "seed", c.seed);
  get(full, "out_dir", c.out_dir);
  const json& d = full["data"];
  get(d, "source", c.data.source);
  get(d, "num_classes", c.data.num_classes);
  get(d, "num_attributes", c.data.num_attributes);
  get(d, "feature_dim", c.data.feature_dim);
  get(d, "samples_per_class", c.data.samples_per_class);
  get(d, "noise_sigma", c.data.noise_sigma);
  get(d, "class_similarity", c.data.class_similarity);
  get(d, "features", c.data.features);
  get(d, "attributes", c.data.attributes);
  get(d, "names", c.data.names);
  get(d, "split", c.data.split);
  get_optional(d, "feature_bounds", c.data.feature_bounds);
  const json& m = full["map"];
  get(m, "kind", c.map.kind);
  get(m, "hidden", c.map.hidden);
  get(m, "output_dim", c.map.output_dim);
  const json& t = full["train"];
  get(t, "learning_rate", c.train.learning_rate);
  get(t, "epochs", c.train.epochs);
  get(t, "margin", c.train.margin);
  get(t, "weight_init_sigma", c.train.weight_init_sigma);
  get(t, "normalize_class_attributes", c.train.normalize_class_attributes);
  get(t, "prediction_rule", c.train.prediction_rule);
  const json& a = full["attack"];
  get(a, "epsilon_rel", c.attack.epsilon_rel);
  get(a, "steps", c.attack.steps);
  get_optional(a, "alpha_rel", c.attack.alpha_rel);
  get(a, "loss", c.attack.loss);
  get(full["robust"], "mix_alpha", c.robust.mix_alpha);
  get(full["sweep"], "epsilons_rel", c.sweep.epsilons_rel);
  const json& e = full["explain"];
  get_optional(e, "k", c.explain.k);
  get(e, "m", c.explain.m);
  get(e, "gallery", c.explain.gallery);
  c.validate();
  return c;
}

void RunConfig::validate() const {
  require(data.source == "synthetic" || data.source == "files",
          "data.source must be 'synthetic' or 'files'");
  if (data.source == "files")
    require(!data.features.empty() && !data.attributes.empty() && !data.names.empty(),
            "data.features, data.attributes and data.names are required for file input");
  require(map.kind == "identity" || map.kind == "tanh", "map.kind must be 'identity' or 'tanh'");
  require(map.kind == "identity" || map.hidden > 0, "map.hidden must be positive");
  parse_prediction_rule(train.prediction_rule);
  const auto loss = parse_attack_loss(attack.loss);
  require(loss != AttackLoss::cross_entropy,
          "attack.loss selects the attribute-classifier loss (ranking or ranking-margin)");
  require(attack.epsilon_rel >= 0.0, "attack.epsilon_rel must be >= 0");
  require(attack.steps >= 1, "attack.steps must be >= 1");
  require(!attack.alpha_rel || *attack.alpha_rel > 0.0, "attack.alpha_rel must be > 0");
  require(robust.mix_alpha >= 0.0 && robust.mix_alpha <= 1.0, "robust.mix_alpha must be in [0,1]");
  require(!sweep.epsilons_rel.empty(), "sweep.epsilons_rel is empty");
  for (double e : sweep.epsilons_rel) require(e >= 0.0, "sweep epsilons must be >= 0");
  require(!explain.k || *explain.k >= 1, "explain.k must be >= 1");
  require(explain.m >= 1, "explain.m must be >= 1");
  require(explain.gallery == "train" || explain.gallery == "val" || explain.gallery == "test",
          "explain.gallery must be train, val or test");
}

RunConfig resolve_config(const std::optional<fs::path>& file,
                         const std::vector<std::string>& overrides) {
  json layered = RunConfig{}.to_json();
  if (file) {
    std::ifstream in(*file);
    require(static_cast<bool>(in), "cannot open config file " + file->string());
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ValidationError("config file " + file->string() + ": " + e.what());
    }
    merge_checked(layered, j, "");
  }
  for (const auto& ov : overrides) {
    const auto eq = ov.find('=');
    require(eq != std::string::npos && eq > 0, "override '" + ov + "' is not key=value");
    const std::string path = ov.substr(0, eq);
    json patch = parse_override_value(ov.substr(eq + 1));
    std::vector<std::string> keys;
    std::stringstream ss(path);
    for (std::string k; std::getline(ss, k, '.');) keys.push_back(k);
    for (auto it = keys.rbegin(); it != keys.rend(); ++it) patch = json{{*it, patch}};
    merge_checked(layered, patch, "");
  }
  return RunConfig::from_json(layered);
}

// ---------------------------------------------------------------------------
// Artifacts and manifests

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), "cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  require(ctx && EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) == 1, "sha256 init failed");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  std::ostringstream hex;
  for (unsigned i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
  return hex.str();
}

std::uint64_t stage_seed(const RunConfig& c, std::string_view stage) {
  auto rng = substream(c.seed, stage);
  return rng();
}

std::optional<FeatureBounds> bounds_for(const RunConfig& c, std::size_t dim) {
  if (!c.data.feature_bounds) return std::nullopt;
  return FeatureBounds::uniform(dim, (*c.data.feature_bounds)[0], (*c.data.feature_bounds)[1]);
}

TrainConfig train_config(const RunConfig& c, std::string_view stage) {
  TrainConfig t;
  t.learning_rate = c.train.learning_rate;
  t.epochs = c.train.epochs;
  t.margin = c.train.margin;
  t.weight_init_sigma = c.train.weight_init_sigma;
  t.normalize_class_attributes = c.train.normalize_class_attributes;
  t.prediction_rule = parse_prediction_rule(c.train.prediction_rule);
  t.seed = stage_seed(c, stage);
  return t;
}

AttackConfig attack_config(const RunConfig& c, double epsilon_rel, double scale, AttackLoss loss) {
  const double eps = epsilon_rel * scale;
  AttackConfig a = AttackConfig::with_default_alpha(eps, c.attack.steps, loss);
  if (c.attack.alpha_rel) a.alpha = *c.attack.alpha_rel * scale;
  return a;
}

SyntheticSpec synthetic_spec(const RunConfig& c) {
  SyntheticSpec spec;
  spec.num_classes = c.data.num_classes;
  spec.num_attributes = c.data.num_attributes;
  spec.feature_dim = c.data.feature_dim;
  spec.samples_per_class = c.data.samples_per_class;
  spec.noise_sigma = c.data.noise_sigma;
  spec.class_similarity = c.data.class_similarity;
  spec.seed = stage_seed(c, "synthetic");
  return spec;
}

DifferentiableMap make_map(const RunConfig& c, std::size_t feature_dim) {
  if (c.map.kind == "identity") return DifferentiableMap::identity(feature_dim);
  const std::size_t out_dim = c.map.output_dim ? c.map.output_dim : feature_dim;
  return DifferentiableMap::tanh_hidden(feature_dim, c.map.hidden, out_dim, stage_seed(c, "map"));
}

namespace {

class Run {
 public:
  Run(const RunConfig& config, std::string command) : config_(config), command_(std::move(command)) {
    root_ = config.out_dir;
    try {
      fs::create_directories(root_ / "manifests");
    } catch (const fs::filesystem_error& e) {
      throw ValidationError("cannot create output directory " + root_.string() + ": " +
                            e.code().message());
    }
  }

  fs::path path(const std::string& rel) const { return root_ / rel; }

  void mkdir(const std::string& rel) const {
    try {
      fs::create_directories(root_ / rel);
    } catch (const fs::filesystem_error& e) {
      throw ValidationError("cannot create " + (root_ / rel).string() + ": " + e.code().message());
    }
  }

  void artifact(const std::string& rel) { artifacts_.push_back(rel); }

  template <typename Fn>
  auto stage(const std::string& name, Fn&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    struct Timer {
      Run* run;
      std::string name;
      std::chrono::steady_clock::time_point t0;
      ~Timer() {
        run->stages_.push_back(
            {name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
      }
    } timer{this, name, t0};
    return fn();
  }

  void write_json(const std::string& rel, const json& j) {
    std::ofstream out(path(rel), std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), "cannot write " + path(rel).string());
    out << j.dump(2) << '\n';
    require(static_cast<bool>(out), "write failed: " + path(rel).string());
    artifact(rel);
  }

  std::ofstream open(const std::string& rel) {
    std::ofstream out(path(rel), std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), "cannot write " + path(rel).string());
    artifact(rel);
    return out;
  }

  void finish() {
    json arts = json::array();
    for (const auto& rel : artifacts_)
      arts.push_back({{"path", rel}, {"sha256", sha256_file(path(rel))}});
    json stages = json::array();
    for (const auto& [n, s] : stages_) stages.push_back({{"name", n}, {"seconds", s}});
    json manifest = {{"command", command_},
                     {"tool_version", kToolVersion},
                     {"config", config_.to_json()},
                     {"artifacts", arts},
                     {"stages", stages}};
    std::ofstream out(path("manifests/" + command_ + ".json"), std::ios::trunc);
    require(static_cast<bool>(out), "cannot write manifest");
    out << manifest.dump(2) << '\n';
  }

 private:
  const RunConfig& config_;
  std::string command_;
  fs::path root_;
  std::vector<std::string> artifacts_;
  std::vector<std::pair<std::string, double>> stages_;
};


DatasetPaths data_paths(const Run& run) {
  return {run.path("data/features.csv"), run.path("data/attributes.csv"),
          run.path("data/names.txt")};
}


Dataset load_run_dataset(const RunConfig& c, const Run& run) {
  auto ds = load_dataset(data_paths(run));
  return ds.with_bounds(bounds_for(c, ds.feature_dim()));
}


// Everything downstream of `train`: dataset, split, map, feature scale.
struct Context {
  Dataset dataset;
  SplitAssignment split;
  DifferentiableMap map;
  double feature_scale;
};

Context load_context(const RunConfig& c, const Run& run) {
  auto ds = load_run_dataset(c, run);
  auto sp = split(ds, c.data.split, stage_seed(c, "split"));
  auto map = load_map(run.path("models/map.model"));
  require(map.input_dim() == ds.feature_dim(), "map does not match dataset; re-run train");
  const double scale = mean_feature_std(ds, sp.train);
  return {std::move(ds), std::move(sp), std::move(map), scale};
}


AttributeClassifier attribute_classifier(const Context& ctx, const RunConfig& c,
                                         const fs::path& model_path) {
  auto model = load_embedding_model(model_path);
  validate_against(model, ctx.map, ctx.dataset);
  return AttributeClassifier(ctx.map, std::move(model), ctx.dataset.class_attributes(),
                             c.train.margin);
}

GeneralPredictor general_predictor(const Context& ctx, const fs::path& model_path) {
  auto clf = load_general_classifier(model_path);
  validate_against(clf, ctx.map, ctx.dataset);
  return GeneralPredictor(ctx.map, std::move(clf));
}

bool has_robust(const Run& run) {
  return fs::exists(run.path("models/sje_robust.model")) &&
         fs::exists(run.path("models/general_robust.model"));
}

json split_json(const SplitAssignment& s) {
  return {{"seed", s.seed}, {"train", s.train}, {"val", s.val}, {"test", s.test}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Commands

void cmd_generate(const RunConfig& c) {
  c.validate();
  Run run(c, "generate");
  run.mkdir("data");
  auto ds = run.stage("build", [&] {
    if (c.data.source == "files")
      return load_dataset({c.data.features, c.data.attributes, c.data.names});
    return generate_synthetic(synthetic_spec(c));
  });
  // Bounds are validated here so later stages never meet an out-of-box sample.
  (void)ds.with_bounds(bounds_for(c, ds.feature_dim()));
  run.stage("write", [&] {
    save_dataset(ds, data_paths(run));
    for (auto rel : {"data/features.csv", "data/attributes.csv", "data/names.txt"}) run.artifact(rel);
    return 0;
  });
  run.stage("verify", [&] {
    require(load_dataset(data_paths(run)) == ds, "re-load of generated dataset differs");
    return 0;
  });
  run.finish();
}

void cmd_train(const RunConfig& c) {
  c.validate();
  Run run(c, "train");
  run.mkdir("models");
  auto ds = load_run_dataset(c, run);
  auto sp = split(ds, c.data.split, stage_seed(c, "split"));
  run.write_json("split.json", split_json(sp));

  const DifferentiableMap map = make_map(c, ds.feature_dim());
  auto sje = run.stage("train-sje", [&] { return train_sje(ds, sp.train, map, train_config(c, "train-sje")); });
  auto gen = run.stage("train-general",
                       [&] { return train_general(ds, sp.train, map, train_config(c, "train-general")); });
  save_map(map, run.path("models/map.model"));
  save_model(sje.model, run.path("models/sje_standard.model"));
  save_model(gen.model, run.path("models/general_standard.model"));
  for (auto rel : {"models/map.model", "models/sje_standard.model", "models/general_standard.model"})
    run.artifact(rel);

  const Predictor attr = AttributeClassifier(map, sje.model, ds.class_attributes(), c.train.margin);
  const Predictor general = GeneralPredictor(map, gen.model);
  json report = {{"prediction_rule", c.train.prediction_rule},
                 {"split", {{"train", sp.train.size()}, {"val", sp.val.size()}, {"test", sp.test.size()}}}};
  for (auto [name, pred] : {std::pair{"attribute", &attr}, std::pair{"general", &general}}) {
    json acc;
    for (auto part : {SplitPart::train, SplitPart::val, SplitPart::test})
      if (!sp.part(part).empty())
        acc[std::string(to_string(part)) + "_acc"] = accuracy(*pred, ds, sp.part(part)).value();
    report[name] = acc;
  }
  report["attribute"]["final_epoch_loss"] = sje.epoch_loss.back();
  report["general"]["final_epoch_loss"] = gen.epoch_loss.back();
  if (!sp.test.empty())
    report["test_acc_difference"] =
        std::abs(report["attribute"]["test_acc"].get<double>() - report["general"]["test_acc"].get<double>());
  run.write_json("train_report.json", report);
  run.finish();
}

void cmd_robust_train(const RunConfig& c) {
  c.validate();
  Run run(c, "robust-train");
  auto ctx = load_context(c, run);
  const auto loss = parse_attack_loss(c.attack.loss);

  RobustTrainConfig sje_cfg{train_config(c, "train-sje"),
                            attack_config(c, c.attack.epsilon_rel, ctx.feature_scale, loss),
                            c.robust.mix_alpha};
  RobustTrainConfig gen_cfg{train_config(c, "train-general"),
                            attack_config(c, c.attack.epsilon_rel, ctx.feature_scale,
                                          AttackLoss::cross_entropy),
                            c.robust.mix_alpha};
  auto sje = run.stage("robust-sje", [&] { return adv_train_sje(ctx.dataset, ctx.split.train, ctx.map, sje_cfg); });
  auto gen = run.stage("robust-general",
                       [&] { return adv_train_general(ctx.dataset, ctx.split.train, ctx.map, gen_cfg); });
  save_model(sje.model, run.path("models/sje_robust.model"));
  save_model(gen.model, run.path("models/general_robust.model"));
  run.artifact("models/sje_robust.model");
  run.artifact("models/general_robust.model");

  const auto& test = ctx.split.test.empty() ? ctx.split.train : ctx.split.test;
  json report = {{"epsilon", sje_cfg.attack.epsilon},
                 {"epsilon_rel", c.attack.epsilon_rel},
                 {"feature_scale", ctx.feature_scale},
                 {"mix_alpha", c.robust.mix_alpha},
                 {"evaluated_on", ctx.split.test.empty() ? "train" : "test"}};
  run.stage("evaluate", [&] {
    const Predictor std_attr = attribute_classifier(ctx, c, run.path("models/sje_standard.model"));
    const Predictor rob_attr = AttributeClassifier(ctx.map, sje.model, ctx.dataset.class_attributes(), c.train.margin);
    const Predictor std_gen = general_predictor(ctx, run.path("models/general_standard.model"));
    const Predictor rob_gen = GeneralPredictor(ctx.map, gen.model);
    auto eval = [&](const Predictor& standard, const Predictor& robust, const AttackConfig& a) {
      const auto s = attack_dataset(standard, ctx.dataset, test, a).summary;
      const auto r = attack_dataset(robust, ctx.dataset, test, a).summary;
      return to_json(make_report(s.clean_acc(), s.adv_acc(), r.clean_acc(), r.adv_acc()));
    };
    report["attribute"] = eval(std_attr, rob_attr, sje_cfg.attack);
    report["general"] = eval(std_gen, rob_gen, gen_cfg.attack);
    return 0;
  });
  run.write_json("robust_report.json", report);
  run.finish();
}

void cmd_sweep(const RunConfig& c) {
  c.validate();
  Run run(c, "sweep");
  auto ctx = load_context(c, run);
  const bool robust = has_robust(run);
  const auto& test = ctx.split.test.empty() ? ctx.split.train : ctx.split.test;
  const auto loss = parse_attack_loss(c.attack.loss);

  struct Entry {
    std::string classifier, model;
    Predictor predictor;
    AttackLoss loss;
  };
  std::vector<Entry> entries;
  entries.push_back({"general", "standard", general_predictor(ctx, run.path("models/general_standard.model")),
                     AttackLoss::cross_entropy});
  if (robust)
    entries.push_back({"general", "robust", general_predictor(ctx, run.path("models/general_robust.model")),
                       AttackLoss::cross_entropy});
  entries.push_back({"attribute", "standard",
                     attribute_classifier(ctx, c, run.path("models/sje_standard.model")), loss});
  if (robust)
    entries.push_back({"attribute", "robust",
                       attribute_classifier(ctx, c, run.path("models/sje_robust.model")), loss});

  // (classifier, model) -> per-epsilon summaries
  std::map<std::pair<std::string, std::string>, std::vector<AttackSummary>> results;
  auto out = run.open("sweep.csv");
  out << "epsilon,epsilon_rel,classifier,model,n,clean_acc,adv_acc,flip_rate\n";
  run.stage("attack", [&] {
    for (double rel : c.sweep.epsilons_rel)
      for (const auto& e : entries) {
        const auto a = attack_config(c, rel, ctx.feature_scale, e.loss);
        const auto s = attack_dataset(e.predictor, ctx.dataset, test, a).summary;
        results[{e.classifier, e.model}].push_back(s);
        out << format_double(a.epsilon) << ',' << format_double(rel) << ',' << e.classifier << ','
            << e.model << ',' << s.n << ',' << format_double(s.clean_acc()) << ','
            << format_double(s.adv_acc()) << ',' << format_double(s.flip_rate()) << '\n';
      }
    return 0;
  });
  out.close();

  if (robust) {
    for (std::string clf : {"attribute", "general"}) {
      auto csv = run.open("robustification_" + clf + ".csv");
      csv << "epsilon,clean_acc,adv_acc_standard,adv_acc_robust,measure\n";
      const auto& st = results[{clf, "standard"}];
      const auto& rb = results[{clf, "robust"}];
      for (std::size_t i = 0; i < st.size(); ++i) {
        const auto r = make_report(st[i].clean_acc(), st[i].adv_acc(), rb[i].clean_acc(), rb[i].adv_acc());
        csv << format_double(st[i].epsilon) << ',' << format_double(r.clean_acc_standard) << ','
            << format_double(r.adv_acc_standard) << ',' << format_double(r.adv_acc_robust) << ','
            << (r.measure ? format_double(*r.measure) : std::string("NA")) << '\n';
      }
    }
  }
  run.finish();
}

void cmd_explain(const RunConfig& c) {
  c.validate();
  Run run(c, "explain");
  auto ctx = load_context(c, run);
  const bool robust = has_robust(run);
  const auto& test = ctx.split.test.empty() ? ctx.split.train : ctx.split.test;
  const auto& gallery = ctx.split.part(c.explain.gallery == "train" ? SplitPart::train
                                       : c.explain.gallery == "val" ? SplitPart::val
                                                                    : SplitPart::test);
  const auto loss = parse_attack_loss(c.attack.loss);
  const auto attack = attack_config(c, c.attack.epsilon_rel, ctx.feature_scale, loss);
  const std::size_t k = c.explain.k.value_or(std::min<std::size_t>(ctx.dataset.num_attributes(), 10));
  require(k <= ctx.dataset.num_attributes(), "explain.k exceeds the number of attributes");

  const auto std_clf = attribute_classifier(ctx, c, run.path("models/sje_standard.model"));
  const Predictor std_pred = std_clf;
  const auto std_attack = run.stage("attack-standard", [&] { return attack_dataset(std_pred, ctx.dataset, test, attack); });

  std::optional<AttributeClassifier> rob_clf;
  std::optional<AttackResult> rob_attack;
  if (robust) {
    rob_clf = attribute_classifier(ctx, c, run.path("models/sje_robust.model"));
    const Predictor rob_pred = *rob_clf;
    rob_attack = run.stage("attack-robust", [&] { return attack_dataset(rob_pred, ctx.dataset, test, attack); });
  }

  std::vector<ExplanationRecord> records(test.size());
  run.stage("explain", [&] {
    for_each_index(test.size(), Exec::parallel, [&](std::size_t i) {
      std::optional<RobustView> view;
      if (rob_attack) {
        const auto& rs = rob_attack->samples[i];
        view = RobustView{rs.predicted_perturbed, rob_clf->attributes(rs.perturbed)};
      }
      records[i] = build_explanation(std_attack.samples[i], std_clf, ctx.dataset, gallery, k,
                                     c.explain.m, view);
    });
    return 0;
  });

  std::map<std::string, std::size_t> status_counts;
  {
    auto out = run.open("explanations.jsonl");
    for (const auto& r : records) {
      ++status_counts[r.status];
      if (r.explainable) out << to_json(r).dump() << '\n';
    }
  }

  const Matrix& phi = std_clf.class_attributes();
  auto observe = [&](const AttributeClassifier& clf, const PerturbedSample& s, bool perturbed) {
    const Vector& x = perturbed ? s.perturbed : s.original;
    return AttributeObservation{s.sample_id, s.true_label,
                                perturbed ? s.predicted_perturbed : s.predicted_clean,
                                clf.attributes(x)};
  };
  auto emit = [&](const std::string& stem, const std::vector<AttributeObservation>& a,
                  const std::vector<AttributeObservation>& b, DistanceMode mode) {
    json stats;
    try {
      const auto s = mode == DistanceMode::standard ? distance_analysis_standard(a, b, phi)
                                                    : distance_analysis_robust(a, b, phi);
      auto csv = run.open(stem + ".csv");
      write_distance_csv(s, csv);
      stats = stats_json(s);
    } catch (const ValidationError& e) {
      // An empty eligible set is a result, not a failure of the command.
      stats = {{"mode", to_string(mode)}, {"candidates", a.size()}, {"eligible", 0}, {"note", e.what()}};
    }
    run.write_json(stem + ".json", stats);
    return stats;
  };

  std::vector<AttributeObservation> clean, adv;
  for (const auto& s : std_attack.samples) {
    clean.push_back(observe(std_clf, s, false));
    adv.push_back(observe(std_clf, s, true));
  }
  json summary = {{"attack", to_json(std_attack.summary)},
                  {"epsilon_rel", c.attack.epsilon_rel},
                  {"feature_scale", ctx.feature_scale},
                  {"k", k},
                  {"m", c.explain.m},
                  {"gallery", c.explain.gallery},
                  {"records", status_counts.count("ok") ? status_counts["ok"] : 0},
                  {"status_counts", status_counts}};
  summary["distance_standard"] = emit("distance_standard", clean, adv, DistanceMode::standard);
  if (rob_attack) {
    std::vector<AttributeObservation> robust_adv;
    for (const auto& s : rob_attack->samples) robust_adv.push_back(observe(*rob_clf, s, true));
    summary["attack_robust"] = to_json(rob_attack->summary);
    summary["distance_robust"] = emit("distance_robust", robust_adv, adv, DistanceMode::robust);
  }
  run.write_json("explain_summary.json", summary);
  run.finish();
}

std::string cmd_report(const RunConfig& c) {
  c.validate();
  Run run(c, "report");
  auto load = [&](const std::string& rel) -> json {
    std::ifstream in(run.path(rel));
    if (!in) return nullptr;
    try {
      return json::parse(in);
    } catch (const json::parse_error& e) {
      throw ValidationError(rel + ": " + e.what());
    }
  };
  json report;
  report["train"] = load("train_report.json");
  report["robust"] = load("robust_report.json");
  report["explain"] = load("explain_summary.json");
  json digests = json::object();
  for (auto cmd : {"generate", "train", "robust-train", "sweep", "explain"}) {
    const json m = load(std::string("manifests/") + cmd + ".json");
    if (m.is_null()) continue;
    for (const auto& a : m["artifacts"]) {
      const std::string rel = a["path"];
      const std::string now = fs::exists(run.path(rel)) ? sha256_file(run.path(rel)) : "missing";
      require(now == a["sha256"].get<std::string>(),
              "artifact " + rel + " no longer matches its " + cmd + " manifest digest");
      digests[rel] = now;
    }
  }
  report["artifacts"] = digests;
  run.write_json("report.json", report);
  run.finish();

  std::ostringstream text;
  text << "attrx report for " << c.out_dir << "\n";
  if (!report["train"].is_null()) {
    const auto& t = report["train"];
    text << "  clean test accuracy: attribute " << t["attribute"].value("test_acc", 0.0)
         << ", general " << t["general"].value("test_acc", 0.0) << " (rule "
         << t["prediction_rule"].get<std::string>() << ")\n";
  }
  if (!report["robust"].is_null()) {
    const auto& r = report["robust"];
    for (auto clf : {"attribute", "general"})
      text << "  " << clf << " @eps " << r["epsilon"].get<double>() << ": adv acc standard "
           << r[clf]["adv_acc_standard"] << ", robust " << r[clf]["adv_acc_robust"]
           << ", measure " << r[clf]["measure"] << "\n";
  }
  if (!report["explain"].is_null()) {
    const auto& e = report["explain"];
    text << "  explanations: " << e["records"] << " records from " << e["attack"]["n"]
         << " attacked samples\n";
    const auto& d = e["distance_standard"];
    if (d.value("eligible", 0) > 0)
      text << "  standard distances: mean d1 " << d["d1"]["mean"] << ", mean d2 "
           << d["d2"]["mean"] << ", overlap " << d["overlap"] << "\n";
  }
  text << "  artifacts verified: " << digests.size() << "\n";
  return text.str();
}

}  // namespace attrx
