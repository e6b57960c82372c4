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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "attrx/error.hpp"
#include "attrx/explain.hpp"
#include "attrx/gradcheck.hpp"
#include "attrx/robust.hpp"
#include "suite.hpp"
#include "test_util.hpp"

using namespace attrx;
using attrx::testing::build_suite;
using attrx::testing::random_matrix;
using attrx::testing::random_vector;
using attrx::testing::read_text;
using attrx::testing::Suite;
using attrx::testing::TempDir;
namespace fs = std::filesystem;

namespace {

// Tolerances and limits.
constexpr double kGradTol = 1e-4;
constexpr int kGradPoints = 20;
constexpr double kBallTol = 1e-12;
constexpr double kMinDrop = 0.30;
constexpr double kMinRecovery = 0.10;
constexpr int kOracleInstances = 100;
constexpr std::size_t kMaxGallery = 50;
constexpr double kParityFloor = 0.95;
constexpr double kParityGap = 0.05;
constexpr double kMonotoneSlack = 0.0;
constexpr std::size_t kMinEligible = 30;
constexpr std::size_t kRegimeSamplesPerClass = 100;
constexpr double kCoarseSimilarity = 0.1;
constexpr double kFineSimilarity = 0.8;
const std::vector<double> kRegimeGrid{0.15, 0.2, 0.25, 0.3, 0.35, 0.4, 0.5, 0.6, 0.8};

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool run_criterion(int id, const char* name, double limit_s, const std::function<Outcome()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > limit_s) {
    o.pass = false;
    o.detail += fmt("; over the %.0f s limit", limit_s);
  }
  std::printf("CRITERION %d %s %s: %s [%.2f s]\n", id, o.pass ? "PASS" : "FAIL", name,
              o.detail.c_str(), secs);
  std::fflush(stdout);
  return o.pass;
}

EmbeddingModel model_of(Matrix w) {
  EmbeddingModel m;
  m.weights = std::move(w);
  return m;
}

// Largest unclamped margin term is isolated and away from zero.
bool smooth_point(const Vector& scores, int t, double margin) {
  std::vector<double> terms;
  for (Eigen::Index c = 0; c < scores.size(); ++c)
    if (c != t) terms.push_back(margin + scores(c) - scores(t));
  std::sort(terms.rbegin(), terms.rend());
  return std::abs(terms[0]) > 1e-6 && terms[0] - terms[1] > 1e-6;
}

Outcome gradients() {
  std::mt19937_64 rng(101);
  const auto map = DifferentiableMap::tanh_hidden(6, 7, 5, 3);
  const std::size_t A = 4, C = 5;
  double worst_rank = 0.0, worst_ce = 0.0;
  int rank_points = 0;
  for (int attempt = 0; rank_points < kGradPoints && attempt < 1000; ++attempt) {
    const Matrix w = random_matrix(rng, 5, A);
    const Matrix phi = random_matrix(rng, C, A);
    const Vector x = random_vector(rng, 6);
    const int y = static_cast<int>(rng() % C);
    const auto model = model_of(w);
    if (!smooth_point(phi * predict_attributes(map, model, x), y, 1.0)) continue;
    const auto g = ranking_loss_gradient(map, model, x, y, phi, 1.0);
    auto fx = [&](const Vector& z) { return ranking_loss(map, model, z, y, phi, 1.0); };
    auto fw = [&](const Vector& f) {
      return ranking_loss(map, model_of(unflatten(f, w.rows(), w.cols())), x, y, phi, 1.0);
    };
    worst_rank = std::max({worst_rank, relative_error(g.input, central_difference(fx, x)),
                           relative_error(flatten(g.weights), central_difference(fw, flatten(w)))});
    ++rank_points;
  }
  for (int t = 0; t < kGradPoints; ++t) {
    const GeneralClassifier clf{random_matrix(rng, 5, C), random_vector(rng, C)};
    const Vector x = random_vector(rng, 6);
    const int y = static_cast<int>(rng() % C);
    const auto g = cross_entropy_gradient(map, clf, x, y);
    auto fx = [&](const Vector& z) { return cross_entropy(map, clf, z, y); };
    auto fw = [&](const Vector& f) { return cross_entropy(map, {unflatten(f, 5, C), clf.bias}, x, y); };
    auto fb = [&](const Vector& b) { return cross_entropy(map, {clf.weights, b}, x, y); };
    worst_ce = std::max({worst_ce, relative_error(g.input, central_difference(fx, x)),
                         relative_error(flatten(g.weights), central_difference(fw, flatten(clf.weights))),
                         relative_error(g.bias, central_difference(fb, clf.bias))});
  }
  return {rank_points == kGradPoints && worst_rank < kGradTol && worst_ce < kGradTol,
          fmt("ranking %d points max rel err %.2e, cross-entropy %d points max rel err %.2e", rank_points,
              worst_rank, kGradPoints, worst_ce)};
}

Outcome attack_efficacy(const Suite& s) {
  const double rel = s.config.attack.epsilon_rel;
  const auto cfg = s.attack(rel, parse_attack_loss(s.config.attack.loss));
  const auto res = attack_dataset(s.attribute_classifier(), s.dataset, s.split.test, cfg);
  std::size_t inside = 0;
  const auto& b = s.dataset.bounds();
  for (const auto& p : res.samples) {
    bool ok = (p.perturbed - p.original).cwiseAbs().maxCoeff() <= cfg.epsilon + kBallTol;
    if (b) ok = ok && (p.perturbed.array() >= b->low.array() - kBallTol).all() &&
                (p.perturbed.array() <= b->high.array() + kBallTol).all();
    inside += ok;
  }
  const double drop = res.summary.clean_acc() - res.summary.adv_acc();
  return {inside == res.samples.size() && drop >= kMinDrop,
          fmt("%zu/%zu inside the ball; eps_rel %.2f: accuracy %.4f -> %.4f (drop %.1f pp, need %.0f)",
              inside, res.samples.size(), rel, res.summary.clean_acc(), res.summary.adv_acc(),
              100 * drop, 100 * kMinDrop)};
}

Outcome robust_recovery(const Suite& s) {
  const double rel = s.config.attack.epsilon_rel;
  const auto attack = s.attack(rel, AttackLoss::ranking_margin);
  const auto robust =
      adv_train_sje(s.dataset, s.split.train, s.map, {s.sje_config, attack, s.config.robust.mix_alpha}).model;
  const double std_adv =
      attack_dataset(s.attribute_classifier(), s.dataset, s.split.test, attack).summary.adv_acc();
  const double rob_adv =
      attack_dataset(s.attribute_classifier(robust), s.dataset, s.split.test, attack).summary.adv_acc();

  const auto zero = s.attack(0.0, AttackLoss::ranking_margin);
  const auto z_sje = adv_train_sje(s.dataset, s.split.train, s.map, {s.sje_config, zero, s.config.robust.mix_alpha});
  const auto z_gen = adv_train_general(s.dataset, s.split.train, s.map,
                                       {s.general_config, s.attack(0.0, AttackLoss::cross_entropy),
                                        s.config.robust.mix_alpha});
  const bool exact = z_sje.model == s.sje && z_gen.model == s.general;
  return {exact && rob_adv - std_adv >= kMinRecovery,
          fmt("adversarial accuracy standard %.4f, robust %.4f (+%.1f pp, need %.0f); eps 0 bit-exact: %s",
              std_adv, rob_adv, 100 * (rob_adv - std_adv), 100 * kMinRecovery, exact ? "yes" : "no")};
}

Outcome counter_example_oracle() {
  std::mt19937_64 rng(404);
  std::uniform_int_distribution<int> grid(0, 2);
  int agree = 0;
  for (int t = 0; t < kOracleInstances; ++t) {
    const std::size_t n = 1 + rng() % kMaxGallery, dim = 2 + rng() % 6, m = 1 + rng() % n;
    std::vector<GalleryEntry> g;
    std::vector<std::size_t> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = 3 * i + rng() % 3;
    std::shuffle(ids.begin(), ids.end(), rng);
    for (std::size_t i = 0; i < n; ++i) {
      Vector a = random_vector(rng, dim);
      if (t % 2)  // coarse lattice: frequent equal distances
        for (auto& v : a) v = grid(rng);
      g.push_back({ids[i], 2, a});
    }
    const Vector q = t % 2 ? Vector::Zero(dim) : random_vector(rng, dim);

    std::vector<std::pair<double, std::size_t>> all;
    for (const auto& e : g) all.push_back({(q - e.attributes).norm(), e.sample_id});
    std::sort(all.begin(), all.end());
    const auto got = select_counter_examples(q, 2, g, m);
    bool ok = got.size() == m;
    for (std::size_t i = 0; ok && i < m; ++i)
      ok = got[i].sample_id == all[i].second && got[i].distance == all[i].first;
    agree += ok;
  }
  return {agree == kOracleInstances, fmt("%d/%d instances agree exactly", agree, kOracleInstances)};
}

std::vector<ScoredIndex> sort_oracle(const Vector& diff, std::size_t k) {
  std::vector<ScoredIndex> all;
  for (Eigen::Index i = 0; i < diff.size(); ++i) all.push_back({static_cast<int>(i), diff(i)});
  std::stable_sort(all.begin(), all.end(), [](auto& a, auto& b) { return a.score > b.score; });
  all.resize(k);
  return all;
}

Outcome discriminative_oracle() {
  std::mt19937_64 rng(505);
  std::uniform_int_distribution<int> grid(0, 3);
  int agree = 0;
  for (int t = 0; t < kOracleInstances; ++t) {
    const std::size_t A = 1 + rng() % 30, k = 1 + rng() % A;
    Vector a = random_vector(rng, A), b = random_vector(rng, A);
    if (t % 3 == 0)
      for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = grid(rng), b(i) = grid(rng);
    const bool ok = select_discriminative_clean(a, b, k) == sort_oracle(a - b, k) &&
                    select_discriminative_adv(a, b, k) == sort_oracle(a - b, k);
    agree += ok;
  }
  return {agree == kOracleInstances, fmt("%d/%d instances agree exactly", agree, kOracleInstances)};
}

struct Regime {
  Suite suite;
  std::map<double, AttackResult> attacks;

  const AttackResult& at(double rel) {
    auto it = attacks.find(rel);
    if (it == attacks.end())
      it = attacks.emplace(rel, attack_dataset(suite.attribute_classifier(), suite.dataset, suite.split.test,
                                               suite.attack(rel, AttackLoss::ranking_margin))).first;
    return it->second;
  }
  DistanceSummary distances(double rel) {
    const auto clf = suite.attribute_classifier();
    std::vector<AttributeObservation> clean, adv;
    for (const auto& p : at(rel).samples) {
      clean.push_back({p.sample_id, p.true_label, p.predicted_clean, clf.attributes(p.original)});
      adv.push_back({p.sample_id, p.true_label, p.predicted_perturbed, clf.attributes(p.perturbed)});
    }
    return distance_analysis_standard(clean, adv, clf.class_attributes());
  }
};

Regime regime(double similarity) {
  RunConfig c;
  c.data.class_similarity = similarity;
  c.data.samples_per_class = kRegimeSamplesPerClass;
  return {build_suite(c), {}};
}

Outcome distance_regimes() {
  auto coarse = regime(kCoarseSimilarity), fine = regime(kFineSimilarity);
  // Smallest radius on the fixed grid with enough eligible samples in both runs.
  double rel = std::numeric_limits<double>::quiet_NaN();
  for (double e : kRegimeGrid)
    if (coarse.at(e).summary.eligible >= kMinEligible && fine.at(e).summary.eligible >= kMinEligible) {
      rel = e;
      break;
    }
  if (std::isnan(rel)) return {false, "no grid radius gives enough eligible samples in both runs"};
  const auto a = coarse.distances(rel), b = fine.distances(rel);
  const bool below = a.d1_stats.mean < a.d2_stats.mean;
  const bool wider = b.overlap > a.overlap;
  return {below && wider,
          fmt("eps_rel %.2f; similarity %.1f: n %zu, mean d1 %.4f %s mean d2 %.4f, overlap %.4f; "
              "similarity %.1f: n %zu, mean d1 %.4f, mean d2 %.4f, overlap %.4f (%s)",
              rel, kCoarseSimilarity, a.d1.size(), a.d1_stats.mean, below ? "<" : ">=", a.d2_stats.mean,
              a.overlap, kFineSimilarity, b.d1.size(), b.d1_stats.mean, b.d2_stats.mean, b.overlap,
              wider ? "overlap increases" : "overlap does not increase")};
}

Outcome parity(const Suite& s) {
  const double a = accuracy(s.attribute_classifier(), s.dataset, s.split.test).value();
  const double g = accuracy(s.general_predictor(), s.dataset, s.split.test).value();
  return {a >= kParityFloor && g >= kParityFloor && std::abs(a - g) <= kParityGap,
          fmt("attribute %.4f, general %.4f, gap %.4f", a, g, std::abs(a - g))};
}

Outcome measure() {
  const bool full = robustification_measure(0.9, 0.3, 0.9) == std::optional<double>(1.0);
  const bool none = robustification_measure(0.9, 0.3, 0.3) == std::optional<double>(0.0);
  const bool na = !robustification_measure(0.8, 0.8, 0.9).has_value() &&
                  !make_report(0.8, 0.85, 0.8, 0.9).measure.has_value();
  bool monotone = true;
  int grids = 0;
  for (int ci = 1; ci <= 20; ++ci)
    for (int ai = 0; ai < ci; ++ai) {
      const double clean = ci / 20.0, adv = ai / 20.0;
      double prev = -1.0;
      for (int ri = 0; ri <= 100; ++ri) {
        const double r = *robustification_measure(clean, adv, ri / 100.0);
        monotone = monotone && r + kMonotoneSlack >= prev && r >= 0.0 && r <= 1.0;
        prev = r;
      }
      ++grids;
    }
  return {full && none && na && monotone,
          fmt("full recovery %s, no recovery %s, no drop NA %s, monotone on %d grids %s", full ? "1" : "wrong",
              none ? "0" : "wrong", na ? "yes" : "no", grids, monotone ? "yes" : "no")};
}

std::map<std::string, std::string> output_digests(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir / "manifests")) {
    const auto m = nlohmann::json::parse(read_text(e.path()));
    for (const auto& a : m["artifacts"]) out[a["path"].get<std::string>()] = a["sha256"].get<std::string>();
  }
  return out;
}

Outcome determinism() {
  TempDir a("accept-a"), b("accept-b");
  std::map<std::string, std::string> d[2];
  int i = 0;
  for (const TempDir* dir : {&a, &b}) {
    RunConfig c;
    c.out_dir = dir->path().string();
    cmd_generate(c);
    cmd_train(c);
    cmd_robust_train(c);
    cmd_sweep(c);
    cmd_explain(c);
    d[i++] = output_digests(dir->path());
  }
  std::size_t differ = 0;
  for (const auto& [path, digest] : d[0]) differ += !d[1].count(path) || d[1].at(path) != digest;
  return {!d[0].empty() && d[0].size() == d[1].size() && differ == 0,
          fmt("%zu artifacts, %zu differ", d[0].size(), differ)};
}

}  // namespace

int main() {
  int failed = 0;
  failed += !run_criterion(1, "gradient correctness", 10, gradients);
  const Suite suite = build_suite(RunConfig{});
  failed += !run_criterion(2, "attack containment and efficacy", 60, [&] { return attack_efficacy(suite); });
  failed += !run_criterion(3, "robust recovery", 300, [&] { return robust_recovery(suite); });
  failed += !run_criterion(4, "counter-example oracle", 60, counter_example_oracle);
  failed += !run_criterion(5, "discriminative attribute oracle", 60, discriminative_oracle);
  failed += !run_criterion(6, "distance regimes", 120, distance_regimes);
  failed += !run_criterion(7, "classifier parity", 60, [&] { return parity(suite); });
  failed += !run_criterion(8, "robustification measure", 60, measure);
  failed += !run_criterion(9, "end-to-end determinism", 300, determinism);
  std::printf("%d of 9 criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
