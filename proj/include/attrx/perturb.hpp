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

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "attrx/data.hpp"
#include "attrx/embed.hpp"
#include "attrx/parallel.hpp"

namespace attrx {

enum class AttackLoss {
  // Structured hinge of the attribute classifier; flat (zero gradient) once
  // the true class wins by the full margin.
  ranking,
  // The hinge's argument without the clamp at zero. Same gradient wherever
  // the hinge is active, and keeps pushing beyond it.
  ranking_margin,
  // Softmax cross-entropy of the general classifier.
  cross_entropy,
};

const char* to_string(AttackLoss loss);
AttackLoss parse_attack_loss(std::string_view s);

struct AttackConfig {
  double epsilon = 0.0;  // l_inf radius around the original input
  double alpha = 1.0;    // step size
  int steps = 10;
  AttackLoss loss = AttackLoss::ranking_margin;

  void validate() const;

  // alpha = epsilon / steps, or 1 when epsilon is 0 (any step is clipped away).
  static AttackConfig with_default_alpha(double epsilon, int steps, AttackLoss loss);
};

struct PerturbedSample {
  std::size_t sample_id = 0;
  Vector original;
  Vector perturbed;
  int true_label = 0;
  int predicted_clean = 0;
  int predicted_perturbed = 0;
  double loss_before = 0.0;
  double loss_after = 0.0;

  bool clean_correct() const { return predicted_clean == true_label; }
  bool flipped() const { return predicted_clean != predicted_perturbed; }
  // Correct on the clean input, wrong after the perturbation.
  bool eligible() const { return clean_correct() && predicted_perturbed != true_label; }
};

// Loss of `p` at x for label y; `loss` must match the predictor type.
double attack_loss_value(const Predictor& p, const Vector& x, int y, AttackLoss loss);

// Analytic gradient of the selected loss w.r.t. the raw input x, chained
// through the predictor's differentiable map.
Vector loss_grad_wrt_input(const Predictor& p, const Vector& x, int y, AttackLoss loss);

// sign with sign(0) = 0
Vector sign_of(const Vector& v);

// Untargeted iterative FGSM. Each step moves by alpha * sign(grad) and is then
// projected onto the l_inf ball around the original input, intersected with
// the feature bounds when given. Runs exactly config.steps iterations.
PerturbedSample ifgsm(const Predictor& p, const Vector& x, int y_true, const AttackConfig& config,
                      const std::optional<FeatureBounds>& bounds = std::nullopt);

struct AttackSummary {
  double epsilon = 0.0;
  double alpha = 0.0;
  int steps = 0;
  std::size_t n = 0;
  std::size_t clean_correct = 0;
  std::size_t adv_correct = 0;
  std::size_t flipped = 0;   // prediction changed
  std::size_t eligible = 0;  // clean-correct and adversarially wrong

  double clean_acc() const;
  double adv_acc() const;
  double flip_rate() const;  // flipped / n
};

struct AttackResult {
  std::vector<PerturbedSample> samples;  // in the order of the given indices
  AttackSummary summary;
};

AttackResult attack_dataset(const Predictor& p, const Dataset& dataset,
                            std::span<const std::size_t> indices, const AttackConfig& config,
                            Exec exec = Exec::parallel);

}  // namespace attrx
