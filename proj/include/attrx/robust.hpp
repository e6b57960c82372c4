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

#include "attrx/embed.hpp"
#include "attrx/perturb.hpp"

namespace attrx {

struct RobustTrainConfig {
  TrainConfig base;
  // Inner attack, regenerated against the current parameters at every step.
  AttackConfig attack;
  // Weight of the clean loss; 1 - mix_alpha weighs the adversarial loss.
  double mix_alpha = 0.5;

  void validate() const;
};

// Adversarial training of the attribute-embedding model. The inner attack
// uses config.attack.loss (ranking or ranking-margin).
Trained<EmbeddingModel> adv_train_sje(const Dataset& dataset, std::span<const std::size_t> train,
                                      const DifferentiableMap& map,
                                      const RobustTrainConfig& config);

// Adversarial training of the general classifier; the inner attack always
// maximizes cross-entropy.
Trained<GeneralClassifier> adv_train_general(const Dataset& dataset,
                                             std::span<const std::size_t> train,
                                             const DifferentiableMap& map,
                                             const RobustTrainConfig& config);

struct RobustificationReport {
  double clean_acc_standard = 0.0;
  double adv_acc_standard = 0.0;
  double clean_acc_robust = 0.0;
  double adv_acc_robust = 0.0;
  // Empty when the attack caused no accuracy drop on the standard model.
  std::optional<double> measure;
};

/// Fraction of the attack-induced accuracy loss that adversarial training
/// recovers:
///
///   R = (adv_acc_robust - adv_acc_standard) / (clean_acc_standard - adv_acc_standard)
///
/// clamped to [0, 1]. Returns nullopt when clean_acc_standard <= adv_acc_standard,
/// where there is nothing to recover.
std::optional<double> robustification_measure(double clean_acc_standard, double adv_acc_standard,
                                              double adv_acc_robust);

RobustificationReport make_report(double clean_acc_standard, double adv_acc_standard,
                                  double clean_acc_robust, double adv_acc_robust);

}  // namespace attrx
