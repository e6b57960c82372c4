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

#include "attrx/robust.hpp"

#include <algorithm>
#include <cmath>

#include "attrx/error.hpp"
#include "sgd.hpp"

namespace attrx {

void RobustTrainConfig::validate() const {
  base.validate();
  attack.validate();
  require(mix_alpha >= 0.0 && mix_alpha <= 1.0, "mix_alpha must lie in [0, 1]");
}

Trained<EmbeddingModel> adv_train_sje(const Dataset& dataset, std::span<const std::size_t> train,
                                      const DifferentiableMap& map,
                                      const RobustTrainConfig& config) {
  config.validate();
  require(config.attack.loss != AttackLoss::cross_entropy,
          "attribute model adversarial training needs a ranking attack loss");
  const Matrix& phi = dataset.class_attributes();
  const double margin = config.base.margin;
  detail::Adversary<EmbeddingModel> adversary = [&](const EmbeddingModel& model, const Vector& x,
                                                    int label) {
    const Predictor current = AttributeClassifier(map, model, phi, margin);
    return ifgsm(current, x, label, config.attack, dataset.bounds()).perturbed;
  };
  return detail::sgd_sje(dataset, train, map, config.base, std::nullopt, &adversary,
                         {config.mix_alpha});
}

Trained<GeneralClassifier> adv_train_general(const Dataset& dataset,
                                             std::span<const std::size_t> train,
                                             const DifferentiableMap& map,
                                             const RobustTrainConfig& config) {
  config.validate();
  AttackConfig attack = config.attack;
  attack.loss = AttackLoss::cross_entropy;
  detail::Adversary<GeneralClassifier> adversary = [&](const GeneralClassifier& clf,
                                                       const Vector& x, int label) {
    const Predictor current = GeneralPredictor(map, clf);
    return ifgsm(current, x, label, attack, dataset.bounds()).perturbed;
  };
  return detail::sgd_general(dataset, train, map, config.base, &adversary, {config.mix_alpha});
}

std::optional<double> robustification_measure(double clean_acc_standard, double adv_acc_standard,
                                              double adv_acc_robust) {
  for (double a : {clean_acc_standard, adv_acc_standard, adv_acc_robust})
    require(std::isfinite(a) && a >= 0.0 && a <= 1.0, "accuracies must lie in [0, 1]");
  const double lost = clean_acc_standard - adv_acc_standard;
  if (lost <= 0.0) return std::nullopt;
  return std::clamp((adv_acc_robust - adv_acc_standard) / lost, 0.0, 1.0);
}

RobustificationReport make_report(double clean_acc_standard, double adv_acc_standard,
                                  double clean_acc_robust, double adv_acc_robust) {
  require(std::isfinite(clean_acc_robust) && clean_acc_robust >= 0.0 && clean_acc_robust <= 1.0,
          "accuracies must lie in [0, 1]");
  RobustificationReport r;
  r.clean_acc_standard = clean_acc_standard;
  r.adv_acc_standard = adv_acc_standard;
  r.clean_acc_robust = clean_acc_robust;
  r.adv_acc_robust = adv_acc_robust;
  r.measure = robustification_measure(clean_acc_standard, adv_acc_standard, adv_acc_robust);
  return r;
}

}  // namespace attrx
