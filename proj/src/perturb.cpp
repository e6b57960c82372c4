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

#include "attrx/perturb.hpp"

#include <cmath>
#include <string>

#include "attrx/error.hpp"

namespace attrx {

const char* to_string(AttackLoss loss) {
  switch (loss) {
    case AttackLoss::ranking: return "ranking";
    case AttackLoss::ranking_margin: return "ranking-margin";
    case AttackLoss::cross_entropy: return "cross-entropy";
  }
  return "?";
}

AttackLoss parse_attack_loss(std::string_view s) {
  if (s == "ranking") return AttackLoss::ranking;
  if (s == "ranking-margin") return AttackLoss::ranking_margin;
  if (s == "cross-entropy") return AttackLoss::cross_entropy;
  throw ValidationError("unknown attack loss '" + std::string(s) + "'");
}

void AttackConfig::validate() const {
  require(std::isfinite(epsilon) && epsilon >= 0.0, "attack epsilon must be >= 0");
  require(std::isfinite(alpha) && alpha > 0.0, "attack alpha must be > 0");
  require(steps >= 1, "attack steps must be >= 1");
}

AttackConfig AttackConfig::with_default_alpha(double epsilon, int steps, AttackLoss loss) {
  AttackConfig c;
  c.epsilon = epsilon;
  c.steps = steps;
  c.alpha = epsilon > 0.0 && steps > 0 ? epsilon / steps : 1.0;
  c.loss = loss;
  return c;
}

namespace {

const AttributeClassifier& as_attribute(const Predictor& p, AttackLoss loss) {
  const auto* a = std::get_if<AttributeClassifier>(&p);
  require(a != nullptr,
          std::string("attack loss '") + to_string(loss) + "' needs an attribute classifier");
  return *a;
}

const GeneralPredictor& as_general(const Predictor& p) {
  const auto* g = std::get_if<GeneralPredictor>(&p);
  require(g != nullptr, "attack loss 'cross-entropy' needs a general classifier");
  return *g;
}

}  // namespace

double attack_loss_value(const Predictor& p, const Vector& x, int y, AttackLoss loss) {
  if (loss == AttackLoss::cross_entropy) {
    const auto& g = as_general(p);
    return cross_entropy(g.map(), g.classifier(), x, y);
  }
  const auto& a = as_attribute(p, loss);
  const auto v = worst_violation(a.scores(x), y, a.margin());
  return loss == AttackLoss::ranking ? std::max(0.0, v.value) : v.value;
}

Vector loss_grad_wrt_input(const Predictor& p, const Vector& x, int y, AttackLoss loss) {
  if (loss == AttackLoss::cross_entropy) {
    const auto& g = as_general(p);
    return cross_entropy_gradient(g.map(), g.classifier(), x, y).input;
  }
  const auto& a = as_attribute(p, loss);
  // The classifier already holds the prepared class matrix, so hand the model
  // a non-normalizing copy of itself to avoid normalizing twice.
  EmbeddingModel m = a.model();
  m.normalize_class_attributes = false;
  return ranking_loss_gradient(a.map(), m, x, y, a.class_attributes(), a.margin(),
                               loss == AttackLoss::ranking)
      .input;
}

Vector sign_of(const Vector& v) {
  return v.unaryExpr([](double g) { return g > 0.0 ? 1.0 : (g < 0.0 ? -1.0 : 0.0); });
}

PerturbedSample ifgsm(const Predictor& p, const Vector& x, int y_true, const AttackConfig& config,
                      const std::optional<FeatureBounds>& bounds) {
  config.validate();
  Vector lo = x.array() - config.epsilon;
  Vector hi = x.array() + config.epsilon;
  if (bounds) {
    require(bounds->low.size() == x.size() && bounds->high.size() == x.size(),
            "feature bounds do not match the input dimension");
    lo = lo.cwiseMax(bounds->low);
    hi = hi.cwiseMin(bounds->high);
  }

  PerturbedSample out;
  out.original = x;
  out.true_label = y_true;
  out.predicted_clean = predict(p, x);
  out.loss_before = attack_loss_value(p, x, y_true, config.loss);
  if (!std::isfinite(out.loss_before)) throw NumericalError("attack loss is not finite at step 0");

  Vector adv = x;
  for (int i = 0; i < config.steps; ++i) {
    const Vector g = loss_grad_wrt_input(p, adv, y_true, config.loss);
    if (!g.allFinite())
      throw NumericalError("attack gradient is not finite at step " + std::to_string(i));
    adv = (adv + config.alpha * sign_of(g)).cwiseMax(lo).cwiseMin(hi);
  }
  out.perturbed = std::move(adv);
  out.predicted_perturbed = predict(p, out.perturbed);
  out.loss_after = attack_loss_value(p, out.perturbed, y_true, config.loss);
  if (!std::isfinite(out.loss_after)) throw NumericalError("attack loss is not finite after attack");
  return out;
}

double AttackSummary::clean_acc() const {
  return n == 0 ? 0.0 : static_cast<double>(clean_correct) / static_cast<double>(n);
}
double AttackSummary::adv_acc() const {
  return n == 0 ? 0.0 : static_cast<double>(adv_correct) / static_cast<double>(n);
}
double AttackSummary::flip_rate() const {
  return n == 0 ? 0.0 : static_cast<double>(flipped) / static_cast<double>(n);
}

AttackResult attack_dataset(const Predictor& p, const Dataset& dataset,
                            std::span<const std::size_t> indices, const AttackConfig& config,
                            Exec exec) {
  config.validate();
  require(!indices.empty(), "attack split is empty");
  AttackResult r;
  r.samples.resize(indices.size());
  for_each_index(indices.size(), exec, [&](std::size_t k) {
    const auto& s = dataset.sample(indices[k]);
    r.samples[k] = ifgsm(p, s.features, s.label, config, dataset.bounds());
    r.samples[k].sample_id = indices[k];
  });
  auto& sum = r.summary;
  sum.epsilon = config.epsilon;
  sum.alpha = config.alpha;
  sum.steps = config.steps;
  sum.n = r.samples.size();
  for (const auto& s : r.samples) {
    sum.clean_correct += s.clean_correct() ? 1 : 0;
    sum.adv_correct += s.predicted_perturbed == s.true_label ? 1 : 0;
    sum.flipped += s.flipped() ? 1 : 0;
    sum.eligible += s.eligible() ? 1 : 0;
  }
  return r;
}

}  // namespace attrx
