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

// Shared SGD drivers for standard and adversarial training.

#include <functional>
#include <optional>
#include <span>

#include "attrx/embed.hpp"

namespace attrx::detail {

// Produces the adversarial counterpart of x against the current parameters.
template <typename Model>
using Adversary = std::function<Vector(const Model& model, const Vector& x, int label)>;

struct AdversarialTerm {
  double mix_alpha = 0.5;  // weight of the clean loss
};

Trained<EmbeddingModel> sgd_sje(const Dataset& dataset, std::span<const std::size_t> train,
                                const DifferentiableMap& map, const TrainConfig& config,
                                std::optional<Matrix> initial_weights,
                                const Adversary<EmbeddingModel>* adversary, AdversarialTerm term);

Trained<GeneralClassifier> sgd_general(const Dataset& dataset, std::span<const std::size_t> train,
                                       const DifferentiableMap& map, const TrainConfig& config,
                                       const Adversary<GeneralClassifier>* adversary,
                                       AdversarialTerm term);

}  // namespace attrx::detail
