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
#include <string>
#include <vector>

#include "attrx/data.hpp"
#include "attrx/embed.hpp"
#include "attrx/parallel.hpp"
#include "attrx/perturb.hpp"

namespace attrx {

struct ScoredIndex {
  int index = 0;
  double score = 0.0;

  friend bool operator==(const ScoredIndex&, const ScoredIndex&) = default;
};

// Indices of the k largest scores, descending; equal scores by lowest index.
std::vector<ScoredIndex> top_k(const Vector& scores, std::size_t k);

// Attributes the clean prediction holds most in excess of the counter class:
// top-k of (clean_attrs - counter_class_attrs).
std::vector<ScoredIndex> select_discriminative_clean(const Vector& clean_attrs,
                                                     const Vector& counter_class_attrs,
                                                     std::size_t k);

// Attributes the perturbed prediction holds most in excess of the true class:
// top-k of (adv_attrs - true_class_attrs).
std::vector<ScoredIndex> select_discriminative_adv(const Vector& adv_attrs,
                                                   const Vector& true_class_attrs, std::size_t k);

// A clean sample of the counter class and its predicted attribute vector.
struct GalleryEntry {
  std::size_t sample_id = 0;
  int label = 0;
  Vector attributes;
};

struct CounterExample {
  std::size_t sample_id = 0;
  double distance = 0.0;

  friend bool operator==(const CounterExample&, const CounterExample&) = default;
};

// Predicted attributes for every sample of `counter_class` among `indices`.
std::vector<GalleryEntry> build_gallery(const AttributeClassifier& clf, const Dataset& dataset,
                                        std::span<const std::size_t> indices, int counter_class);

// The m gallery entries whose predicted attributes are nearest (L2) to
// `adv_attrs`, ascending by distance, equal distances by lowest sample id.
// The first element is the single best counter-example.
std::vector<CounterExample> select_counter_examples(const Vector& adv_attrs, int counter_class,
                                                    std::span<const GalleryEntry> gallery,
                                                    std::size_t m, Exec exec = Exec::parallel);

// Predicted attributes of one input together with the label the model gave it.
struct AttributeObservation {
  std::size_t sample_id = 0;
  int true_class = 0;
  int predicted_class = 0;
  Vector attributes;
};

enum class DistanceMode { standard, robust };

const char* to_string(DistanceMode mode);

struct DistanceStats {
  double mean = 0.0;
  double median = 0.0;
};

struct DistanceSummary {
  DistanceMode mode = DistanceMode::standard;
  std::vector<std::size_t> sample_ids;
  std::vector<int> true_classes;
  std::vector<int> counter_classes;
  std::vector<double> d1;
  std::vector<double> d2;
  std::size_t candidates = 0;  // aligned pairs offered before the eligibility filter
  DistanceStats d1_stats;
  DistanceStats d2_stats;
  double overlap = 0.0;
};

// Sum of bin-wise minima of the two normalized histograms on a shared grid
// spanning both samples. 1 when every value coincides.
double overlap_coefficient(std::span<const double> a, std::span<const double> b,
                           std::size_t bins = 30);

DistanceStats describe(std::span<const double> values);

// Pairs are matched by position and must refer to the same sample ids.
// Only pairs whose clean prediction is correct and perturbed prediction is
// wrong contribute: d1 = ||clean - adv||, d2 = ||phi(true) - phi(adv prediction)||.
DistanceSummary distance_analysis_standard(std::span<const AttributeObservation> clean,
                                           std::span<const AttributeObservation> adv,
                                           const Matrix& class_attributes);

// Only pairs where the robust model is right and the standard model wrong
// contribute: d1 = ||robust_adv - standard_adv||, d2 as above.
DistanceSummary distance_analysis_robust(std::span<const AttributeObservation> robust_adv,
                                         std::span<const AttributeObservation> standard_adv,
                                         const Matrix& class_attributes);

struct RobustView {
  int predicted_class = 0;
  Vector adv_attrs;  // robust model's attributes for its own perturbed input
};

struct ExplanationRecord {
  std::size_t sample_id = 0;
  bool explainable = false;
  std::string status;  // "ok", "clean-misclassified" or "attack-failed"
  int true_class = 0;
  int counter_class = -1;
  Vector clean_attrs;
  Vector adv_attrs;
  std::vector<ScoredIndex> discriminative_clean;
  std::vector<ScoredIndex> discriminative_adv;
  std::vector<CounterExample> counter_examples;
  std::vector<std::string> attribute_names;
  std::optional<RobustView> robust;
};

/// Explains one attacked sample with the standard attribute classifier.
///
/// The counter class is the sample's own perturbed prediction. Samples that
/// were misclassified clean, or that the attack failed to move, produce a
/// record with `explainable == false` and no attribute or example selections.
/// The gallery is drawn from `gallery_indices` restricted to the counter class.
ExplanationRecord build_explanation(const PerturbedSample& sample, const AttributeClassifier& clf,
                                    const Dataset& dataset,
                                    std::span<const std::size_t> gallery_indices, std::size_t k,
                                    std::size_t m, const std::optional<RobustView>& robust = {});

}  // namespace attrx
