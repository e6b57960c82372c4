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

#include "attrx/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "attrx/error.hpp"

namespace attrx {

std::vector<ScoredIndex> top_k(const Vector& scores, std::size_t k) {
  const auto n = static_cast<std::size_t>(scores.size());
  require(k >= 1 && k <= n, "k must lie in [1, " + std::to_string(n) + "], got " +
                                std::to_string(k));
  require(scores.allFinite(), "attribute scores must be finite");
  std::vector<ScoredIndex> all(n);
  for (std::size_t i = 0; i < n; ++i)
    all[i] = {static_cast<int>(i), scores(static_cast<Eigen::Index>(i))};
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(),
                    [](const ScoredIndex& a, const ScoredIndex& b) {
                      return a.score != b.score ? a.score > b.score : a.index < b.index;
                    });
  all.resize(k);
  return all;
}

std::vector<ScoredIndex> select_discriminative_clean(const Vector& clean_attrs,
                                                     const Vector& counter_class_attrs,
                                                     std::size_t k) {
  require(clean_attrs.size() == counter_class_attrs.size(),
          "shape mismatch between predicted and class attributes");
  return top_k(clean_attrs - counter_class_attrs, k);
}

std::vector<ScoredIndex> select_discriminative_adv(const Vector& adv_attrs,
                                                   const Vector& true_class_attrs, std::size_t k) {
  require(adv_attrs.size() == true_class_attrs.size(),
          "shape mismatch between predicted and class attributes");
  return top_k(adv_attrs - true_class_attrs, k);
}

std::vector<GalleryEntry> build_gallery(const AttributeClassifier& clf, const Dataset& dataset,
                                        std::span<const std::size_t> indices, int counter_class) {
  std::vector<GalleryEntry> out;
  for (auto i : indices) {
    const auto& s = dataset.sample(i);
    if (s.label == counter_class) out.push_back({i, s.label, clf.attributes(s.features)});
  }
  return out;
}

std::vector<CounterExample> select_counter_examples(const Vector& adv_attrs, int counter_class,
                                                    std::span<const GalleryEntry> gallery,
                                                    std::size_t m, Exec exec) {
  require(!gallery.empty(),
          "counter class " + std::to_string(counter_class) + " has no gallery samples");
  require(m >= 1, "number of counter-examples must be >= 1");
  for (const auto& g : gallery) {
    require(g.label == counter_class, "gallery sample " + std::to_string(g.sample_id) +
                                          " is not of counter class " +
                                          std::to_string(counter_class));
    require(g.attributes.size() == adv_attrs.size(), "gallery attribute length mismatch");
  }
  std::vector<CounterExample> all(gallery.size());
  for_each_index(gallery.size(), exec, [&](std::size_t i) {
    all[i] = {gallery[i].sample_id, (adv_attrs - gallery[i].attributes).norm()};
  });
  const std::size_t keep = std::min(m, all.size());
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(keep), all.end(),
                    [](const CounterExample& a, const CounterExample& b) {
                      return a.distance != b.distance ? a.distance < b.distance
                                                      : a.sample_id < b.sample_id;
                    });
  all.resize(keep);
  return all;
}

const char* to_string(DistanceMode mode) {
  return mode == DistanceMode::standard ? "standard" : "robust";
}

double overlap_coefficient(std::span<const double> a, std::span<const double> b,
                           std::size_t bins) {
  require(!a.empty() && !b.empty(), "overlap needs two nonempty samples");
  require(bins >= 1, "overlap needs at least one bin");
  double lo = a[0], hi = a[0];
  for (auto s : {a, b})
    for (double v : s) {
      require(std::isfinite(v), "overlap: non-finite value");
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (hi == lo) return 1.0;
  const double width = (hi - lo) / static_cast<double>(bins);
  auto histogram = [&](std::span<const double> s) {
    std::vector<double> h(bins, 0.0);
    for (double v : s) {
      auto bin = static_cast<std::size_t>((v - lo) / width);
      h[std::min(bin, bins - 1)] += 1.0;
    }
    for (auto& x : h) x /= static_cast<double>(s.size());
    return h;
  };
  const auto ha = histogram(a), hb = histogram(b);
  double sum = 0.0;
  for (std::size_t i = 0; i < bins; ++i) sum += std::min(ha[i], hb[i]);
  return sum;
}

DistanceStats describe(std::span<const double> values) {
  require(!values.empty(), "no values to describe");
  DistanceStats s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  s.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  return s;
}

namespace {

void check_aligned(std::span<const AttributeObservation> a, std::span<const AttributeObservation> b,
                   const Matrix& phi) {
  require(a.size() == b.size(), "alignment error: " + std::to_string(a.size()) + " vs " +
                                    std::to_string(b.size()) + " observations");
  for (std::size_t i = 0; i < a.size(); ++i) {
    require(a[i].sample_id == b[i].sample_id && a[i].true_class == b[i].true_class,
            "alignment error at position " + std::to_string(i) + ": sample " +
                std::to_string(a[i].sample_id) + " vs " + std::to_string(b[i].sample_id));
    require(a[i].attributes.size() == phi.cols() && b[i].attributes.size() == phi.cols(),
            "attribute length mismatch for sample " + std::to_string(a[i].sample_id));
    for (const auto* o : {&a[i], &b[i]})
      require(o->true_class >= 0 && o->true_class < phi.rows() && o->predicted_class >= 0 &&
                  o->predicted_class < phi.rows(),
              "class index out of range for sample " + std::to_string(o->sample_id));
  }
}

void finish(DistanceSummary& s) {
  require(!s.d1.empty(), std::string("no eligible samples for ") + to_string(s.mode) +
                             " distance analysis");
  s.d1_stats = describe(s.d1);
  s.d2_stats = describe(s.d2);
  s.overlap = overlap_coefficient(s.d1, s.d2);
}

}  // namespace

DistanceSummary distance_analysis_standard(std::span<const AttributeObservation> clean,
                                           std::span<const AttributeObservation> adv,
                                           const Matrix& class_attributes) {
  check_aligned(clean, adv, class_attributes);
  DistanceSummary s;
  s.mode = DistanceMode::standard;
  s.candidates = clean.size();
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const auto& c = clean[i];
    const auto& a = adv[i];
    if (c.predicted_class != c.true_class || a.predicted_class == a.true_class) continue;
    s.sample_ids.push_back(c.sample_id);
    s.true_classes.push_back(c.true_class);
    s.counter_classes.push_back(a.predicted_class);
    s.d1.push_back((c.attributes - a.attributes).norm());
    s.d2.push_back((class_attributes.row(c.true_class) - class_attributes.row(a.predicted_class)).norm());
  }
  finish(s);
  return s;
}

DistanceSummary distance_analysis_robust(std::span<const AttributeObservation> robust_adv,
                                         std::span<const AttributeObservation> standard_adv,
                                         const Matrix& class_attributes) {
  check_aligned(robust_adv, standard_adv, class_attributes);
  DistanceSummary s;
  s.mode = DistanceMode::robust;
  s.candidates = robust_adv.size();
  for (std::size_t i = 0; i < robust_adv.size(); ++i) {
    const auto& r = robust_adv[i];
    const auto& a = standard_adv[i];
    if (r.predicted_class != r.true_class || a.predicted_class == a.true_class) continue;
    s.sample_ids.push_back(r.sample_id);
    s.true_classes.push_back(r.true_class);
    s.counter_classes.push_back(a.predicted_class);
    s.d1.push_back((r.attributes - a.attributes).norm());
    s.d2.push_back((class_attributes.row(r.true_class) - class_attributes.row(a.predicted_class)).norm());
  }
  finish(s);
  return s;
}

ExplanationRecord build_explanation(const PerturbedSample& sample, const AttributeClassifier& clf,
                                    const Dataset& dataset,
                                    std::span<const std::size_t> gallery_indices, std::size_t k,
                                    std::size_t m, const std::optional<RobustView>& robust) {
  ExplanationRecord r;
  r.sample_id = sample.sample_id;
  r.true_class = sample.true_label;
  r.attribute_names = dataset.attribute_names();
  r.clean_attrs = clf.attributes(sample.original);
  r.adv_attrs = clf.attributes(sample.perturbed);
  r.robust = robust;
  if (!sample.clean_correct()) {
    r.status = "clean-misclassified";
    return r;
  }
  if (sample.predicted_perturbed == sample.true_label) {
    r.status = "attack-failed";
    return r;
  }
  r.counter_class = sample.predicted_perturbed;
  const Matrix& phi = clf.class_attributes();
  r.discriminative_clean =
      select_discriminative_clean(r.clean_attrs, phi.row(r.counter_class).transpose(), k);
  r.discriminative_adv =
      select_discriminative_adv(r.adv_attrs, phi.row(r.true_class).transpose(), k);
  const auto gallery = build_gallery(clf, dataset, gallery_indices, r.counter_class);
  r.counter_examples = select_counter_examples(r.adv_attrs, r.counter_class, gallery, m, Exec::serial);
  r.explainable = true;
  r.status = "ok";
  return r;
}

}  // namespace attrx
