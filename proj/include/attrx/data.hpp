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

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace attrx {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct Sample {
  Vector features;
  int label = 0;
};

// Box constraint on feature values. Perturbations are projected into it.
struct FeatureBounds {
  Vector low;
  Vector high;

  static FeatureBounds uniform(std::size_t dim, double low, double high);
};

/// A labelled feature set together with the per-class attribute matrix.
///
/// Row c of `class_attributes()` is the attribute signature of class c.
/// The constructor validates every invariant (label range, feature length,
/// finiteness, name counts) and the object is immutable afterwards.
class Dataset {
 public:
  Dataset(std::vector<Sample> samples, Matrix class_attributes,
          std::vector<std::string> class_names, std::vector<std::string> attribute_names,
          std::optional<FeatureBounds> bounds = std::nullopt);

  const std::vector<Sample>& samples() const { return samples_; }
  const Sample& sample(std::size_t i) const { return samples_.at(i); }
  std::size_t size() const { return samples_.size(); }
  const Matrix& class_attributes() const { return class_attributes_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  const std::vector<std::string>& attribute_names() const { return attribute_names_; }
  const std::optional<FeatureBounds>& bounds() const { return bounds_; }

  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t num_classes() const { return static_cast<std::size_t>(class_attributes_.rows()); }
  std::size_t num_attributes() const {
    return static_cast<std::size_t>(class_attributes_.cols());
  }

  Dataset with_bounds(std::optional<FeatureBounds> bounds) const;

  friend bool operator==(const Dataset& a, const Dataset& b);

 private:
  std::vector<Sample> samples_;
  Matrix class_attributes_;
  std::vector<std::string> class_names_;
  std::vector<std::string> attribute_names_;
  std::optional<FeatureBounds> bounds_;
  std::size_t feature_dim_ = 0;
};

struct SyntheticSpec {
  std::size_t num_classes = 10;
  std::size_t num_attributes = 8;
  std::size_t feature_dim = 16;
  std::size_t samples_per_class = 60;
  double noise_sigma = 0.05;
  // 0 gives disjoint binary signatures, 1 collapses every class onto a shared base.
  double class_similarity = 0.7;
  std::uint64_t seed = 0;

  void validate() const;
};

Dataset generate_synthetic(const SyntheticSpec& spec);

struct DatasetPaths {
  std::filesystem::path features;
  std::filesystem::path attributes;
  std::filesystem::path names;
};

Dataset load_dataset(const DatasetPaths& paths);
void save_dataset(const Dataset& dataset, const DatasetPaths& paths);

enum class SplitPart { train, val, test };

const char* to_string(SplitPart part);

struct SplitAssignment {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
  std::uint64_t seed = 0;

  const std::vector<std::size_t>& part(SplitPart p) const;
};

// Stratified split. Each part's index list is sorted ascending.
SplitAssignment split(const Dataset& dataset, std::array<double, 3> ratios, std::uint64_t seed);

// Mean over dimensions of the per-dimension standard deviation on `indices`.
double mean_feature_std(const Dataset& dataset, std::span<const std::size_t> indices);

// Shortest round-trip decimal representation, locale independent.
std::string format_double(double v);
double parse_double(std::string_view text);

}  // namespace attrx
