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

#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "attrx/data.hpp"
#include "attrx/parallel.hpp"

namespace attrx {

/// Fixed differentiable feature map applied before every classifier head.
///
/// Either the identity on R^d, or a one-hidden-layer map
/// theta(x) = W2^T tanh(W1^T x + b1) with W1: d_in x h, W2: h x d_out.
/// The map is not trained; its parameters are drawn once from a seed.
class DifferentiableMap {
 public:
  enum class Kind { identity, tanh_hidden };

  static DifferentiableMap identity(std::size_t dim);
  static DifferentiableMap tanh_hidden(std::size_t input_dim, std::size_t hidden,
                                       std::size_t output_dim, std::uint64_t seed);
  static DifferentiableMap tanh_hidden(Matrix w1, Vector b1, Matrix w2);

  Kind kind() const { return kind_; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const { return output_dim_; }
  const Matrix& w1() const { return w1_; }
  const Vector& b1() const { return b1_; }
  const Matrix& w2() const { return w2_; }

  Vector forward(const Vector& x) const;
  // Pulls a gradient w.r.t. theta(x) back to a gradient w.r.t. x.
  Vector backward(const Vector& x, const Vector& grad_out) const;

  friend bool operator==(const DifferentiableMap&, const DifferentiableMap&) = default;

 private:
  Kind kind_ = Kind::identity;
  std::size_t input_dim_ = 0;
  std::size_t output_dim_ = 0;
  Matrix w1_;
  Vector b1_;
  Matrix w2_;
};

enum class PredictionRule { compatibility_argmax, nearest_attribute };

const char* to_string(PredictionRule rule);
PredictionRule parse_prediction_rule(std::string_view s);

// Bilinear attribute-embedding model: F(x, y) = theta(x)^T W phi(y).
struct EmbeddingModel {
  Matrix weights;  // d x A
  bool normalize_class_attributes = false;
  PredictionRule prediction_rule = PredictionRule::compatibility_argmax;

  friend bool operator==(const EmbeddingModel&, const EmbeddingModel&) = default;
};

// Multinomial logistic regression head on theta(x).
struct GeneralClassifier {
  Matrix weights;  // d x C
  Vector bias;     // C

  friend bool operator==(const GeneralClassifier&, const GeneralClassifier&) = default;
};

struct TrainConfig {
  double learning_rate = 0.01;
  int epochs = 50;
  // Cost of predicting any wrong class.
  double margin = 1.0;
  std::uint64_t seed = 0;
  double weight_init_sigma = 0.01;
  bool normalize_class_attributes = false;
  PredictionRule prediction_rule = PredictionRule::compatibility_argmax;

  void validate() const;
};

template <typename Model>
struct Trained {
  Model model;
  std::vector<double> epoch_loss;  // mean pre-step loss per epoch
};

// Rows L2-normalized when `normalize` is set; zero rows stay zero.
Matrix prepare_class_attributes(const Matrix& class_attributes, bool normalize);

double compatibility(const DifferentiableMap& map, const EmbeddingModel& model, const Vector& x,
                     const Vector& class_attr);
Vector predict_attributes(const DifferentiableMap& map, const EmbeddingModel& model,
                          const Vector& x);
int predict_class(const DifferentiableMap& map, const EmbeddingModel& model, const Vector& x,
                  const Matrix& class_attributes);

// Structured hinge: max(0, max_{y != y_true} [margin + F(x,y) - F(x,y_true)]).
double ranking_loss(const DifferentiableMap& map, const EmbeddingModel& model, const Vector& x,
                    int y_true, const Matrix& class_attributes, double margin);

// The most violating competitor over class scores, ties to the lowest index.
struct MarginViolation {
  double value = 0.0;  // unclamped margin + F(y*) - F(y_true)
  int competitor = -1;
};
MarginViolation worst_violation(const Vector& scores, int y_true, double margin);

struct SjeGradient {
  double loss = 0.0;
  Matrix weights;  // d x A
  Vector input;    // input_dim
};

// Subgradient of the ranking loss. `clamp=false` differentiates the unclamped
// margin instead, which stays informative where the hinge is flat.
SjeGradient ranking_loss_gradient(const DifferentiableMap& map, const EmbeddingModel& model,
                                  const Vector& x, int y_true, const Matrix& class_attributes,
                                  double margin, bool clamp = true);

double cross_entropy(const DifferentiableMap& map, const GeneralClassifier& clf, const Vector& x,
                     int y_true);

struct GeneralGradient {
  double loss = 0.0;
  Matrix weights;  // d x C
  Vector bias;     // C
  Vector input;    // input_dim
};
GeneralGradient cross_entropy_gradient(const DifferentiableMap& map, const GeneralClassifier& clf,
                                       const Vector& x, int y_true);

Trained<EmbeddingModel> train_sje(const Dataset& dataset, std::span<const std::size_t> train,
                                  const DifferentiableMap& map, const TrainConfig& config);
// Same, starting from the given weights instead of a random draw.
Trained<EmbeddingModel> train_sje(const Dataset& dataset, std::span<const std::size_t> train,
                                  const DifferentiableMap& map, const TrainConfig& config,
                                  Matrix initial_weights);
Trained<GeneralClassifier> train_general(const Dataset& dataset,
                                         std::span<const std::size_t> train,
                                         const DifferentiableMap& map, const TrainConfig& config);

// Ready-to-evaluate attribute classifier: map, model, and the class attribute
// matrix after the model's normalization choice has been applied.
class AttributeClassifier {
 public:
  AttributeClassifier(DifferentiableMap map, EmbeddingModel model, const Matrix& class_attributes,
                      double margin);

  const DifferentiableMap& map() const { return map_; }
  const EmbeddingModel& model() const { return model_; }
  const Matrix& class_attributes() const { return classes_; }
  double margin() const { return margin_; }

  Vector attributes(const Vector& x) const;
  Vector scores(const Vector& x) const;
  int predict(const Vector& x) const;

 private:
  DifferentiableMap map_;
  EmbeddingModel model_;
  Matrix classes_;
  double margin_;
};

class GeneralPredictor {
 public:
  GeneralPredictor(DifferentiableMap map, GeneralClassifier clf);

  const DifferentiableMap& map() const { return map_; }
  const GeneralClassifier& classifier() const { return clf_; }

  Vector logits(const Vector& x) const;
  int predict(const Vector& x) const;

 private:
  DifferentiableMap map_;
  GeneralClassifier clf_;
};

using Predictor = std::variant<AttributeClassifier, GeneralPredictor>;

int predict(const Predictor& p, const Vector& x);

struct AccuracyCount {
  std::size_t correct = 0;
  std::size_t total = 0;
  double value() const {
    return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
  }
};

AccuracyCount accuracy(const Predictor& p, const Dataset& dataset,
                       std::span<const std::size_t> indices, Exec exec = Exec::parallel);

}  // namespace attrx
