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

#include "attrx/embed.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "attrx/error.hpp"
#include "attrx/rng.hpp"
#include "sgd.hpp"

namespace attrx {

namespace {

void check_dim(Eigen::Index got, std::size_t want, const char* what) {
  if (static_cast<std::size_t>(got) != want)
    throw ValidationError(std::string("shape mismatch: ") + what + " has length " +
                          std::to_string(got) + ", expected " + std::to_string(want));
}

Matrix gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double sigma, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = sigma * gauss(rng);
  return m;
}

void check_model(const DifferentiableMap& map, const EmbeddingModel& model) {
  require(static_cast<std::size_t>(model.weights.rows()) == map.output_dim(),
          "shape mismatch: model expects " + std::to_string(model.weights.rows()) +
              " embedded features, map produces " + std::to_string(map.output_dim()));
}

}  // namespace

DifferentiableMap DifferentiableMap::identity(std::size_t dim) {
  require(dim > 0, "identity map needs a positive dimension");
  DifferentiableMap m;
  m.kind_ = Kind::identity;
  m.input_dim_ = m.output_dim_ = dim;
  return m;
}

DifferentiableMap DifferentiableMap::tanh_hidden(std::size_t input_dim, std::size_t hidden,
                                                 std::size_t output_dim, std::uint64_t seed) {
  require(input_dim > 0 && hidden > 0 && output_dim > 0, "tanh map dimensions must be positive");
  auto rng = substream(seed, "map");
  const auto din = static_cast<Eigen::Index>(input_dim);
  const auto h = static_cast<Eigen::Index>(hidden);
  const auto dout = static_cast<Eigen::Index>(output_dim);
  Matrix w1 = gaussian_matrix(din, h, 1.0 / std::sqrt(static_cast<double>(input_dim)), rng);
  Matrix b1m = gaussian_matrix(h, 1, 0.1, rng);
  Matrix w2 = gaussian_matrix(h, dout, 1.0 / std::sqrt(static_cast<double>(hidden)), rng);
  return tanh_hidden(std::move(w1), b1m.col(0), std::move(w2));
}

DifferentiableMap DifferentiableMap::tanh_hidden(Matrix w1, Vector b1, Matrix w2) {
  require(w1.rows() > 0 && w1.cols() > 0 && w2.cols() > 0, "tanh map dimensions must be positive");
  require(b1.size() == w1.cols() && w2.rows() == w1.cols(), "tanh map parameter shapes disagree");
  require(w1.allFinite() && b1.allFinite() && w2.allFinite(), "tanh map has non-finite parameters");
  DifferentiableMap m;
  m.kind_ = Kind::tanh_hidden;
  m.input_dim_ = static_cast<std::size_t>(w1.rows());
  m.output_dim_ = static_cast<std::size_t>(w2.cols());
  m.w1_ = std::move(w1);
  m.b1_ = std::move(b1);
  m.w2_ = std::move(w2);
  return m;
}

Vector DifferentiableMap::forward(const Vector& x) const {
  check_dim(x.size(), input_dim_, "map input");
  if (kind_ == Kind::identity) return x;
  const Vector h = (w1_.transpose() * x + b1_).array().tanh().matrix();
  return w2_.transpose() * h;
}

Vector DifferentiableMap::backward(const Vector& x, const Vector& grad_out) const {
  check_dim(x.size(), input_dim_, "map input");
  check_dim(grad_out.size(), output_dim_, "map output gradient");
  if (kind_ == Kind::identity) return grad_out;
  const Vector h = (w1_.transpose() * x + b1_).array().tanh().matrix();
  const Vector pre = ((w2_ * grad_out).array() * (1.0 - h.array().square())).matrix();
  return w1_ * pre;
}

const char* to_string(PredictionRule rule) {
  return rule == PredictionRule::compatibility_argmax ? "compatibility-argmax"
                                                      : "nearest-attribute";
}

PredictionRule parse_prediction_rule(std::string_view s) {
  if (s == "compatibility-argmax") return PredictionRule::compatibility_argmax;
  if (s == "nearest-attribute") return PredictionRule::nearest_attribute;
  throw ValidationError("unknown prediction rule '" + std::string(s) + "'");
}

void TrainConfig::validate() const {
  require(std::isfinite(learning_rate) && learning_rate > 0.0, "learning_rate must be > 0");
  require(epochs >= 1, "epochs must be >= 1");
  require(std::isfinite(margin) && margin >= 0.0, "margin must be >= 0");
  require(std::isfinite(weight_init_sigma) && weight_init_sigma >= 0.0,
          "weight_init_sigma must be >= 0");
}

Matrix prepare_class_attributes(const Matrix& class_attributes, bool normalize) {
  if (!normalize) return class_attributes;
  Matrix out = class_attributes;
  for (Eigen::Index c = 0; c < out.rows(); ++c) {
    const double n = out.row(c).norm();
    if (n > 0.0) out.row(c) /= n;
  }
  return out;
}

double compatibility(const DifferentiableMap& map, const EmbeddingModel& model, const Vector& x,
                     const Vector& class_attr) {
  check_model(map, model);
  check_dim(class_attr.size(), static_cast<std::size_t>(model.weights.cols()), "class attributes");
  Vector phi = class_attr;
  if (model.normalize_class_attributes && phi.norm() > 0.0) phi.normalize();
  return map.forward(x).dot(model.weights * phi);
}

Vector predict_attributes(const DifferentiableMap& map, const EmbeddingModel& model,
                          const Vector& x) {
  check_model(map, model);
  return model.weights.transpose() * map.forward(x);
}

namespace {

int argmax_lowest(const Vector& v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i)
    if (v(i) > v(best)) best = i;
  return static_cast<int>(best);
}

int classify(const Vector& attrs, const Matrix& classes, PredictionRule rule) {
  if (rule == PredictionRule::compatibility_argmax) return argmax_lowest(classes * attrs);
  Eigen::Index best = 0;
  double best_d = (classes.row(0).transpose() - attrs).squaredNorm();
  for (Eigen::Index c = 1; c < classes.rows(); ++c) {
    const double d = (classes.row(c).transpose() - attrs).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return static_cast<int>(best);
}

}  // namespace

int predict_class(const DifferentiableMap& map, const EmbeddingModel& model, const Vector& x,
                  const Matrix& class_attributes) {
  check_dim(class_attributes.cols(), static_cast<std::size_t>(model.weights.cols()),
            "class attribute rows");
  require(class_attributes.rows() > 0, "no classes");
  const Matrix classes =
      prepare_class_attributes(class_attributes, model.normalize_class_attributes);
  return classify(predict_attributes(map, model, x), classes, model.prediction_rule);
}

MarginViolation worst_violation(const Vector& scores, int y_true, double margin) {
  require(scores.size() >= 2, "ranking loss needs at least 2 classes");
  require(y_true >= 0 && y_true < scores.size(), "true label out of range");
  MarginViolation out;
  for (Eigen::Index c = 0; c < scores.size(); ++c) {
    if (c == y_true) continue;
    const double v = margin + scores(c) - scores(y_true);
    if (out.competitor < 0 || v > out.value) {
      out.value = v;
      out.competitor = static_cast<int>(c);
    }
  }
  return out;
}

namespace {

Vector class_scores(const Vector& theta, const EmbeddingModel& model, const Matrix& classes) {
  return classes * (model.weights.transpose() * theta);
}

}  // namespace

double ranking_loss(const DifferentiableMap& map, const EmbeddingModel& model, const Vector& x,
                    int y_true, const Matrix& class_attributes, double margin) {
  check_model(map, model);
  check_dim(class_attributes.cols(), static_cast<std::size_t>(model.weights.cols()),
            "class attribute rows");
  const Matrix classes =
      prepare_class_attributes(class_attributes, model.normalize_class_attributes);
  const auto v = worst_violation(class_scores(map.forward(x), model, classes), y_true, margin);
  return std::max(0.0, v.value);
}

SjeGradient ranking_loss_gradient(const DifferentiableMap& map, const EmbeddingModel& model,
                                  const Vector& x, int y_true, const Matrix& class_attributes,
                                  double margin, bool clamp) {
  check_model(map, model);
  check_dim(class_attributes.cols(), static_cast<std::size_t>(model.weights.cols()),
            "class attribute rows");
  const Matrix classes =
      prepare_class_attributes(class_attributes, model.normalize_class_attributes);
  const Vector theta = map.forward(x);
  const auto v = worst_violation(class_scores(theta, model, classes), y_true, margin);

  SjeGradient g;
  if (clamp && v.value <= 0.0) {
    g.loss = 0.0;
    g.weights = Matrix::Zero(model.weights.rows(), model.weights.cols());
    g.input = Vector::Zero(x.size());
    return g;
  }
  g.loss = v.value;
  const Vector diff = (classes.row(v.competitor) - classes.row(y_true)).transpose();
  g.weights = theta * diff.transpose();
  g.input = map.backward(x, model.weights * diff);
  return g;
}

namespace {

void check_general(const DifferentiableMap& map, const GeneralClassifier& clf) {
  require(static_cast<std::size_t>(clf.weights.rows()) == map.output_dim(),
          "shape mismatch: classifier expects " + std::to_string(clf.weights.rows()) +
              " embedded features, map produces " + std::to_string(map.output_dim()));
  require(clf.bias.size() == clf.weights.cols(), "shape mismatch: classifier bias length");
}

// Returns log-softmax of z.
Vector log_softmax(const Vector& z) {
  const double m = z.maxCoeff();
  const double lse = m + std::log((z.array() - m).exp().sum());
  return (z.array() - lse).matrix();
}

}  // namespace

double cross_entropy(const DifferentiableMap& map, const GeneralClassifier& clf, const Vector& x,
                     int y_true) {
  check_general(map, clf);
  require(y_true >= 0 && y_true < clf.bias.size(), "true label out of range");
  const Vector z = clf.weights.transpose() * map.forward(x) + clf.bias;
  return -log_softmax(z)(y_true);
}

GeneralGradient cross_entropy_gradient(const DifferentiableMap& map, const GeneralClassifier& clf,
                                       const Vector& x, int y_true) {
  check_general(map, clf);
  require(y_true >= 0 && y_true < clf.bias.size(), "true label out of range");
  const Vector theta = map.forward(x);
  const Vector z = clf.weights.transpose() * theta + clf.bias;
  const Vector logp = log_softmax(z);
  Vector dz = logp.array().exp().matrix();
  dz(y_true) -= 1.0;
  GeneralGradient g;
  g.loss = -logp(y_true);
  g.weights = theta * dz.transpose();
  g.bias = dz;
  g.input = map.backward(x, clf.weights * dz);
  return g;
}

namespace detail {

namespace {

bool same_bits(const Vector& a, const Vector& b) {
  return a.size() == b.size() && std::equal(a.data(), a.data() + a.size(), b.data());
}

void check_train_split(const Dataset& dataset, std::span<const std::size_t> train,
                       const DifferentiableMap& map) {
  require(!train.empty(), "training split is empty");
  require(map.input_dim() == dataset.feature_dim(),
          "shape mismatch: map input " + std::to_string(map.input_dim()) + " vs feature dim " +
              std::to_string(dataset.feature_dim()));
  for (auto i : train) require(i < dataset.size(), "training index out of range");
}

template <typename Step>
std::vector<double> run_epochs(std::span<const std::size_t> train, const TrainConfig& config,
                               std::string_view order_stream, Step&& step) {
  auto rng = substream(config.seed, order_stream);
  std::vector<std::size_t> order(train.begin(), train.end());
  std::vector<double> history;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (auto i : order) {
      const double loss = step(i);
      if (!std::isfinite(loss))
        throw NumericalError("training diverged at epoch " + std::to_string(epoch) +
                             ": non-finite loss");
      total += loss;
    }
    if (!std::isfinite(total))
      throw NumericalError("training diverged at epoch " + std::to_string(epoch));
    history.push_back(total / static_cast<double>(order.size()));
  }
  return history;
}

}  // namespace

Trained<EmbeddingModel> sgd_sje(const Dataset& dataset, std::span<const std::size_t> train,
                                const DifferentiableMap& map, const TrainConfig& config,
                                std::optional<Matrix> initial_weights,
                                const Adversary<EmbeddingModel>* adversary, AdversarialTerm term) {
  config.validate();
  check_train_split(dataset, train, map);
  require(dataset.num_classes() >= 2, "ranking loss needs at least 2 classes");
  const auto d = static_cast<Eigen::Index>(map.output_dim());
  const auto A = static_cast<Eigen::Index>(dataset.num_attributes());

  EmbeddingModel model;
  model.normalize_class_attributes = config.normalize_class_attributes;
  model.prediction_rule = config.prediction_rule;
  if (initial_weights) {
    require(initial_weights->rows() == d && initial_weights->cols() == A,
            "initial weights have the wrong shape");
    model.weights = std::move(*initial_weights);
  } else {
    auto rng = substream(config.seed, "sje-init");
    model.weights = gaussian_matrix(d, A, config.weight_init_sigma, rng);
  }
  const Matrix& phi = dataset.class_attributes();
  const bool use_adv = adversary != nullptr && term.mix_alpha < 1.0;

  auto step = [&](std::size_t i) {
    const auto& s = dataset.sample(i);
    auto g = ranking_loss_gradient(map, model, s.features, s.label, phi, config.margin);
    if (use_adv) {
      const Vector adv = (*adversary)(model, s.features, s.label);
      // Identical input means the mixed objective is the clean loss itself.
      if (!same_bits(adv, s.features)) {
        const auto ga = ranking_loss_gradient(map, model, adv, s.label, phi, config.margin);
        const double a = term.mix_alpha;
        g.loss = a * g.loss + (1.0 - a) * ga.loss;
        g.weights = a * g.weights + (1.0 - a) * ga.weights;
      }
    }
    model.weights -= config.learning_rate * g.weights;
    return model.weights.allFinite() ? g.loss : std::nan("");
  };
  auto history = run_epochs(train, config, "sje-order", step);
  return {std::move(model), std::move(history)};
}

Trained<GeneralClassifier> sgd_general(const Dataset& dataset, std::span<const std::size_t> train,
                                       const DifferentiableMap& map, const TrainConfig& config,
                                       const Adversary<GeneralClassifier>* adversary,
                                       AdversarialTerm term) {
  config.validate();
  check_train_split(dataset, train, map);
  require(dataset.num_classes() >= 2, "general classifier needs at least 2 classes");
  {
    const int first = dataset.sample(train.front()).label;
    bool multi = false;
    for (auto i : train) multi = multi || dataset.sample(i).label != first;
    require(multi, "general classifier needs at least 2 distinct labels in the training split");
  }
  const auto d = static_cast<Eigen::Index>(map.output_dim());
  const auto C = static_cast<Eigen::Index>(dataset.num_classes());

  GeneralClassifier clf;
  {
    auto rng = substream(config.seed, "general-init");
    clf.weights = gaussian_matrix(d, C, config.weight_init_sigma, rng);
    clf.bias = Vector::Zero(C);
  }
  const bool use_adv = adversary != nullptr && term.mix_alpha < 1.0;

  auto step = [&](std::size_t i) {
    const auto& s = dataset.sample(i);
    auto g = cross_entropy_gradient(map, clf, s.features, s.label);
    if (use_adv) {
      const Vector adv = (*adversary)(clf, s.features, s.label);
      if (!same_bits(adv, s.features)) {
        const auto ga = cross_entropy_gradient(map, clf, adv, s.label);
        const double a = term.mix_alpha;
        g.loss = a * g.loss + (1.0 - a) * ga.loss;
        g.weights = a * g.weights + (1.0 - a) * ga.weights;
        g.bias = a * g.bias + (1.0 - a) * ga.bias;
      }
    }
    clf.weights -= config.learning_rate * g.weights;
    clf.bias -= config.learning_rate * g.bias;
    return clf.weights.allFinite() && clf.bias.allFinite() ? g.loss : std::nan("");
  };
  auto history = run_epochs(train, config, "general-order", step);
  return {std::move(clf), std::move(history)};
}

}  // namespace detail

Trained<EmbeddingModel> train_sje(const Dataset& dataset, std::span<const std::size_t> train,
                                  const DifferentiableMap& map, const TrainConfig& config) {
  return detail::sgd_sje(dataset, train, map, config, std::nullopt, nullptr, {});
}

Trained<EmbeddingModel> train_sje(const Dataset& dataset, std::span<const std::size_t> train,
                                  const DifferentiableMap& map, const TrainConfig& config,
                                  Matrix initial_weights) {
  return detail::sgd_sje(dataset, train, map, config, std::move(initial_weights), nullptr, {});
}

Trained<GeneralClassifier> train_general(const Dataset& dataset,
                                         std::span<const std::size_t> train,
                                         const DifferentiableMap& map, const TrainConfig& config) {
  return detail::sgd_general(dataset, train, map, config, nullptr, {});
}

AttributeClassifier::AttributeClassifier(DifferentiableMap map, EmbeddingModel model,
                                         const Matrix& class_attributes, double margin)
    : map_(std::move(map)),
      model_(std::move(model)),
      classes_(prepare_class_attributes(class_attributes, model_.normalize_class_attributes)),
      margin_(margin) {
  check_model(map_, model_);
  require(model_.weights.allFinite(), "model weights are not finite");
  check_dim(classes_.cols(), static_cast<std::size_t>(model_.weights.cols()),
            "class attribute rows");
  require(classes_.rows() >= 2, "attribute classifier needs at least 2 classes");
}

Vector AttributeClassifier::attributes(const Vector& x) const {
  return model_.weights.transpose() * map_.forward(x);
}

Vector AttributeClassifier::scores(const Vector& x) const { return classes_ * attributes(x); }

int AttributeClassifier::predict(const Vector& x) const {
  return classify(attributes(x), classes_, model_.prediction_rule);
}

GeneralPredictor::GeneralPredictor(DifferentiableMap map, GeneralClassifier clf)
    : map_(std::move(map)), clf_(std::move(clf)) {
  check_general(map_, clf_);
  require(clf_.weights.allFinite() && clf_.bias.allFinite(), "classifier is not finite");
}

Vector GeneralPredictor::logits(const Vector& x) const {
  return clf_.weights.transpose() * map_.forward(x) + clf_.bias;
}

int GeneralPredictor::predict(const Vector& x) const { return argmax_lowest(logits(x)); }

int predict(const Predictor& p, const Vector& x) {
  return std::visit([&](const auto& q) { return q.predict(x); }, p);
}

AccuracyCount accuracy(const Predictor& p, const Dataset& dataset,
                       std::span<const std::size_t> indices, Exec exec) {
  std::vector<char> hit(indices.size(), 0);
  for_each_index(indices.size(), exec, [&](std::size_t k) {
    const auto& s = dataset.sample(indices[k]);
    hit[k] = predict(p, s.features) == s.label ? 1 : 0;
  });
  AccuracyCount out;
  out.total = indices.size();
  for (char h : hit) out.correct += static_cast<std::size_t>(h);
  return out;
}

}  // namespace attrx
