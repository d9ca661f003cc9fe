#include "sba/mlp.hpp"

#include <cmath>

#include "sba/error.hpp"
#include "sba/rng.hpp"

namespace sba {

namespace {

Eigen::VectorXd label_vector(std::span<const int> y, Eigen::Index n) {
  if (static_cast<Eigen::Index>(y.size()) != n) throw DataError("MLP: label count does not match sample count");
  Eigen::VectorXd t(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int v = y[static_cast<std::size_t>(i)];
    if (v != 0 && v != 1) throw DataError("MLP labels must be 0 or 1");
    t[i] = v;
  }
  return t;
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

MlpModel::MlpModel(std::size_t input_dim, const std::vector<std::size_t>& hidden, std::uint64_t seed) {
  if (input_dim == 0) throw ConfigError("MLP input dimension must be positive");
  Rng rng(seed);
  std::size_t fan_in = input_dim;
  std::vector<std::size_t> sizes = hidden;
  sizes.push_back(1);
  for (std::size_t out : sizes) {
    if (out == 0) throw ConfigError("MLP layer width must be positive");
    DenseLayer layer{Eigen::MatrixXd(out, fan_in), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(out))};
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = rng.uniform(-limit, limit);
    }
    layers_.push_back(std::move(layer));
    fan_in = out;
  }
}

Eigen::VectorXd MlpModel::predict_proba(const Eigen::MatrixXd& X) const {
  if (static_cast<std::size_t>(X.cols()) != input_dim()) throw DataError("MLP input has the wrong dimension");
  Eigen::MatrixXd a = X;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = a * layers_[l].weights.transpose();
    z.rowwise() += layers_[l].bias.transpose();
    a = l + 1 < layers_.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
  }
  return a.col(0).unaryExpr([](double z) { return sigmoid(z); });
}

double MlpModel::loss(const Eigen::MatrixXd& X, std::span<const int> y) const {
  Eigen::VectorXd unused;
  return loss_and_gradient(X, y, unused);
}

double MlpModel::loss_and_gradient(const Eigen::MatrixXd& X, std::span<const int> y, Eigen::VectorXd& gradient) const {
  if (static_cast<std::size_t>(X.cols()) != input_dim()) throw DataError("MLP input has the wrong dimension");
  const Eigen::VectorXd t = label_vector(y, X.rows());
  const double n = static_cast<double>(X.rows());

  std::vector<Eigen::MatrixXd> acts{X};  // acts[l] = input of layer l
  std::vector<Eigen::MatrixXd> pre;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Eigen::MatrixXd z = acts.back() * layers_[l].weights.transpose();
    z.rowwise() += layers_[l].bias.transpose();
    pre.push_back(z);
    if (l + 1 < layers_.size()) acts.push_back(z.cwiseMax(0.0));
  }
  const Eigen::VectorXd logits = pre.back().col(0);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < logits.size(); ++i) loss += softplus(logits[i]) - t[i] * logits[i];
  loss /= n;

  gradient.resize(static_cast<Eigen::Index>(parameter_count()));
  Eigen::MatrixXd delta(logits.size(), 1);
  for (Eigen::Index i = 0; i < logits.size(); ++i) delta(i, 0) = (sigmoid(logits[i]) - t[i]) / n;

  std::vector<Eigen::Index> offsets(layers_.size());
  Eigen::Index off = 0;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    offsets[l] = off;
    off += layers_[l].weights.size() + layers_[l].bias.size();
  }
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Eigen::MatrixXd dW = delta.transpose() * acts[l];
    const Eigen::VectorXd db = delta.colwise().sum().transpose();
    gradient.segment(offsets[l], dW.size()) = Eigen::Map<const Eigen::VectorXd>(dW.data(), dW.size());
    gradient.segment(offsets[l] + dW.size(), db.size()) = db;
    if (l > 0) {
      delta = (delta * layers_[l].weights).cwiseProduct((pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  return loss;
}

std::size_t MlpModel::parameter_count() const {
  std::size_t total = 0;
  for (const auto& l : layers_) total += static_cast<std::size_t>(l.weights.size() + l.bias.size());
  return total;
}

Eigen::VectorXd MlpModel::parameters() const {
  Eigen::VectorXd flat(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index off = 0;
  for (const auto& l : layers_) {
    flat.segment(off, l.weights.size()) = Eigen::Map<const Eigen::VectorXd>(l.weights.data(), l.weights.size());
    off += l.weights.size();
    flat.segment(off, l.bias.size()) = l.bias;
    off += l.bias.size();
  }
  return flat;
}

void MlpModel::set_parameters(const Eigen::VectorXd& flat) {
  if (static_cast<std::size_t>(flat.size()) != parameter_count()) throw DataError("MLP parameter vector has wrong size");
  Eigen::Index off = 0;
  for (auto& l : layers_) {
    Eigen::Map<Eigen::VectorXd>(l.weights.data(), l.weights.size()) = flat.segment(off, l.weights.size());
    off += l.weights.size();
    l.bias = flat.segment(off, l.bias.size());
    off += l.bias.size();
  }
}

void MlpModel::zero_output_layer() {
  layers_.back().weights.setZero();
  layers_.back().bias.setZero();
}

MlpFit mlp_fit(const Eigen::MatrixXd& X, std::span<const int> y, const MlpOptions& options) {
  if (!X.allFinite()) throw DataError("MLP features are not finite");
  const Eigen::VectorXd t = label_vector(y, X.rows());
  if (t.sum() == 0.0 || t.sum() == static_cast<double>(t.size())) throw DataError("MLP training needs both classes");

  MlpFit fit{MlpModel(static_cast<std::size_t>(X.cols()), options.hidden, options.seed), {}};
  Eigen::VectorXd theta = fit.model.parameters();
  Eigen::VectorXd m = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(theta.size());
  Eigen::VectorXd grad;
  double b1t = 1.0, b2t = 1.0;
  fit.loss_history.reserve(options.epochs);
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    fit.loss_history.push_back(fit.model.loss_and_gradient(X, y, grad));
    b1t *= options.beta1;
    b2t *= options.beta2;
    m = options.beta1 * m + (1.0 - options.beta1) * grad;
    v = options.beta2 * v + (1.0 - options.beta2) * grad.cwiseProduct(grad);
    const Eigen::ArrayXd m_hat = m.array() / (1.0 - b1t);
    const Eigen::ArrayXd v_hat = v.array() / (1.0 - b2t);
    theta.array() -= options.learning_rate * m_hat / (v_hat.sqrt() + options.epsilon);
    fit.model.set_parameters(theta);
  }
  if (!theta.allFinite()) throw NumericError("MLP weights diverged to non-finite values");
  return fit;
}

MlpModel mlp_train(const Eigen::MatrixXd& X, std::span<const int> y, const MlpOptions& options) {
  return mlp_fit(X, y, options).model;
}

}  // namespace sba
