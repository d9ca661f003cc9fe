#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

namespace sba {

struct MlpOptions {
  std::vector<std::size_t> hidden{150, 100, 50};
  std::size_t epochs = 1000;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 42;
};

struct DenseLayer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

/// Fully connected binary classifier: ReLU hidden layers, one sigmoid output
/// unit, mean binary cross-entropy loss.
class MlpModel {
 public:
  MlpModel() = default;

  /// Weights ~ U(-sqrt(6/fan_in), +sqrt(6/fan_in)) drawn layer by layer from
  /// one generator seeded with `seed`; biases start at zero.
  MlpModel(std::size_t input_dim, const std::vector<std::size_t>& hidden, std::uint64_t seed);

  /// Sigmoid outputs, one per row of X.
  Eigen::VectorXd predict_proba(const Eigen::MatrixXd& X) const;

  /// Mean binary cross-entropy for 0/1 labels.
  double loss(const Eigen::MatrixXd& X, std::span<const int> y) const;

  /// Loss plus its gradient with respect to parameters() (same layout).
  double loss_and_gradient(const Eigen::MatrixXd& X, std::span<const int> y, Eigen::VectorXd& gradient) const;

  /// Flattened parameters: for each layer, weights (column-major) then bias.
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& flat);
  std::size_t parameter_count() const;

  void zero_output_layer();
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::size_t input_dim() const { return layers_.empty() ? 0 : static_cast<std::size_t>(layers_.front().weights.cols()); }

 private:
  std::vector<DenseLayer> layers_;
};

struct MlpFit {
  MlpModel model;
  std::vector<double> loss_history;  // loss before each epoch's update
};

/// Full-batch Adam. Labels are 0/1.
MlpFit mlp_fit(const Eigen::MatrixXd& X, std::span<const int> y, const MlpOptions& options = {});
MlpModel mlp_train(const Eigen::MatrixXd& X, std::span<const int> y, const MlpOptions& options = {});

}  // namespace sba
