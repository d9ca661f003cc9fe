#pragma once

#include <Eigen/Dense>
#include <string>

namespace sba {

/// SHA-256 over the shape and values of a matrix. Used to tie a fitted
/// normalizer to the exact training rows it saw.
std::string matrix_hash(const Eigen::MatrixXd& m);

/// Per-dimension z-score fitted on training rows (population std).
/// Constant dimensions transform to 0.
class Normalizer {
 public:
  /// Throws DataError with fewer than 2 rows or non-finite input.
  static Normalizer fit(const Eigen::MatrixXd& train);

  Eigen::MatrixXd apply(const Eigen::MatrixXd& features) const;

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& stddev() const { return std_; }
  const std::string& fit_hash() const { return fit_hash_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::VectorXd std_;
  std::string fit_hash_;
};

}  // namespace sba
