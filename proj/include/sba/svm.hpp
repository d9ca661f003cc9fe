#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

namespace sba {

/// Stopping rule and iteration cap for SMO.
struct SmoOptions {
  double tolerance = 1e-3;  // max violating pair gap
  std::size_t max_iterations = 100000;
};

/// Result of solving the C-SVC dual
///   max  sum(a) - 1/2 a'Qa,  Q_ij = y_i y_j K_ij,  0 <= a <= C,  y'a = 0.
struct SmoResult {
  Eigen::VectorXd alpha;
  double bias = 0.0;            // decision = sum_i a_i y_i K(x_i, x) + bias
  double dual_objective = 0.0;  // value of the maximised dual
  double kkt_gap = 0.0;         // m(a) - M(a) at termination
  std::size_t iterations = 0;
  bool converged = false;
};

/// SMO with maximal-violating-pair working-set selection on a precomputed
/// kernel matrix. `y` holds -1/+1.
SmoResult solve_smo(const Eigen::MatrixXd& kernel, std::span<const int> y, double C, const SmoOptions& options = {});

/// RBF-kernel SVM, keeping only support vectors.
struct SvmModel {
  Eigen::MatrixXd support_vectors;  // n_sv x d
  Eigen::VectorXd dual_coef;        // a_i * y_i per support vector
  Eigen::VectorXd alpha;            // a_i per support vector
  double bias = 0.0;
  double gamma = 1.0;
  double C = 1.0;

  /// Signed decision values, one per row of `X`.
  Eigen::VectorXd decision_function(const Eigen::MatrixXd& X) const;
  std::size_t support_count() const { return static_cast<std::size_t>(support_vectors.rows()); }
};

struct SvmFit {
  SvmModel model;
  SmoResult solver;
};

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B);
Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double gamma);

/// Throws DataError on labels outside {-1, +1}, a single class or non-finite
/// features.
SvmFit svm_fit(const Eigen::MatrixXd& X, std::span<const int> y, double C, double gamma,
               const SmoOptions& options = {});
SvmModel svm_train(const Eigen::MatrixXd& X, std::span<const int> y, double C, double gamma,
                   const SmoOptions& options = {});

struct SvmGrid {
  std::vector<double> C_values{1e-2, 1e-1, 1e0, 1e1, 1e2, 1e3};
  std::vector<double> gamma_values{1e0, 1e-1, 1e-2, 1e-3, 1e-4};
};

struct GridCell {
  double C = 0.0;
  double gamma = 0.0;
  double cv_accuracy = 0.0;
};

struct GridSearchResult {
  double best_C = 0.0;
  double best_gamma = 0.0;
  double cv_accuracy = 0.0;
  std::vector<GridCell> table;  // C-outer, gamma-inner
  SvmModel model;               // refit on all rows with the selected cell
  std::size_t unconverged_cv_fits = 0;  // CV fits that hit the iteration cap
};

/// Fold index in [0, k) for every sample; each class is shuffled with `seed`
/// and dealt round-robin. Throws DataError if a class has fewer than k members.
std::vector<int> stratified_folds(std::span<const int> y, int k, std::uint64_t seed);

/// Exhaustive stratified k-fold grid search on accuracy (mean over folds).
/// Ties go to the earliest cell in C-outer, gamma-inner order.
GridSearchResult svm_grid_search(const Eigen::MatrixXd& X, std::span<const int> y, const SvmGrid& grid,
                                 std::uint64_t seed, int folds = 5, const SmoOptions& options = {});

}  // namespace sba
