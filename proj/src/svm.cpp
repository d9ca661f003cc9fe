#include "sba/svm.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "sba/error.hpp"
#include "sba/rng.hpp"

namespace sba {

namespace {

constexpr double kTau = 1e-12;

void check_labels(std::span<const int> y, Eigen::Index n) {
  if (static_cast<Eigen::Index>(y.size()) != n) throw DataError("SVM: label count does not match sample count");
  bool pos = false, neg = false;
  for (int v : y) {
    if (v == 1) {
      pos = true;
    } else if (v == -1) {
      neg = true;
    } else {
      throw DataError("SVM labels must be -1 or +1");
    }
  }
  if (!pos || !neg) throw DataError("SVM training needs both classes");
}

}  // namespace

SmoResult solve_smo(const Eigen::MatrixXd& K, std::span<const int> y, double C, const SmoOptions& options) {
  const Eigen::Index n = K.rows();
  check_labels(y, n);
  if (!(C > 0.0)) throw ConfigError("SVM box constraint C must be positive");

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);  // Q a - e
  const auto yd = [&](Eigen::Index t) { return static_cast<double>(y[static_cast<std::size_t>(t)]); };
  const auto in_up = [&](Eigen::Index t) { return yd(t) > 0 ? alpha[t] < C : alpha[t] > 0.0; };
  const auto in_low = [&](Eigen::Index t) { return yd(t) > 0 ? alpha[t] > 0.0 : alpha[t] < C; };

  SmoResult result;
  double gap = 0.0;
  std::size_t iter = 0;
  for (;; ++iter) {
    Eigen::Index i = -1, j = -1;
    double m = -std::numeric_limits<double>::infinity();
    double M = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < n; ++t) {
      const double v = -yd(t) * grad[t];
      if (in_up(t) && v > m) {
        m = v;
        i = t;
      }
      if (in_low(t) && v < M) {
        M = v;
        j = t;
      }
    }
    gap = m - M;
    if (i < 0 || j < 0 || gap < options.tolerance) {
      result.converged = true;
      break;
    }
    if (iter >= options.max_iterations) break;

    const double yi = yd(i), yj = yd(j);
    const double old_ai = alpha[i], old_aj = alpha[j];
    if (yi != yj) {
      double quad = K(i, i) + K(j, j) - 2.0 * K(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = K(i, i) + K(j, j) - 2.0 * K(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = sum;
        }
        if (alpha[i] < 0) {
          alpha[i] = 0;
          alpha[j] = sum;
        }
      }
    }

    const double dai = alpha[i] - old_ai, daj = alpha[j] - old_aj;
    const auto Ki = K.col(i);
    const auto Kj = K.col(j);
    for (Eigen::Index t = 0; t < n; ++t) grad[t] += yd(t) * (yi * Ki[t] * dai + yj * Kj[t] * daj);
  }

  // Bias: average over free vectors, else midpoint of the feasible interval.
  double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  std::size_t n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = yd(t) * grad[t];
    if (alpha[t] >= C) {
      if (yd(t) < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0) {
      if (yd(t) > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;

  result.alpha = std::move(alpha);
  result.bias = -rho;
  result.dual_objective = -0.5 * result.alpha.dot(grad - Eigen::VectorXd::Ones(n));
  result.kkt_gap = gap;
  result.iterations = iter;
  return result;
}

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
  if (A.cols() != B.cols()) throw DataError("distance between matrices of different dimension");
  Eigen::MatrixXd D(A.rows(), B.rows());
  for (Eigen::Index j = 0; j < B.rows(); ++j) {
    for (Eigen::Index i = 0; i < A.rows(); ++i) D(i, j) = (A.row(i) - B.row(j)).squaredNorm();
  }
  return D;
}

Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, double gamma) {
  return (-gamma * squared_distances(A, B).array()).exp().matrix();
}

Eigen::VectorXd SvmModel::decision_function(const Eigen::MatrixXd& X) const {
  if (support_vectors.rows() == 0) return Eigen::VectorXd::Constant(X.rows(), bias);
  return rbf_kernel(X, support_vectors, gamma) * dual_coef + Eigen::VectorXd::Constant(X.rows(), bias);
}

namespace {

SvmModel assemble_model(const Eigen::MatrixXd& X, std::span<const int> y, const SmoResult& r, double C,
                        double gamma) {
  std::vector<Eigen::Index> sv;
  for (Eigen::Index t = 0; t < r.alpha.size(); ++t) {
    if (r.alpha[t] > 0.0) sv.push_back(t);
  }
  SvmModel model;
  model.gamma = gamma;
  model.C = C;
  model.bias = r.bias;
  const auto n_sv = static_cast<Eigen::Index>(sv.size());
  model.support_vectors.resize(n_sv, X.cols());
  model.dual_coef.resize(n_sv);
  model.alpha.resize(n_sv);
  for (Eigen::Index k = 0; k < n_sv; ++k) {
    model.support_vectors.row(k) = X.row(sv[static_cast<std::size_t>(k)]);
    model.alpha[k] = r.alpha[sv[static_cast<std::size_t>(k)]];
    model.dual_coef[k] = model.alpha[k] * y[static_cast<std::size_t>(sv[static_cast<std::size_t>(k)])];
  }
  return model;
}

}  // namespace

SvmFit svm_fit(const Eigen::MatrixXd& X, std::span<const int> y, double C, double gamma, const SmoOptions& options) {
  check_labels(y, X.rows());
  if (!X.allFinite()) throw DataError("SVM features are not finite");
  if (!(gamma > 0.0)) throw ConfigError("RBF gamma must be positive");
  SvmFit fit;
  fit.solver = solve_smo(rbf_kernel(X, X, gamma), y, C, options);
  if (!fit.solver.converged) {
    spdlog::warn("SMO stopped at the iteration cap ({}) with KKT gap {:.3g} (C={}, gamma={})", options.max_iterations,
                 fit.solver.kkt_gap, C, gamma);
  }
  fit.model = assemble_model(X, y, fit.solver, C, gamma);
  return fit;
}

SvmModel svm_train(const Eigen::MatrixXd& X, std::span<const int> y, double C, double gamma,
                   const SmoOptions& options) {
  return svm_fit(X, y, C, gamma, options).model;
}

std::vector<int> stratified_folds(std::span<const int> y, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("cross-validation needs at least 2 folds");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < y.size(); ++i) (y[i] > 0 ? pos : neg).push_back(i);
  if (pos.size() < static_cast<std::size_t>(k) || neg.size() < static_cast<std::size_t>(k)) {
    throw DataError("class too small for " + std::to_string(k) + "-fold cross-validation (" +
                    std::to_string(pos.size()) + " positive, " + std::to_string(neg.size()) + " negative)");
  }
  Rng rng(seed);
  std::vector<int> fold(y.size(), 0);
  for (auto* cls : {&neg, &pos}) {
    rng.shuffle(std::span<std::size_t>(*cls));
    for (std::size_t r = 0; r < cls->size(); ++r) fold[(*cls)[r]] = static_cast<int>(r % static_cast<std::size_t>(k));
  }
  return fold;
}

GridSearchResult svm_grid_search(const Eigen::MatrixXd& X, std::span<const int> y, const SvmGrid& grid,
                                 std::uint64_t seed, int folds, const SmoOptions& options) {
  check_labels(y, X.rows());
  if (!X.allFinite()) throw DataError("SVM features are not finite");
  if (grid.C_values.empty() || grid.gamma_values.empty()) throw ConfigError("empty SVM grid");
  const std::vector<int> fold_of = stratified_folds(y, folds, seed);
  const Eigen::MatrixXd D = squared_distances(X, X);

  const std::size_t n_cells = grid.C_values.size() * grid.gamma_values.size();
  std::vector<double> acc_sum(n_cells, 0.0);
  std::size_t unconverged = 0;

  for (int f = 0; f < folds; ++f) {
    std::vector<Eigen::Index> tr, va;
    for (std::size_t i = 0; i < fold_of.size(); ++i) (fold_of[i] == f ? va : tr).push_back(static_cast<Eigen::Index>(i));
    std::vector<int> y_tr;
    for (auto i : tr) y_tr.push_back(y[static_cast<std::size_t>(i)]);
    const Eigen::MatrixXd D_tr = D(tr, tr);
    const Eigen::MatrixXd D_va = D(va, tr);

    for (std::size_t g = 0; g < grid.gamma_values.size(); ++g) {
      const double gamma = grid.gamma_values[g];
      const Eigen::MatrixXd K_tr = (-gamma * D_tr.array()).exp().matrix();
      const Eigen::MatrixXd K_va = (-gamma * D_va.array()).exp().matrix();
      for (std::size_t c = 0; c < grid.C_values.size(); ++c) {
        const SmoResult r = solve_smo(K_tr, y_tr, grid.C_values[c], options);
        if (!r.converged) ++unconverged;
        Eigen::VectorXd coef(static_cast<Eigen::Index>(tr.size()));
        for (std::size_t t = 0; t < tr.size(); ++t) coef[static_cast<Eigen::Index>(t)] = r.alpha[static_cast<Eigen::Index>(t)] * y_tr[t];
        const Eigen::VectorXd dec = K_va * coef;
        std::size_t correct = 0;
        for (std::size_t v = 0; v < va.size(); ++v) {
          const int pred = dec[static_cast<Eigen::Index>(v)] + r.bias >= 0.0 ? 1 : -1;
          if (pred == y[static_cast<std::size_t>(va[v])]) ++correct;
        }
        acc_sum[c * grid.gamma_values.size() + g] += static_cast<double>(correct) / static_cast<double>(va.size());
      }
    }
  }

  GridSearchResult out;
  out.cv_accuracy = -1.0;
  for (std::size_t c = 0; c < grid.C_values.size(); ++c) {
    for (std::size_t g = 0; g < grid.gamma_values.size(); ++g) {
      const double acc = acc_sum[c * grid.gamma_values.size() + g] / folds;
      out.table.push_back({grid.C_values[c], grid.gamma_values[g], acc});
      if (acc > out.cv_accuracy) {
        out.cv_accuracy = acc;
        out.best_C = grid.C_values[c];
        out.best_gamma = grid.gamma_values[g];
      }
    }
  }
  out.unconverged_cv_fits = unconverged;
  if (unconverged > 0) {
    spdlog::debug("{} of {} CV fits stopped at the SMO iteration cap", unconverged, n_cells * static_cast<std::size_t>(folds));
  }
  out.model = svm_train(X, y, out.best_C, out.best_gamma, options);
  return out;
}

}  // namespace sba
