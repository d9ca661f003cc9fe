#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

namespace oracle {

double auc_all_pairs(std::span<const double> pos, std::span<const double> neg) {
  // Twice the win count is an integer, so the only rounding is the final divide.
  unsigned long long twice_wins = 0;
  for (double p : pos) {
    for (double n : neg) {
      if (p > n) {
        twice_wins += 2;
      } else if (p == n) {
        twice_wins += 1;
      }
    }
  }
  return static_cast<double>(twice_wins) / (2.0 * static_cast<double>(pos.size()) * static_cast<double>(neg.size()));
}

namespace {

Eigen::MatrixXd signed_kernel(const Eigen::MatrixXd& kernel, std::span<const int> y) {
  Eigen::MatrixXd q = kernel;
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    for (Eigen::Index j = 0; j < q.cols(); ++j) q(i, j) *= static_cast<double>(y[i] * y[j]);
  }
  return q;
}

// Euclidean projection onto {0 <= a <= C, y'a = 0}: a = clip(v - lambda*y),
// with lambda found by bisection on the monotone constraint residual.
Eigen::VectorXd project(const Eigen::VectorXd& v, const Eigen::VectorXd& yv, double C) {
  auto residual = [&](double lambda) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += yv[i] * std::clamp(v[i] - lambda * yv[i], 0.0, C);
    return s;
  };
  double lo = -(v.cwiseAbs().maxCoeff() + C) - 1.0;
  double hi = -lo;
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid == lo || mid == hi) break;
    if (residual(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double lambda = 0.5 * (lo + hi);
  Eigen::VectorXd a(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) a[i] = std::clamp(v[i] - lambda * yv[i], 0.0, C);
  return a;
}

}  // namespace

double svm_dual_objective(const Eigen::MatrixXd& kernel, std::span<const int> y, const Eigen::VectorXd& alpha) {
  const Eigen::MatrixXd q = signed_kernel(kernel, y);
  return alpha.sum() - 0.5 * alpha.dot(q * alpha);
}

QpSolution svm_dual_qp(const Eigen::MatrixXd& kernel, std::span<const int> y, double C, std::size_t max_iterations,
                       double residual_tol) {
  const Eigen::Index n = kernel.rows();
  const Eigen::MatrixXd q = signed_kernel(kernel, y);
  Eigen::VectorXd yv(n);
  for (Eigen::Index i = 0; i < n; ++i) yv[i] = y[i];

  const double lipschitz = std::max(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(q).eigenvalues().maxCoeff(), 1e-12);
  const double step = 1.0 / lipschitz;
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);

  Eigen::VectorXd x = project(Eigen::VectorXd::Zero(n), yv, C);
  Eigen::VectorXd x_prev = x;
  Eigen::VectorXd z = x;
  double t = 1.0;
  QpSolution out;
  for (std::size_t it = 0; it < max_iterations; ++it) {
    const Eigen::VectorXd grad = q * z - ones;  // gradient of the minimised form
    const Eigen::VectorXd x_next = project(z - step * grad, yv, C);
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    // Adaptive restart when momentum points uphill.
    if ((z - x_next).dot(x_next - x) > 0.0) {
      t = 1.0;
      z = x_next;
    } else {
      z = x_next + ((t - 1.0) / t_next) * (x_next - x);
      t = t_next;
    }
    x_prev = x;
    x = x_next;
    out.iterations = it + 1;
    if (it % 50 == 49) {
      const Eigen::VectorXd g = q * x - ones;
      out.residual = (x - project(x - step * g, yv, C)).lpNorm<Eigen::Infinity>();
      if (out.residual < residual_tol) break;
    }
  }
  out.alpha = x;
  out.objective = x.sum() - 0.5 * x.dot(q * x);
  return out;
}

double svm_kkt_violation(const Eigen::MatrixXd& kernel, std::span<const int> y, double C, const Eigen::VectorXd& alpha) {
  const Eigen::MatrixXd q = signed_kernel(kernel, y);
  const Eigen::VectorXd grad = q * alpha - Eigen::VectorXd::Ones(alpha.size());
  const double eps = 1e-12 * std::max(1.0, C);
  double up = -std::numeric_limits<double>::infinity();
  double low = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    const double v = -y[i] * grad[i];
    const bool below_c = alpha[i] < C - eps;
    const bool above_0 = alpha[i] > eps;
    const bool in_up = (y[i] > 0 && below_c) || (y[i] < 0 && above_0);
    const bool in_low = (y[i] > 0 && above_0) || (y[i] < 0 && below_c);
    if (in_up) up = std::max(up, v);
    if (in_low) low = std::min(low, v);
  }
  if (!std::isfinite(up) || !std::isfinite(low)) return 0.0;
  return std::max(0.0, up - low);
}

namespace {

double htk_mel(double hz) { return 1127.0 * std::log1p(hz / 700.0); }
double htk_hz(double mel) { return 700.0 * std::expm1(mel / 1127.0); }

std::vector<double> band_edges(std::size_t n_mels, double f_min, double f_max) {
  std::vector<double> edges(n_mels + 2);
  const double lo = htk_mel(f_min), hi = htk_mel(f_max);
  for (std::size_t i = 0; i < edges.size(); ++i) {
    edges[i] = htk_hz(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  }
  return edges;
}

}  // namespace

std::vector<double> direct_dft_log_mel(std::span<const double> frame, int sample_rate, std::size_t n_mels,
                                       double f_min, double f_max, double log_floor) {
  const std::size_t n = frame.size();
  const double two_pi = 8.0 * std::atan(1.0);
  std::vector<double> windowed(n);
  for (std::size_t i = 0; i < n; ++i) {
    windowed[i] = frame[i] * std::pow(std::sin(two_pi * static_cast<double>(i) / (2.0 * static_cast<double>(n))), 2);
  }
  const std::size_t n_bins = n / 2 + 1;
  std::vector<double> magnitude(n_bins);
  for (std::size_t k = 0; k < n_bins; ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double angle = -two_pi * static_cast<double>((k * i) % n) / static_cast<double>(n);
      acc += windowed[i] * std::polar(1.0, angle);
    }
    magnitude[k] = std::abs(acc);
  }
  const auto edges = band_edges(n_mels, f_min, f_max);
  std::vector<double> out(n_mels);
  for (std::size_t m = 0; m < n_mels; ++m) {
    double energy = 0.0;
    for (std::size_t k = 0; k < n_bins; ++k) {
      const double hz = static_cast<double>(k) * static_cast<double>(sample_rate) / static_cast<double>(n);
      double w = 0.0;
      if (hz > edges[m] && hz <= edges[m + 1]) {
        w = (hz - edges[m]) / (edges[m + 1] - edges[m]);
      } else if (hz > edges[m + 1] && hz < edges[m + 2]) {
        w = (edges[m + 2] - hz) / (edges[m + 2] - edges[m + 1]);
      }
      energy += w * magnitude[k];
    }
    out[m] = std::log(energy < log_floor ? log_floor : energy);
  }
  return out;
}

std::size_t mel_band_nearest(double hz, std::size_t n_mels, double f_min, double f_max) {
  const auto edges = band_edges(n_mels, f_min, f_max);
  std::size_t best = 0;
  for (std::size_t m = 1; m < n_mels; ++m) {
    if (std::abs(edges[m + 1] - hz) < std::abs(edges[best + 1] - hz)) best = m;
  }
  return best;
}

Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x,
                                   double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = f(probe);
    probe[i] = x[i] - h;
    const double down = f(probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double t_two_sided_p(double t, double df, std::size_t intervals) {
  const double pi = 4.0 * std::atan(1.0);
  const double log_norm = std::lgamma(0.5 * (df + 1.0)) - std::lgamma(0.5 * df) - 0.5 * std::log(df * pi);
  auto density = [&](double x) { return std::exp(log_norm - 0.5 * (df + 1.0) * std::log1p(x * x / df)); };
  const double b = std::abs(t);
  if (b == 0.0) return 1.0;
  if (intervals % 2 != 0) ++intervals;
  const double h = b / static_cast<double>(intervals);
  double sum = density(0.0) + density(b);
  for (std::size_t i = 1; i < intervals; ++i) sum += density(h * static_cast<double>(i)) * (i % 2 == 1 ? 4.0 : 2.0);
  const double central = sum * h / 3.0;  // P(0 < T < |t|)
  return 1.0 - 2.0 * central;
}

}  // namespace oracle
