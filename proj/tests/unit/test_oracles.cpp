#include <doctest.h>

#include <cmath>

#include "../oracles/oracles.hpp"

// The oracles are checked on cases with closed-form answers before they are
// trusted to judge the library.
TEST_SUITE("oracles") {
  TEST_CASE("all-pairs AUC") {
    const double p[] = {0.9, 0.8};
    const double n[] = {0.7, 0.85};
    CHECK(oracle::auc_all_pairs(p, n) == 0.75);
    const double t[] = {1.0};
    CHECK(oracle::auc_all_pairs(t, t) == 0.5);
  }

  TEST_CASE("QP oracle on a symmetric pair") {
    // K = [[1, k], [k, 1]], y = (+1, -1): optimum a1 = a2 = 1 / (1 - k), capped at C.
    const double k = std::exp(-4.0 * 0.3);
    Eigen::MatrixXd K(2, 2);
    K << 1, k, k, 1;
    const int y[] = {1, -1};
    const auto free = oracle::svm_dual_qp(K, y, 100.0);
    CHECK(free.alpha[0] == doctest::Approx(1.0 / (1.0 - k)).epsilon(1e-10));
    CHECK(free.alpha[1] == doctest::Approx(1.0 / (1.0 - k)).epsilon(1e-10));
    CHECK(free.objective == doctest::Approx(1.0 / (1.0 - k)).epsilon(1e-10));
    CHECK(oracle::svm_kkt_violation(K, y, 100.0, free.alpha) < 1e-8);

    const auto capped = oracle::svm_dual_qp(K, y, 0.5);
    CHECK(capped.alpha[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(capped.objective == doctest::Approx(1.0 - 0.25 * (1.0 - k)).epsilon(1e-12));
  }

  TEST_CASE("KKT violation of an infeasible-looking start") {
    Eigen::MatrixXd K = Eigen::MatrixXd::Identity(2, 2);
    const int y[] = {1, -1};
    CHECK(oracle::svm_kkt_violation(K, y, 1.0, Eigen::VectorXd::Zero(2)) == doctest::Approx(2.0));
  }

  TEST_CASE("direct DFT log-mel: silence sits at the floor, DC stays in the lowest band") {
    const std::vector<double> zeros(256, 0.0);
    for (double v : oracle::direct_dft_log_mel(zeros, 16000, 10, 0.0, 8000.0, 1e-10)) CHECK(v == std::log(1e-10));
    const std::vector<double> dc(256, 1.0);
    const auto bands = oracle::direct_dft_log_mel(dc, 16000, 10, 0.0, 8000.0, 1e-10);
    CHECK(bands[0] > bands[5]);
  }

  TEST_CASE("central differences on a cubic") {
    Eigen::VectorXd x(2);
    x << 1.5, -0.5;
    const auto g = oracle::central_difference(
        [](const Eigen::VectorXd& v) { return v[0] * v[0] * v[0] + 2.0 * v[0] * v[1]; }, x, 1e-5);
    CHECK(g[0] == doctest::Approx(3.0 * 2.25 - 1.0).epsilon(1e-8));
    CHECK(g[1] == doctest::Approx(3.0).epsilon(1e-8));
  }

  TEST_CASE("t quadrature against tabulated critical values") {
    CHECK(oracle::t_two_sided_p(2.776445105, 4.0) == doctest::Approx(0.05).epsilon(1e-8));
    CHECK(oracle::t_two_sided_p(12.70620474, 1.0) == doctest::Approx(0.05).epsilon(1e-8));
    CHECK(oracle::t_two_sided_p(2.228138852, 10.0) == doctest::Approx(0.05).epsilon(1e-8));
    CHECK(oracle::t_two_sided_p(0.0, 4.0) == 1.0);
  }
}
