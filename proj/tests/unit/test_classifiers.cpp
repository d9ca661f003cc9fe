#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "../oracles/oracles.hpp"
#include "sba/error.hpp"
#include "sba/metrics.hpp"
#include "sba/mlp.hpp"
#include "sba/normalizer.hpp"
#include "sba/random_forest.hpp"
#include "sba/rng.hpp"
#include "sba/scores.hpp"
#include "sba/svm.hpp"

using namespace sba;

namespace {

struct Blobs {
  Eigen::MatrixXd X;
  std::vector<int> y_pm;  // -1 / +1
  std::vector<int> y01;   // 0 / 1
};

Blobs blobs(std::size_t n_per_class, std::size_t dim, double separation, double spread, std::uint64_t seed) {
  Rng rng(seed);
  Blobs b;
  b.X.resize(static_cast<Eigen::Index>(2 * n_per_class), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < 2 * n_per_class; ++i) {
    const bool pos = i % 2 == 0;
    for (std::size_t d = 0; d < dim; ++d) {
      const double centre = d == 0 ? (pos ? separation / 2 : -separation / 2) : 0.0;
      b.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = centre + spread * rng.normal();
    }
    b.y_pm.push_back(pos ? 1 : -1);
    b.y01.push_back(pos ? 1 : 0);
  }
  return b;
}

double training_uar(const Eigen::VectorXd& scores, const std::vector<int>& y01, double threshold) {
  std::vector<int> pred;
  for (Eigen::Index i = 0; i < scores.size(); ++i) pred.push_back(scores[i] >= threshold ? 1 : 0);
  return core_metrics(confusion(pred, y01)).uar;
}

}  // namespace

TEST_SUITE("classifiers") {
  TEST_CASE("normalizer examples") {
    Eigen::MatrixXd train(2, 2);
    train << 0, 5, 2, 5;
    const auto n = Normalizer::fit(train);
    CHECK(n.mean()[0] == 1.0);
    CHECK(n.stddev()[0] == 1.0);
    Eigen::MatrixXd probe(1, 2);
    probe << 1, 7;
    const auto z = n.apply(probe);
    CHECK(z(0, 0) == 0.0);
    CHECK(z(0, 1) == 0.0);  // constant dimension
    CHECK(n.fit_hash() == matrix_hash(train));
    CHECK_THROWS_AS(Normalizer::fit(Eigen::MatrixXd::Ones(1, 3)), DataError);
  }

  TEST_CASE("normalized training set has zero mean and unit std") {
    Rng rng(6);
    Eigen::MatrixXd train(57, 6);
    for (Eigen::Index i = 0; i < train.size(); ++i) train.data()[i] = 100.0 + 30.0 * rng.normal();
    const auto z = Normalizer::fit(train).apply(train);
    for (Eigen::Index c = 0; c < z.cols(); ++c) {
      const double m = z.col(c).mean();
      const double sd = std::sqrt((z.col(c).array() - m).square().mean());
      CHECK(std::abs(m) < 1e-12);
      CHECK(std::abs(sd - 1.0) < 1e-12);
    }
  }

  TEST_CASE("matrix hash depends on shape and values") {
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 3);
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(3, 2);
    CHECK(matrix_hash(a) != matrix_hash(b));
    Eigen::MatrixXd c = a;
    c(1, 2) = 1e-300;
    CHECK(matrix_hash(a) != matrix_hash(c));
    CHECK(matrix_hash(a) == matrix_hash(Eigen::MatrixXd::Zero(2, 3)));
  }

  TEST_CASE("SVM: symmetric separable pair") {
    Eigen::MatrixXd X(2, 1);
    X << -1, 1;
    const std::vector<int> y{-1, 1};
    const auto m = svm_train(X, y, 1.0, 1.0);
    const auto f = m.decision_function(X);
    CHECK(f[0] < 0.0);
    CHECK(f[1] > 0.0);
    CHECK(f[0] == doctest::Approx(-f[1]).epsilon(1e-9));
    Eigen::MatrixXd probe(3, 1);
    probe << -0.3, 0.0, 0.3;
    const auto g = m.decision_function(probe);
    CHECK(std::abs(g[1]) < 1e-9);
    CHECK(g[0] == doctest::Approx(-g[2]).epsilon(1e-9));
  }

  TEST_CASE("SVM: XOR dual objective matches the QP oracle") {
    Eigen::MatrixXd X(4, 2);
    X << 0, 0, 1, 1, 0, 1, 1, 0;
    const std::vector<int> y{-1, -1, 1, 1};
    const auto K = rbf_kernel(X, X, 1.0);
    const auto smo = solve_smo(K, y, 10.0);
    const auto qp = oracle::svm_dual_qp(K, y, 10.0);
    CHECK(smo.converged);
    CHECK(std::abs(smo.dual_objective - qp.objective) < 1e-6);
    CHECK(std::abs(oracle::svm_dual_objective(K, y, smo.alpha) - smo.dual_objective) < 1e-12);
    const auto fit = svm_fit(X, y, 10.0, 1.0);
    const auto f = fit.model.decision_function(X);
    for (int i = 0; i < 4; ++i) CHECK(f[i] * y[static_cast<std::size_t>(i)] > 0.0);
  }

  TEST_CASE("SVM: dual feasibility on random inputs") {
    Rng rng(13);
    for (int trial = 0; trial < 30; ++trial) {
      const auto n = static_cast<Eigen::Index>(rng.between(4, 40));
      Eigen::MatrixXd X(n, 3);
      std::vector<int> y;
      for (Eigen::Index i = 0; i < n; ++i) {
        for (int d = 0; d < 3; ++d) X(i, d) = rng.normal();
        y.push_back(i < 2 ? (i == 0 ? 1 : -1) : (rng.below(2) ? 1 : -1));
      }
      const double C = std::pow(10.0, rng.uniform(-2.0, 2.0));
      const auto r = solve_smo(rbf_kernel(X, X, std::pow(10.0, rng.uniform(-2.0, 0.5))), y, C);
      CHECK(r.alpha.minCoeff() >= -1e-8);
      CHECK(r.alpha.maxCoeff() <= C + 1e-8);
      double balance = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) balance += r.alpha[i] * y[static_cast<std::size_t>(i)];
      CHECK(std::abs(balance) < 1e-8);
    }
  }

  TEST_CASE("SVM: decision function is invariant under training-set duplication") {
    // With no multiplier at the bound C, duplicating every point halves each
    // multiplier and leaves the decision function unchanged.
    const auto b = blobs(15, 2, 4.0, 0.7, 21);
    Eigen::MatrixXd X2(2 * b.X.rows(), b.X.cols());
    X2 << b.X, b.X;
    std::vector<int> y2 = b.y_pm;
    y2.insert(y2.end(), b.y_pm.begin(), b.y_pm.end());
    const double C = 1e3, gamma = 0.5;
    SmoOptions tight;
    tight.tolerance = 1e-9;
    const auto f1 = svm_fit(b.X, b.y_pm, C, gamma, tight);
    const auto f2 = svm_fit(X2, y2, C, gamma, tight);
    REQUIRE(f1.solver.alpha.maxCoeff() < C);
    Eigen::MatrixXd grid(121, 2);
    for (int i = 0; i <= 10; ++i) {
      for (int j = 0; j <= 10; ++j) grid.row(i * 11 + j) << -4.0 + 0.8 * i, -4.0 + 0.8 * j;
    }
    const auto d1 = f1.model.decision_function(grid);
    const auto d2 = f2.model.decision_function(grid);
    CHECK((d1 - d2).cwiseAbs().maxCoeff() < 1e-6);
  }

  TEST_CASE("SVM: input validation") {
    Eigen::MatrixXd X(3, 1);
    X << 0, 1, 2;
    CHECK_THROWS_AS(svm_train(X, std::vector<int>{1, 1, 1}, 1.0, 1.0), DataError);
    CHECK_THROWS_AS(svm_train(X, std::vector<int>{1, 0, -1}, 1.0, 1.0), DataError);
    X(1, 0) = std::nan("");
    CHECK_THROWS_AS(svm_train(X, std::vector<int>{1, -1, 1}, 1.0, 1.0), DataError);
  }

  TEST_CASE("grid search: separable blobs reach CV accuracy 1") {
    const auto b = blobs(50, 3, 8.0, 0.5, 3);
    const auto r = svm_grid_search(b.X, b.y_pm, SvmGrid{}, 0);
    CHECK(r.cv_accuracy == 1.0);
    CHECK(r.table.size() == 30);
    const auto best = std::max_element(r.table.begin(), r.table.end(),
                                       [](const GridCell& a, const GridCell& c) { return a.cv_accuracy < c.cv_accuracy; });
    CHECK(best->cv_accuracy == 1.0);
    CHECK(r.best_C == best->C);
    CHECK(r.best_gamma == best->gamma);
    // C-outer, gamma-inner.
    CHECK(r.table[0].C == 1e-2);
    CHECK(r.table[0].gamma == 1e0);
    CHECK(r.table[1].gamma == 1e-1);
    CHECK(r.table[5].C == 1e-1);
  }

  TEST_CASE("grid search: shuffled labels stay near chance") {
    auto b = blobs(50, 3, 0.0, 1.0, 4);
    Rng rng(4);
    rng.shuffle(std::span<int>(b.y_pm));
    const auto r = svm_grid_search(b.X, b.y_pm, SvmGrid{}, 0);
    CHECK(r.cv_accuracy >= 0.35);
    CHECK(r.cv_accuracy <= 0.65);
  }

  TEST_CASE("grid search: a full tie selects the first cell") {
    // Two tight, distant clusters: every cell classifies every fold perfectly.
    const auto b = blobs(10, 1, 20.0, 0.01, 5);
    const auto r = svm_grid_search(b.X, b.y_pm, SvmGrid{}, 0);
    REQUIRE(std::all_of(r.table.begin(), r.table.end(), [](const GridCell& c) { return c.cv_accuracy == 1.0; }));
    CHECK(r.best_C == 1e-2);
    CHECK(r.best_gamma == 1e0);
  }

  TEST_CASE("stratified folds") {
    std::vector<int> y(23, -1);
    for (int i = 0; i < 11; ++i) y[static_cast<std::size_t>(i)] = 1;
    const auto f = stratified_folds(y, 5, 9);
    for (int k = 0; k < 5; ++k) {
      int pos = 0, neg = 0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        if (f[i] == k) (y[i] > 0 ? pos : neg)++;
      }
      CHECK(pos >= 2);
      CHECK(pos <= 3);
      CHECK(neg >= 2);
      CHECK(neg <= 3);
    }
    CHECK(f == stratified_folds(y, 5, 9));
    CHECK_THROWS_AS(stratified_folds(std::vector<int>{1, 1, 1, -1, -1, -1, -1, -1}, 5, 0), DataError);
  }

  TEST_CASE("RF: one perfect split fits the training data") {
    Eigen::MatrixXd X(40, 1);
    std::vector<int> y;
    for (int i = 0; i < 40; ++i) {
      X(i, 0) = i < 20 ? -1.0 - 0.1 * i : 1.0 + 0.1 * i;
      y.push_back(i < 20 ? 0 : 1);
    }
    const auto m = rf_train(X, y);
    CHECK(m.tree_count() == 100);
    CHECK(training_uar(m.scores(X), y, 0.5) == 1.0);
  }

  TEST_CASE("RF: deterministic for a seed") {
    const auto b = blobs(30, 4, 1.5, 1.0, 8);
    const auto a = rf_train(b.X, b.y01);
    const auto c = rf_train(b.X, b.y01);
    const auto probe = blobs(20, 4, 1.0, 2.0, 9).X;
    CHECK((a.scores(probe).array() == c.scores(probe).array()).all());
    RfOptions other;
    other.seed = 43;
    CHECK((a.scores(probe).array() != rf_train(b.X, b.y01, other).scores(probe).array()).any());
  }

  TEST_CASE("RF: score is the vote fraction") {
    std::vector<DecisionTree> trees;
    for (int t = 0; t < 100; ++t) trees.push_back(DecisionTree::constant(t < 63));
    const RfModel m(std::move(trees));
    const Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(3);
    CHECK(m.score(x) == doctest::Approx(0.63).epsilon(1e-15));
    const auto s = make_score_set({m.score(x)}, ClassifierKind::rf);
    CHECK(s.predictions[0] == 1);
  }

  TEST_CASE("RF: trees grow until nodes are pure or below two samples") {
    const auto b = blobs(25, 3, 1.0, 1.0, 10);
    RfOptions o;
    o.n_trees = 5;
    o.bootstrap = false;
    o.max_features = 3;
    const auto m = rf_train(b.X, b.y01, o);
    for (const auto& t : m.trees()) {
      for (const auto& node : t.nodes()) {
        if (node.feature < 0) CHECK((node.positive_fraction == 0.0 || node.positive_fraction == 1.0));
      }
    }
    CHECK_THROWS_AS(rf_train(b.X, std::vector<int>(50, 1)), DataError);
  }

  TEST_CASE("MLP: analytic gradient matches central differences") {
    Rng rng(14);
    Eigen::MatrixXd X(10, 3);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
    const std::vector<int> y{1, 0, 1, 1, 0, 0, 1, 0, 1, 0};
    MlpModel m(3, {6, 5}, 99);
    Eigen::VectorXd theta = m.parameters();
    for (Eigen::Index i = 0; i < theta.size(); ++i) theta[i] += 0.1 * rng.normal();
    m.set_parameters(theta);
    Eigen::VectorXd grad;
    m.loss_and_gradient(X, y, grad);
    MlpModel probe = m;
    const auto numeric = oracle::central_difference(
        [&](const Eigen::VectorXd& p) {
          probe.set_parameters(p);
          return probe.loss(X, y);
        },
        theta, 1e-5);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < grad.size(); ++i) {
      worst = std::max(worst, std::abs(grad[i] - numeric[i]) /
                                  std::max({std::abs(grad[i]), std::abs(numeric[i]), 1e-7}));
    }
    CHECK(worst <= 1e-4);
  }

  TEST_CASE("MLP: separable blobs reach training UAR 0.99") {
    const auto b = blobs(100, 2, 5.0, 0.8, 15);
    const auto z = Normalizer::fit(b.X).apply(b.X);
    const auto fit = mlp_fit(z, b.y01);
    CHECK(training_uar(fit.model.predict_proba(z), b.y01, 0.5) >= 0.99);
    REQUIRE(fit.loss_history.size() == 1000);
    const double early = std::accumulate(fit.loss_history.begin(), fit.loss_history.begin() + 100, 0.0);
    const double late = std::accumulate(fit.loss_history.end() - 100, fit.loss_history.end(), 0.0);
    CHECK(late < early);
  }

  TEST_CASE("MLP: zero output layer scores exactly one half") {
    MlpModel m(4, {150, 100, 50}, 42);
    m.zero_output_layer();
    Rng rng(2);
    Eigen::MatrixXd X(7, 4);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal() * 10;
    CHECK((m.predict_proba(X).array() == 0.5).all());
  }

  TEST_CASE("MLP: training is bit-deterministic and validates input") {
    const auto b = blobs(20, 3, 2.0, 1.0, 16);
    MlpOptions o;
    o.epochs = 50;
    const auto a = mlp_train(b.X, b.y01, o);
    const auto c = mlp_train(b.X, b.y01, o);
    CHECK((a.parameters().array() == c.parameters().array()).all());
    Eigen::MatrixXd bad = b.X;
    bad(0, 0) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(mlp_train(bad, b.y01, o), DataError);
  }

  TEST_CASE("MLP: initial weights lie in the fan-in range") {
    const MlpModel m(8, {150, 100, 50}, 42);
    for (const auto& layer : m.layers()) {
      const double bound = std::sqrt(6.0 / static_cast<double>(layer.weights.cols()));
      CHECK(layer.weights.cwiseAbs().maxCoeff() <= bound);
      CHECK((layer.bias.array() == 0.0).all());
    }
    CHECK(m.parameter_count() == 8 * 150 + 150 + 150 * 100 + 100 + 100 * 50 + 50 + 50 + 1);
  }

  TEST_CASE("score sets threshold exactly") {
    const auto svm = make_score_set({-0.1, 0.0, 0.2}, ClassifierKind::svm);
    CHECK(svm.predictions == std::vector<int>{0, 1, 1});
    const auto mlp = make_score_set({0.49999999, 0.5, 0.9}, ClassifierKind::mlp);
    CHECK(mlp.predictions == std::vector<int>{0, 1, 1});
    Rng rng(1);
    std::vector<double> s(200);
    for (auto& v : s) v = rng.uniform();
    const auto rf = make_score_set(s, ClassifierKind::rf);
    for (std::size_t i = 0; i < s.size(); ++i) CHECK(rf.predictions[i] == (s[i] >= 0.5 ? 1 : 0));
    CHECK(parse_classifier("mlp") == ClassifierKind::mlp);
    CHECK_THROWS_AS(parse_classifier("knn"), ConfigError);
  }
}
