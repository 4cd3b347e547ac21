#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "tailtree/solvers.hpp"

using namespace tailtree;

TEST_CASE("nnls equals least squares at interior solutions") {
  Eigen::MatrixXd a(4, 2);
  a << 1, 0, 0, 1, 1, 1, 1, -1;
  Eigen::VectorXd x_true(2);
  x_true << 0.7, 0.3;
  const Eigen::VectorXd b = a * x_true;
  const Eigen::VectorXd x = nnls(a, b);
  CHECK((x - x_true).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("nnls clamps active coordinates at zero") {
  Eigen::MatrixXd a(3, 2);
  a << 1, 0, 0, 1, 1, 1;
  Eigen::VectorXd b(3);
  b << -1.0, 2.0, 1.0;
  const Eigen::VectorXd x = nnls(a, b);
  CHECK(x(0) == doctest::Approx(0.0));
  CHECK(x(1) == doctest::Approx(1.5));
  // KKT: gradient of active coordinate must be nonpositive
  const Eigen::VectorXd grad = a.transpose() * (b - a * x);
  CHECK(grad(0) <= 1e-9);
}

TEST_CASE("nnls random problems satisfy the optimality conditions") {
  std::mt19937_64 gen(12);
  std::normal_distribution<double> z;
  for (int rep = 0; rep < 30; ++rep) {
    Eigen::MatrixXd a(12, 5);
    Eigen::VectorXd b(12);
    for (int i = 0; i < 12; ++i) {
      b(i) = z(gen);
      for (int j = 0; j < 5; ++j) a(i, j) = z(gen);
    }
    const Eigen::VectorXd x = nnls(a, b);
    CHECK(x.minCoeff() >= 0.0);
    const Eigen::VectorXd grad = a.transpose() * (b - a * x);
    for (int j = 0; j < 5; ++j) {
      if (x(j) > 1e-9)
        CHECK(std::fabs(grad(j)) <= 1e-6);
      else
        CHECK(grad(j) <= 1e-6);
    }
  }
}

TEST_CASE("bfgs minimizes a quadratic and rosenbrock") {
  auto quad = [](const Eigen::VectorXd& x) {
    return 2.0 * (x(0) - 1.0) * (x(0) - 1.0) + 0.5 * (x(1) + 3.0) * (x(1) + 3.0);
  };
  const MinimizeResult q = bfgs_minimize(quad, Eigen::VectorXd::Zero(2));
  CHECK(q.converged);
  CHECK(q.x(0) == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(q.x(1) == doctest::Approx(-3.0).epsilon(1e-5));

  auto rosen = [](const Eigen::VectorXd& x) {
    const double a = 1.0 - x(0);
    const double b = x(1) - x(0) * x(0);
    return a * a + 100.0 * b * b;
  };
  const MinimizeResult r = bfgs_minimize(rosen, Eigen::VectorXd::Zero(2));
  CHECK(r.x(0) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(r.x(1) == doctest::Approx(1.0).epsilon(1e-3));

  auto bad = [](const Eigen::VectorXd& x) { return std::log(x(0)); };
  Eigen::VectorXd start(1);
  start << -1.0;
  CHECK_THROWS_AS(bfgs_minimize(bad, start), OptimizerDivergence);
}

TEST_CASE("levenberg-marquardt fits a nonlinear curve") {
  // residuals of y = exp(-c t) at three points
  const Eigen::Vector3d t(0.5, 1.0, 2.0);
  const double c_true = 0.8;
  Eigen::Vector3d y;
  for (int i = 0; i < 3; ++i) y(i) = std::exp(-c_true * t(i));
  auto residuals = [&](const Eigen::VectorXd& c) {
    Eigen::VectorXd r(3);
    for (int i = 0; i < 3; ++i) r(i) = std::exp(-c(0) * t(i)) - y(i);
    return r;
  };
  auto jacobian = [&](const Eigen::VectorXd& c) {
    Eigen::MatrixXd j(3, 1);
    for (int i = 0; i < 3; ++i) j(i, 0) = -t(i) * std::exp(-c(0) * t(i));
    return j;
  };
  Eigen::VectorXd c0(1);
  c0 << 0.1;
  const LeastSquaresResult fit = levenberg_marquardt(residuals, jacobian, c0);
  CHECK(fit.x(0) == doctest::Approx(c_true).epsilon(1e-6));
  CHECK(fit.objective <= 1e-12);
}
