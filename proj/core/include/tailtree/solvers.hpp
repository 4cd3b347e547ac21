#pragma once

#include <Eigen/Dense>
#include <functional>

#include "tailtree/errors.hpp"

namespace tailtree {

/// Nonnegative least squares: minimizes |A x - b| subject to x >= 0
/// (Lawson-Hanson active set).
Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                     int max_iterations = 0);

struct MinimizeOptions {
  int max_iterations = 500;
  double gradient_tol = 1e-6;
  double step_tol = 1e-12;
  double fd_step = 1e-5;  // central-difference step for numeric gradients
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Quasi-Newton minimization with numeric central-difference gradients and a
/// backtracking line search.
MinimizeResult bfgs_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                             Eigen::VectorXd x0, const MinimizeOptions& options = {});

struct LeastSquaresResult {
  Eigen::VectorXd x;
  double objective = 0.0;  // sum of squared residuals
  int iterations = 0;
  bool converged = false;
};

/// Levenberg-Marquardt on residuals r(x) with analytic Jacobian J(x).
LeastSquaresResult levenberg_marquardt(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals,
    const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& jacobian,
    Eigen::VectorXd x0, int max_iterations = 200, double tol = 1e-12);

}  // namespace tailtree
