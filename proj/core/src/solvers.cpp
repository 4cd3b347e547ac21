#include "tailtree/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace tailtree {

Eigen::VectorXd nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                     int max_iterations) {
  const Eigen::Index n = a.cols();
  if (a.rows() != b.size()) throw DimensionMismatch("nnls dimensions disagree");
  if (max_iterations <= 0) max_iterations = 3 * static_cast<int>(n) + 30;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  std::vector<bool> passive(static_cast<std::size_t>(n), false);
  Eigen::VectorXd w = a.transpose() * (b - a * x);
  const double tol = 1e-10 * std::max(1.0, b.norm()) * std::max(1.0, a.norm());

  auto solve_passive = [&](const std::vector<bool>& set) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index j = 0; j < n; ++j)
      if (set[static_cast<std::size_t>(j)]) idx.push_back(j);
    Eigen::MatrixXd ap(a.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t k = 0; k < idx.size(); ++k) ap.col(static_cast<Eigen::Index>(k)) = a.col(idx[k]);
    const Eigen::VectorXd zp = ap.colPivHouseholderQr().solve(b);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k < idx.size(); ++k) z(idx[k]) = zp(static_cast<Eigen::Index>(k));
    return z;
  };

  for (int outer = 0; outer < max_iterations; ++outer) {
    // most violated stationarity condition among the clamped coordinates
    Eigen::Index best = -1;
    double best_w = tol;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!passive[static_cast<std::size_t>(j)] && w(j) > best_w) {
        best_w = w(j);
        best = j;
      }
    }
    if (best < 0) return x;  // KKT satisfied
    passive[static_cast<std::size_t>(best)] = true;

    Eigen::VectorXd z = solve_passive(passive);
    for (int inner = 0; inner < max_iterations; ++inner) {
      double alpha = 1.0;
      bool clipped = false;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (!passive[static_cast<std::size_t>(j)] || z(j) > 0.0) continue;
        const double step = x(j) / (x(j) - z(j));
        if (step < alpha) alpha = step;
        clipped = true;
      }
      if (!clipped) {
        x = z;
        break;
      }
      x += alpha * (z - x);
      for (Eigen::Index j = 0; j < n; ++j)
        if (passive[static_cast<std::size_t>(j)] && x(j) <= tol) {
          passive[static_cast<std::size_t>(j)] = false;
          x(j) = 0.0;
        }
      z = solve_passive(passive);
    }
    w = a.transpose() * (b - a * x);
  }
  throw SolverFailure("nnls did not converge");
}

namespace {

Eigen::VectorXd numeric_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                                 const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::fabs(x(i)));
    probe(i) = x(i) + step;
    const double fp = f(probe);
    probe(i) = x(i) - step;
    const double fm = f(probe);
    probe(i) = x(i);
    g(i) = (fp - fm) / (2.0 * step);
  }
  return g;
}

}  // namespace

MinimizeResult bfgs_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                             Eigen::VectorXd x0, const MinimizeOptions& options) {
  const Eigen::Index n = x0.size();
  MinimizeResult result;
  result.x = std::move(x0);
  result.value = f(result.x);
  if (!std::isfinite(result.value))
    throw OptimizerDivergence("objective is not finite at the starting point");

  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd grad = numeric_gradient(f, result.x, options.fd_step);

  for (int it = 0; it < options.max_iterations; ++it) {
    result.iterations = it;
    if (grad.lpNorm<Eigen::Infinity>() <= options.gradient_tol) {
      result.converged = true;
      return result;
    }
    Eigen::VectorXd dir = -h_inv * grad;
    double slope = grad.dot(dir);
    if (slope >= 0.0) {  // reset on loss of descent
      h_inv.setIdentity();
      dir = -grad;
      slope = grad.dot(dir);
    }

    double step = 1.0;
    double f_new = std::numeric_limits<double>::infinity();
    Eigen::VectorXd x_new;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = result.x + step * dir;
      f_new = f(x_new);
      if (std::isfinite(f_new) && f_new <= result.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // no further descent along the quasi-Newton direction
      result.converged = grad.lpNorm<Eigen::Infinity>() <= 10 * options.gradient_tol;
      return result;
    }

    const Eigen::VectorXd grad_new = numeric_gradient(f, x_new, options.fd_step);
    const Eigen::VectorXd s = x_new - result.x;
    const Eigen::VectorXd y = grad_new - grad;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const Eigen::VectorXd hy = h_inv * y;
      const double yhy = y.dot(hy);
      // BFGS inverse update
      h_inv += ((sy + yhy) / (sy * sy)) * (s * s.transpose()) -
               (hy * s.transpose() + s * hy.transpose()) / sy;
    }
    const double improvement = result.value - f_new;
    result.x = x_new;
    result.value = f_new;
    grad = grad_new;
    if (s.norm() <= options.step_tol * std::max(1.0, result.x.norm()) &&
        improvement <= options.step_tol * std::max(1.0, std::fabs(result.value))) {
      result.converged = true;
      return result;
    }
  }
  result.converged = grad.lpNorm<Eigen::Infinity>() <= options.gradient_tol;
  return result;
}

LeastSquaresResult levenberg_marquardt(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& residuals,
    const std::function<Eigen::MatrixXd(const Eigen::VectorXd&)>& jacobian,
    Eigen::VectorXd x0, int max_iterations, double tol) {
  LeastSquaresResult result;
  result.x = std::move(x0);
  Eigen::VectorXd r = residuals(result.x);
  result.objective = r.squaredNorm();
  double lambda = 1e-3;

  for (int it = 0; it < max_iterations; ++it) {
    result.iterations = it;
    const Eigen::MatrixXd j = jacobian(result.x);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const Eigen::VectorXd jtr = j.transpose() * r;
    if (jtr.lpNorm<Eigen::Infinity>() <= tol) {
      result.converged = true;
      return result;
    }
    bool stepped = false;
    for (int tries = 0; tries < 40; ++tries) {
      Eigen::MatrixXd damped = jtj;
      damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd delta = damped.ldlt().solve(-jtr);
      const Eigen::VectorXd x_new = result.x + delta;
      const Eigen::VectorXd r_new = residuals(x_new);
      const double obj_new = r_new.squaredNorm();
      if (std::isfinite(obj_new) && obj_new < result.objective) {
        result.x = x_new;
        r = r_new;
        const double drop = result.objective - obj_new;
        result.objective = obj_new;
        lambda = std::max(lambda * 0.3, 1e-12);
        stepped = true;
        if (drop <= tol * std::max(1.0, result.objective)) {
          result.converged = true;
          return result;
        }
        break;
      }
      lambda *= 10.0;
    }
    if (!stepped) {
      result.converged = true;  // no descent direction left at any damping
      return result;
    }
  }
  return result;
}

}  // namespace tailtree
