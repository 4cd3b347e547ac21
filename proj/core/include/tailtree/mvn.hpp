#pragma once

#include <Eigen/Dense>

#include "tailtree/errors.hpp"

namespace tailtree {

struct CdfResult {
  double value = 0.0;           // in [0,1]
  double error_estimate = 0.0;  // 3-sigma estimate across lattice shifts
  long evaluations = 0;
};

struct MvnOptions {
  double tol = 1e-5;
  long max_evaluations = 1'000'000;
};

inline constexpr int kMaxMvnDim = 16;

/// Lower-triangular factor L with L L^T = cov. Requires symmetry within
/// 1e-12; on failure retries once with 1e-12*trace/p added to the diagonal.
Eigen::MatrixXd cholesky(const Eigen::MatrixXd& cov);

/// Log-density of N(mean, cov) at x.
double mvn_logpdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                  const Eigen::MatrixXd& cov);

/// P(N(mean, cov) <= upper), estimated by separation-of-variables with a
/// randomized rank-1 lattice over a variable ordering chosen during the
/// Cholesky factorization. Deterministic: the lattice shifts come from a
/// fixed internal seed.
CdfResult mvn_cdf(const Eigen::VectorXd& upper, const Eigen::VectorXd& mean,
                  const Eigen::MatrixXd& cov, const MvnOptions& options = {});

}  // namespace tailtree
