#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tailtree/estimate.hpp"
#include "tailtree/model.hpp"

namespace tailtree {

struct EdgeInterval {
  double lower = 0.0;
  double upper = 0.0;
};

struct CIResult {
  std::vector<EdgeInterval> edges;  // in edge order
  double level = 0.95;
  std::string method;
  int k = 0;
  int replicates = 0;
  int failed_replicates = 0;
};

/// Matrix of partial derivatives of the pairwise coefficient map: row per
/// pair J = {u,v}, column per edge; entry phi(sqrt(p)/2)/sqrt(p) * theta_e
/// when the edge lies on the path, else 0.
Eigen::MatrixXd ece_jacobian(const HRTreeModel& model,
                             const std::vector<NodePair>& pairs);

/// Partial derivative of the bivariate stdf in its first argument at (1,1):
/// Phi(sqrt(p_uv)/2).
double stdf_margin_derivative(const HRTreeModel& model, int u, int v);

/// Covariance of the limiting pair-coefficient vector, estimated by
/// resampling event rows and rescaling by k.
Eigen::MatrixXd bootstrap_sigma_l(const ObservedData& data,
                                  const std::vector<NodePair>& pairs, int k,
                                  int b, std::uint64_t seed);

/// Sandwich normal intervals for the pairwise-coefficient estimator:
/// theta_e +- z * sqrt(M_ee / k) with
/// M = (J'J)^-1 J' Sigma_L J (J'J)^-1.
CIResult ece_asymptotic_ci(const HRTreeModel& model,
                           const std::vector<NodePair>& pairs, int k,
                           double level, const Eigen::MatrixXd& sigma_l);

/// Basic bootstrap: per edge [2*theta_hat - q(1-a/2), 2*theta_hat - q(a/2)]
/// over B refits on resampled rows. Replicates where the refit throws are
/// dropped; more than 10% failures is an error.
CIResult basic_bootstrap_ci(
    const std::function<Eigen::VectorXd(const ObservedData&)>& refit,
    const ObservedData& data, const Eigen::VectorXd& theta_hat, int b,
    double level, std::uint64_t seed);

/// Smoothed-copula resampling: each output row picks a source row uniformly
/// and draws coordinate v from Beta(rank, n+1-rank).
Eigen::MatrixXd beta_copula_sample(const Eigen::MatrixXd& ranks, int m,
                                   std::uint64_t seed);

struct PickandsBand {
  std::vector<double> w;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> empirical;
  int replicates = 0;
};

/// Pointwise bootstrap band for the Pickands function: quantiles of the
/// difference between resampled and smoothed-copula estimates, recentered on
/// the empirical curve.
PickandsBand pickands_bootstrap_band(const ObservedData& data, int u, int v,
                                     int k, const std::vector<double>& w_grid,
                                     int b, double level, std::uint64_t seed);

/// Linearly interpolated empirical quantile (values need not be sorted).
double empirical_quantile(std::vector<double> values, double q);

}  // namespace tailtree
