#pragma once

#include <Eigen/Dense>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tailtree/model.hpp"

namespace tailtree {

/// Observation table: one column per observed node id, NaN marks a missing
/// cell.
struct ObservedData {
  std::vector<int> nodes;  // 1-based node ids, one per column
  Eigen::MatrixXd values;

  int column_of(int node) const;
};

/// Rows with any missing value among the requested nodes are dropped; the
/// drop count is reported alongside.
struct CompleteCases {
  std::vector<int> nodes;
  Eigen::MatrixXd values;
  int dropped = 0;
};
CompleteCases complete_cases(const ObservedData& data,
                             const std::vector<int>& nodes);

/// Average ranks (ties averaged), in [1, n]. Throws on a constant column.
Eigen::VectorXd average_ranks(const Eigen::VectorXd& column);

/// Empirical standardization to the heavy-tailed scale:
/// xhat = (n+1)/(n+1-rank).
struct RankTransformed {
  Eigen::MatrixXd xhat;
  Eigen::MatrixXd ranks;
  int n = 0;
};
RankTransformed pareto_rank_transform(const Eigen::MatrixXd& values);

/// Log-ratio rows over the exceedance set I_u = {i : xhat(i,u) > n/k}.
struct LogDifferences {
  Eigen::MatrixXd deltas;    // one row per exceedance, one column per other node
  std::vector<int> columns;  // source column indices, in xhat order
  int exceedances = 0;
};
LogDifferences log_differences(const RankTransformed& xh, int u_col, int k);

/// Sample mean and covariance of the rows, covariance normalized by the row
/// count (not row count minus one).
std::pair<Eigen::VectorXd, Eigen::MatrixXd> empirical_mu_sigma(
    const Eigen::MatrixXd& deltas);

/// Per observed node, the set of nearby observed nodes whose joint
/// log-ratios enter the moment and likelihood objectives.
struct NeighborhoodPlan {
  std::map<int, NodeSet> w;
  int radius = 0;  // realized radius after any growth
};

/// W_u = observed nodes within the given graph distance of u, grown uniformly
/// until the induced path-sum system reaches full column rank.
NeighborhoodPlan default_neighborhoods(const Tree& tree,
                                       const NodeSet& observed, int radius);

/// True iff the path sums observable through the plan's neighborhoods pin
/// down every edge parameter.
bool plan_identifies(const Tree& tree, const NeighborhoodPlan& plan);

std::vector<NodePair> observable_pairs(const NodeSet& observed);

inline constexpr double kThetaFloor = 1e-4;

struct EstimateResult {
  Eigen::VectorXd theta_hat;
  std::string estimator;
  int k = 0;
  double objective_value = 0.0;
  std::map<int, int> exceedance_counts;
  std::string convergence = "converged";
  int dropped_rows = 0;
};

/// Moment estimator: nonnegative least squares in the squared edge
/// parameters against the per-neighborhood empirical covariance matrices.
EstimateResult mme(const ObservedData& data, const Tree& tree,
                   const NodeSet& observed, int k,
                   const NeighborhoodPlan& plan);

/// Same solve from externally supplied covariance estimates (keyed by base
/// node, rows/cols over W_u \ u ascending).
Eigen::VectorXd mme_from_covariances(
    const Tree& tree, const NeighborhoodPlan& plan,
    const std::map<int, Eigen::MatrixXd>& sigma_hat,
    double* objective = nullptr);

/// Gaussian sufficient statistics of the log-ratio rows for one base node.
struct GaussianStats {
  int count = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // divisor = count
};

/// Composite likelihood estimator: quasi-Newton ascent in log-parameters of
/// the pooled Gaussian log-likelihood of the log-ratio rows.
EstimateResult cle(const ObservedData& data, const Tree& tree,
                   const NodeSet& observed, int k, const NeighborhoodPlan& plan,
                   const Eigen::VectorXd& init);

/// Same fit from externally supplied sufficient statistics.
EstimateResult cle_from_stats(const Tree& tree, const NeighborhoodPlan& plan,
                              const std::map<int, GaussianStats>& stats,
                              const Eigen::VectorXd& init);

/// Pairwise extremal coefficient estimator: invert each empirical pair
/// coefficient to a path sum, solve nonnegatively, then polish against the
/// coefficient-scale objective.
EstimateResult ece(const ObservedData& data, const Tree& tree,
                   const NodeSet& observed, int k,
                   const std::vector<NodePair>& pairs);

/// Same fit from externally supplied pair coefficients (aligned with pairs).
Eigen::VectorXd ece_from_coefficients(const Tree& tree,
                                      const std::vector<NodePair>& pairs,
                                      const Eigen::VectorXd& l_hat,
                                      double* objective = nullptr,
                                      bool* converged = nullptr);

/// Counting estimator of the extremal coefficient of the node set J.
double empirical_extremal_coefficient(const ObservedData& data,
                                      const NodeSet& j_set, int k);

/// Counting estimator of the Pickands dependence function at w.
double empirical_pickands(const ObservedData& data, int u, int v, double w,
                          int k);

}  // namespace tailtree
