#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "tailtree/model.hpp"

namespace tailtree {

/// Conditional distribution function of one variable given its neighbor in
/// the bivariate pair model with dependence parameter theta; both arguments
/// strictly positive.
double hr_pair_conditional_cdf(double x_j, double x_v, double theta);

/// Solves hr_pair_conditional_cdf(x, x_v, theta) = u01 for x, to within
/// 1e-10 in cdf value. Bracketed bisection refined by secant steps.
double sample_conditional(double x_v, double theta, double u01);

/// n rows from the Markov-tree model: the root is unit-Frechet, every edge
/// directed away from the root is sampled through the conditional cdf.
/// Column order is node order 1..d. Bit-reproducible for a given seed, with
/// one stream per (row, edge).
Eigen::MatrixXd sample_markov_tree(const HRTreeModel& model, int root, int n,
                                   std::uint64_t seed);

/// Adds iid centered normal noise with the given standard deviation to every
/// cell; sigma = 0 returns the input unchanged.
Eigen::MatrixXd add_noise(const Eigen::MatrixXd& samples, double sigma,
                          std::uint64_t seed);

struct TailTreeSample {
  int base = 0;
  std::vector<int> order;  // nodes v != base, ascending, column order
  Eigen::MatrixXd xi;      // multiplicative limits, one row per draw
};

/// Exact draws of the multiplicative tail limit seen from node u: every edge
/// carries an independent lognormal increment with log-mean -theta^2/2 and
/// log-variance theta^2, multiplied along paths.
TailTreeSample sample_tail_tree(const HRTreeModel& model, int u, int n,
                                std::uint64_t seed);

}  // namespace tailtree
