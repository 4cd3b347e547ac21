#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>

#include "tailtree/tree.hpp"

namespace tailtree {

/// One strictly positive dependence parameter per edge, in edge order.
Eigen::VectorXd validate_theta(const Tree& tree, Eigen::VectorXd theta);

/// Tree-structured tail dependence model: tree plus edge parameters.
class HRTreeModel {
 public:
  HRTreeModel(Tree tree, Eigen::VectorXd theta);

  const Tree& tree() const { return tree_; }
  const Eigen::VectorXd& theta() const { return theta_; }

  /// Sum of squared edge parameters along the path from u to v.
  double path_sum(int u, int v) const;

 private:
  Tree tree_;
  Eigen::VectorXd theta_;
};

/// d x d matrix of pairwise dependence entries: one quarter of the path sum,
/// zero diagonal.
Eigen::MatrixXd lambda_matrix(const HRTreeModel& model);

struct MuSigma {
  int base = 0;                 // conditioning node u
  std::vector<int> order;       // nodes of W \ u, ascending, row/col order
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
};

/// Mean vector and covariance matrix of the limiting log-ratio distribution
/// conditioned on an exceedance at u, over the nodes W \ u.
MuSigma mu_sigma(const HRTreeModel& model, const NodeSet& w, int u);

/// The matrix with entries 2(lambda_iu + lambda_ju - lambda_ij) over
/// W \ u (ascending order), taking lambda as entries of a lambda_matrix().
Eigen::MatrixXd gamma_matrix(const Eigen::MatrixXd& lambda, const NodeSet& w,
                             int u);

/// Stable tail dependence function of the subvector indexed by U at x >= 0.
/// Coordinates with x_u = 0 drop out. Gaussian orthant factors are evaluated
/// to the requested tolerance.
double stdf(const HRTreeModel& model, const NodeSet& u_set,
            const Eigen::VectorXd& x, double tol = 1e-5);

/// stdf at all-ones over J; in [1, |J|]. Pairs use the closed form
/// 2*Phi(sqrt(p)/2).
double extremal_coefficient(const HRTreeModel& model, const NodeSet& j_set,
                            double tol = 1e-5);

/// Bivariate Pickands dependence function A(w) on [0,1]; A(0) = A(1) = 1.
double pickands(const HRTreeModel& model, int u, int v, double w);

/// Upper tail dependence coefficient chi = 2 - l_uv(1,1), in [0,1].
double tail_dep_coefficient(const HRTreeModel& model, int u, int v);

/// Model file: tree format plus a "theta:" line of d-1 decimals in edge
/// order.
struct ModelFile {
  HRTreeModel model;
  NodeSet latent;
};

ModelFile read_model_file(std::istream& in);
ModelFile read_model_file(const std::string& path);
std::string format_model_file(const HRTreeModel& model, const NodeSet& latent);
void write_model_file(const std::string& path, const HRTreeModel& model,
                      const NodeSet& latent);

}  // namespace tailtree
