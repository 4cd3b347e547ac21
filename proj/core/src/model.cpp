#include "tailtree/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "tailtree/mvn.hpp"
#include "tailtree/normal.hpp"

namespace tailtree {

Eigen::VectorXd validate_theta(const Tree& tree, Eigen::VectorXd theta) {
  if (theta.size() != tree.edge_count())
    throw DimensionMismatch("theta must have one entry per edge (" +
                            std::to_string(tree.edge_count()) + "), got " +
                            std::to_string(theta.size()));
  for (Eigen::Index e = 0; e < theta.size(); ++e)
    if (!(theta(e) > 0.0) || !std::isfinite(theta(e)))
      throw NonPositiveInput("theta[" + std::to_string(e) +
                             "] must be strictly positive and finite");
  return theta;
}

HRTreeModel::HRTreeModel(Tree tree, Eigen::VectorXd theta)
    : tree_(std::move(tree)), theta_(validate_theta(tree_, std::move(theta))) {}

double HRTreeModel::path_sum(int u, int v) const {
  if (u == v) {
    tree_.require_node(u);
    return 0.0;
  }
  double acc = 0.0;
  for (int e : tree_.path_edge_indices(u, v)) acc += theta_(e) * theta_(e);
  return acc;
}

Eigen::MatrixXd lambda_matrix(const HRTreeModel& model) {
  const int d = model.tree().node_count();
  Eigen::MatrixXd lambda = Eigen::MatrixXd::Zero(d, d);
  for (int i = 1; i <= d; ++i)
    for (int j = i + 1; j <= d; ++j)
      lambda(i - 1, j - 1) = lambda(j - 1, i - 1) = 0.25 * model.path_sum(i, j);
  return lambda;
}

namespace {

std::vector<int> without(const NodeSet& w, int u) {
  std::vector<int> order;
  for (int v : w.ids())
    if (v != u) order.push_back(v);
  return order;
}

}  // namespace

MuSigma mu_sigma(const HRTreeModel& model, const NodeSet& w, int u) {
  model.tree().require_node(u);
  if (!w.contains(u)) throw NodeOutOfRange("base node must belong to W");
  MuSigma out;
  out.base = u;
  out.order = without(w, u);
  const int p = static_cast<int>(out.order.size());
  out.mu.resize(p);
  out.sigma.resize(p, p);

  // edge indicator of the path from u to each node of W \ u
  const int ne = model.tree().edge_count();
  std::vector<std::vector<char>> mask(static_cast<std::size_t>(p),
                                      std::vector<char>(static_cast<std::size_t>(ne), 0));
  for (int i = 0; i < p; ++i)
    for (int e : model.tree().path_edge_indices(u, out.order[static_cast<std::size_t>(i)]))
      mask[static_cast<std::size_t>(i)][static_cast<std::size_t>(e)] = 1;

  const Eigen::VectorXd theta_sq = model.theta().array().square();
  for (int i = 0; i < p; ++i) {
    out.mu(i) = -0.5 * model.path_sum(u, out.order[static_cast<std::size_t>(i)]);
    for (int j = i; j < p; ++j) {
      double acc = 0.0;
      for (int e = 0; e < ne; ++e)
        if (mask[static_cast<std::size_t>(i)][static_cast<std::size_t>(e)] &&
            mask[static_cast<std::size_t>(j)][static_cast<std::size_t>(e)])
          acc += theta_sq(e);
      out.sigma(i, j) = out.sigma(j, i) = acc;
    }
  }
  return out;
}

Eigen::MatrixXd gamma_matrix(const Eigen::MatrixXd& lambda, const NodeSet& w,
                             int u) {
  if (!w.contains(u)) throw NodeOutOfRange("base node must belong to W");
  for (int v : w.ids())
    if (v < 1 || v > lambda.rows())
      throw NodeOutOfRange("node " + std::to_string(v) + " outside lambda matrix");
  const auto order = without(w, u);
  const int p = static_cast<int>(order.size());
  Eigen::MatrixXd gamma(p, p);
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < p; ++j) {
      const int a = order[static_cast<std::size_t>(i)] - 1;
      const int b = order[static_cast<std::size_t>(j)] - 1;
      gamma(i, j) = 2.0 * (lambda(a, u - 1) + lambda(b, u - 1) - lambda(a, b));
    }
  return gamma;
}

double stdf(const HRTreeModel& model, const NodeSet& u_set,
            const Eigen::VectorXd& x, double tol) {
  const auto& ids = u_set.ids();
  if (static_cast<Eigen::Index>(ids.size()) != x.size())
    throw DimensionMismatch("stdf: x must match the node set");
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!(x(i) >= 0.0))
      throw NonPositiveInput("stdf arguments must be nonnegative");

  // terms with a zero coordinate vanish; restrict to the support
  std::vector<int> support;
  std::vector<double> xs;
  for (std::size_t i = 0; i < ids.size(); ++i)
    if (x(static_cast<Eigen::Index>(i)) > 0.0) {
      support.push_back(ids[i]);
      xs.push_back(x(static_cast<Eigen::Index>(i)));
    }
  if (support.empty()) throw AllZeroInput("stdf needs some positive coordinate");
  if (support.size() == 1) return xs[0];

  const int m = static_cast<int>(support.size());
  const double total = std::accumulate(xs.begin(), xs.end(), 0.0);
  const MvnOptions options{tol / total, 1'000'000};
  double acc = 0.0;
  for (int i = 0; i < m; ++i) {
    const int u = support[static_cast<std::size_t>(i)];
    const auto ms = mu_sigma(model, NodeSet(support), u);
    Eigen::VectorXd upper(m - 1);
    for (int j = 0; j < m - 1; ++j) {
      const int v = ms.order[static_cast<std::size_t>(j)];
      const auto it = std::find(support.begin(), support.end(), v);
      const double xv = xs[static_cast<std::size_t>(it - support.begin())];
      // upper limit ln(x_u/x_v) + p_uv/2 against covariance sigma
      upper(j) = std::log(xs[static_cast<std::size_t>(i)] / xv) +
                 0.5 * model.path_sum(u, v);
    }
    acc += xs[static_cast<std::size_t>(i)] *
           mvn_cdf(upper, Eigen::VectorXd::Zero(m - 1), ms.sigma, options).value;
  }
  return acc;
}

double extremal_coefficient(const HRTreeModel& model, const NodeSet& j_set,
                            double tol) {
  if (j_set.size() < 2)
    throw DimensionMismatch("extremal coefficient needs at least two nodes");
  if (j_set.size() == 2) {
    const double p = model.path_sum(j_set.ids()[0], j_set.ids()[1]);
    return 2.0 * norm_cdf(0.5 * std::sqrt(p));
  }
  return stdf(model, j_set, Eigen::VectorXd::Ones(j_set.size()), tol);
}

double pickands(const HRTreeModel& model, int u, int v, double w) {
  if (u == v) throw NodeOutOfRange("pickands needs two distinct nodes");
  if (w < 0.0 || w > 1.0)
    throw NonPositiveInput("pickands argument must lie in [0,1]");
  if (w == 0.0 || w == 1.0) return 1.0;  // continuity extension
  const double p = model.path_sum(u, v);
  const double s = std::sqrt(p);
  return (1.0 - w) * norm_cdf((std::log((1.0 - w) / w) + 0.5 * p) / s) +
         w * norm_cdf((std::log(w / (1.0 - w)) + 0.5 * p) / s);
}

double tail_dep_coefficient(const HRTreeModel& model, int u, int v) {
  if (u == v) throw NodeOutOfRange("tail dependence needs two distinct nodes");
  const double p = model.path_sum(u, v);
  return 2.0 * (1.0 - norm_cdf(0.5 * std::sqrt(p)));
}

ModelFile read_model_file(std::istream& in) {
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  std::istringstream tree_part(text);
  TreeFile tf = read_tree_file(tree_part);

  const auto pos = text.find("theta:");
  if (pos == std::string::npos)
    throw ParseError("model file is missing a theta: line");
  std::istringstream ss(text.substr(pos + 6));
  std::vector<double> values;
  double v;
  while (ss >> v) values.push_back(v);
  Eigen::VectorXd theta =
      Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  return ModelFile{HRTreeModel(tf.tree, std::move(theta)), tf.latent};
}

ModelFile read_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model file: " + path);
  return read_model_file(in);
}

std::string format_model_file(const HRTreeModel& model, const NodeSet& latent) {
  std::ostringstream out;
  out << format_tree_file(model.tree(), latent);
  out << "theta:";
  out.precision(17);
  for (Eigen::Index e = 0; e < model.theta().size(); ++e)
    out << " " << model.theta()(e);
  out << "\n";
  return out.str();
}

void write_model_file(const std::string& path, const HRTreeModel& model,
                      const NodeSet& latent) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write model file: " + path);
  out << format_model_file(model, latent);
}

}  // namespace tailtree
