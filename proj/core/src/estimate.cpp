#include "tailtree/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <set>

#include "tailtree/mvn.hpp"
#include "tailtree/normal.hpp"
#include "tailtree/solvers.hpp"

namespace tailtree {

int ObservedData::column_of(int node) const {
  const auto it = std::find(nodes.begin(), nodes.end(), node);
  if (it == nodes.end())
    throw NodeOutOfRange("node " + std::to_string(node) + " has no data column");
  return static_cast<int>(it - nodes.begin());
}

CompleteCases complete_cases(const ObservedData& data,
                             const std::vector<int>& nodes) {
  CompleteCases out;
  out.nodes = nodes;
  std::vector<int> cols;
  cols.reserve(nodes.size());
  for (int v : nodes) cols.push_back(data.column_of(v));
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < data.values.rows(); ++i) {
    bool ok = true;
    for (int c : cols)
      if (std::isnan(data.values(i, c))) {
        ok = false;
        break;
      }
    if (ok) keep.push_back(i);
  }
  out.dropped = static_cast<int>(data.values.rows()) - static_cast<int>(keep.size());
  out.values.resize(static_cast<Eigen::Index>(keep.size()),
                    static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < keep.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      out.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          data.values(keep[i], cols[j]);
  return out;
}

Eigen::VectorXd average_ranks(const Eigen::VectorXd& column) {
  const Eigen::Index n = column.size();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    return column(a) < column(b);
  });
  Eigen::VectorXd ranks(n);
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && column(idx[static_cast<std::size_t>(j + 1)]) ==
                            column(idx[static_cast<std::size_t>(i)]))
      ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index t = i; t <= j; ++t)
      ranks(idx[static_cast<std::size_t>(t)]) = avg;
    i = j + 1;
  }
  if (n >= 2 && column(idx.front()) == column(idx.back()))
    throw DegenerateColumn("column is constant");
  return ranks;
}

RankTransformed pareto_rank_transform(const Eigen::MatrixXd& values) {
  const Eigen::Index n = values.rows();
  if (n < 2) throw TooFewRows("rank transform needs at least 2 rows");
  RankTransformed out;
  out.n = static_cast<int>(n);
  out.ranks.resize(n, values.cols());
  out.xhat.resize(n, values.cols());
  for (Eigen::Index c = 0; c < values.cols(); ++c) {
    out.ranks.col(c) = average_ranks(values.col(c));
    out.xhat.col(c) = (static_cast<double>(n) + 1.0) /
                      ((static_cast<double>(n) + 1.0) - out.ranks.col(c).array());
  }
  return out;
}

LogDifferences log_differences(const RankTransformed& xh, int u_col, int k) {
  const Eigen::Index n = xh.xhat.rows();
  if (k < 1 || k > xh.n) throw DimensionMismatch("k must lie in [1, n]");
  if (u_col < 0 || u_col >= xh.xhat.cols())
    throw NodeOutOfRange("column index out of range");
  const double threshold = static_cast<double>(xh.n) / static_cast<double>(k);
  std::vector<Eigen::Index> rows;
  for (Eigen::Index i = 0; i < n; ++i)
    if (xh.xhat(i, u_col) > threshold) rows.push_back(i);
  if (rows.empty()) throw EmptyExceedanceSet("no exceedances at node column " +
                                             std::to_string(u_col));
  LogDifferences out;
  out.exceedances = static_cast<int>(rows.size());
  for (Eigen::Index c = 0; c < xh.xhat.cols(); ++c)
    if (c != u_col) out.columns.push_back(static_cast<int>(c));
  out.deltas.resize(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(out.columns.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double lu = std::log(xh.xhat(rows[i], u_col));
    for (std::size_t j = 0; j < out.columns.size(); ++j)
      out.deltas(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          std::log(xh.xhat(rows[i], out.columns[j])) - lu;
  }
  return out;
}

std::pair<Eigen::VectorXd, Eigen::MatrixXd> empirical_mu_sigma(
    const Eigen::MatrixXd& deltas) {
  const Eigen::Index m = deltas.rows();
  if (m < 2) throw TooFewRows("need at least two rows");
  const Eigen::VectorXd mean = deltas.colwise().mean();
  const Eigen::MatrixXd centered = deltas.rowwise() - mean.transpose();
  const Eigen::MatrixXd cov =
      centered.transpose() * centered / static_cast<double>(m);
  return {mean, cov};
}

std::vector<NodePair> observable_pairs(const NodeSet& observed) {
  std::vector<NodePair> pairs;
  const auto& ids = observed.ids();
  for (std::size_t i = 0; i < ids.size(); ++i)
    for (std::size_t j = i + 1; j < ids.size(); ++j)
      pairs.emplace_back(ids[i], ids[j]);
  return pairs;
}

namespace {

std::vector<NodePair> plan_pairs(const NeighborhoodPlan& plan) {
  std::set<NodePair> uniq;
  for (const auto& [u, w] : plan.w) {
    const auto& ids = w.ids();
    for (std::size_t i = 0; i < ids.size(); ++i)
      for (std::size_t j = i + 1; j < ids.size(); ++j)
        uniq.emplace(ids[i], ids[j]);
  }
  return {uniq.begin(), uniq.end()};
}

bool pairs_identify(const Tree& tree, const std::vector<NodePair>& pairs) {
  if (static_cast<int>(pairs.size()) < tree.edge_count()) return false;
  const auto coeff = path_sum_matrix(tree, pairs);
  std::vector<std::vector<long long>> m;
  m.reserve(coeff.matrix.size());
  for (const auto& row : coeff.matrix) m.emplace_back(row.begin(), row.end());
  return exact_integer_rank(std::move(m)) == tree.edge_count();
}

}  // namespace

bool plan_identifies(const Tree& tree, const NeighborhoodPlan& plan) {
  return pairs_identify(tree, plan_pairs(plan));
}

NeighborhoodPlan default_neighborhoods(const Tree& tree,
                                       const NodeSet& observed, int radius) {
  const auto degree = check_identifiability_degree(tree, observed);
  if (!degree.identifiable)
    throw NotIdentifiable("latent node of degree < 3 present");
  int max_dist = 0;
  for (int a : observed.ids())
    for (int b : observed.ids())
      max_dist = std::max(max_dist, tree.distance(a, b));
  radius = std::max(radius, 1);
  for (int r = radius; r <= max_dist; ++r) {
    NeighborhoodPlan plan;
    plan.radius = r;
    for (int u : observed.ids()) {
      std::vector<int> members;
      for (int a : observed.ids())
        if (tree.distance(u, a) <= r) members.push_back(a);
      plan.w.emplace(u, NodeSet(std::move(members)));
    }
    if (plan_identifies(tree, plan)) return plan;
  }
  throw NotIdentifiable("no neighborhood radius yields an identifiable system");
}

namespace {

struct MomentSystem {
  Eigen::MatrixXd a;  // rows: weighted covariance entries; cols: edges
  Eigen::VectorXd b;
};

/// Rows of the squared-parameter system: covariance entry (i,j) seen from u
/// loads the edges shared by the paths u->i and u->j.
MomentSystem build_moment_system(const Tree& tree, const NeighborhoodPlan& plan,
                                 const std::map<int, Eigen::MatrixXd>& sigma_hat) {
  const int ne = tree.edge_count();
  std::vector<std::vector<double>> rows;
  std::vector<double> rhs;
  for (const auto& [u, w] : plan.w) {
    std::vector<int> order;
    for (int v : w.ids())
      if (v != u) order.push_back(v);
    if (order.empty()) continue;
    const auto it = sigma_hat.find(u);
    if (it == sigma_hat.end()) continue;
    const Eigen::MatrixXd& sh = it->second;
    if (sh.rows() != static_cast<Eigen::Index>(order.size()))
      throw DimensionMismatch("covariance estimate size mismatch at node " +
                              std::to_string(u));
    std::vector<std::vector<char>> mask(order.size(),
                                        std::vector<char>(static_cast<std::size_t>(ne), 0));
    for (std::size_t i = 0; i < order.size(); ++i)
      for (int e : tree.path_edge_indices(u, order[i]))
        mask[i][static_cast<std::size_t>(e)] = 1;
    for (std::size_t i = 0; i < order.size(); ++i) {
      for (std::size_t j = i; j < order.size(); ++j) {
        // off-diagonal entries appear twice in the Frobenius norm
        const double weight = (i == j) ? 1.0 : std::numbers::sqrt2;
        std::vector<double> row(static_cast<std::size_t>(ne), 0.0);
        for (int e = 0; e < ne; ++e)
          if (mask[i][static_cast<std::size_t>(e)] && mask[j][static_cast<std::size_t>(e)])
            row[static_cast<std::size_t>(e)] = weight;
        rows.push_back(std::move(row));
        rhs.push_back(weight * sh(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
      }
    }
  }
  MomentSystem sys;
  sys.a.resize(static_cast<Eigen::Index>(rows.size()), ne);
  sys.b.resize(static_cast<Eigen::Index>(rhs.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    sys.b(static_cast<Eigen::Index>(r)) = rhs[r];
    for (int e = 0; e < ne; ++e)
      sys.a(static_cast<Eigen::Index>(r), e) = rows[r][static_cast<std::size_t>(e)];
  }
  return sys;
}

Eigen::VectorXd floor_theta(Eigen::VectorXd theta) {
  for (Eigen::Index e = 0; e < theta.size(); ++e)
    theta(e) = std::max(theta(e), kThetaFloor);
  return theta;
}

}  // namespace

Eigen::VectorXd mme_from_covariances(
    const Tree& tree, const NeighborhoodPlan& plan,
    const std::map<int, Eigen::MatrixXd>& sigma_hat, double* objective) {
  if (!plan_identifies(tree, plan))
    throw NotIdentifiable("neighborhood plan does not identify the parameters");
  const MomentSystem sys = build_moment_system(tree, plan, sigma_hat);
  const Eigen::VectorXd x = nnls(sys.a, sys.b);
  Eigen::VectorXd theta = floor_theta(x.array().max(0.0).sqrt().matrix());
  if (objective) {
    const Eigen::VectorXd theta_sq = theta.array().square();
    *objective = (sys.a * theta_sq - sys.b).squaredNorm();
  }
  return theta;
}

EstimateResult mme(const ObservedData& data, const Tree& tree,
                   const NodeSet& observed, int k,
                   const NeighborhoodPlan& plan) {
  const CompleteCases cc = complete_cases(data, observed.ids());
  const RankTransformed xh = pareto_rank_transform(cc.values);
  EstimateResult result;
  result.estimator = "mme";
  result.k = k;
  result.dropped_rows = cc.dropped;

  std::map<int, Eigen::MatrixXd> sigma_hat;
  for (const auto& [u, w] : plan.w) {
    if (w.size() < 2) continue;
    const int u_col = static_cast<int>(
        std::find(cc.nodes.begin(), cc.nodes.end(), u) - cc.nodes.begin());
    const LogDifferences ld = log_differences(xh, u_col, k);
    result.exceedance_counts[u] = ld.exceedances;
    // restrict to the neighborhood columns
    std::vector<Eigen::Index> take;
    for (std::size_t j = 0; j < ld.columns.size(); ++j)
      if (w.contains(cc.nodes[static_cast<std::size_t>(ld.columns[j])]))
        take.push_back(static_cast<Eigen::Index>(j));
    Eigen::MatrixXd sub(ld.deltas.rows(), static_cast<Eigen::Index>(take.size()));
    for (std::size_t j = 0; j < take.size(); ++j)
      sub.col(static_cast<Eigen::Index>(j)) = ld.deltas.col(take[j]);
    sigma_hat.emplace(u, empirical_mu_sigma(sub).second);
  }
  result.theta_hat =
      mme_from_covariances(tree, plan, sigma_hat, &result.objective_value);
  return result;
}

namespace {

struct CleTerm {
  int count = 0;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  std::vector<int> order;                // nodes of W_u \ u
  std::vector<std::vector<char>> mask;   // path indicator per node
  std::vector<double> mu_sign;           // always -1/2 per path sum
};

double cle_negloglik(const std::vector<CleTerm>& terms,
                     const Eigen::VectorXd& theta_sq) {
  constexpr double log_2pi = 1.8378770664093454836;
  double total = 0.0;
  for (const auto& term : terms) {
    const int p = static_cast<int>(term.order.size());
    Eigen::MatrixXd sigma(p, p);
    Eigen::VectorXd mu(p);
    for (int i = 0; i < p; ++i) {
      double pu = 0.0;
      for (Eigen::Index e = 0; e < theta_sq.size(); ++e)
        if (term.mask[static_cast<std::size_t>(i)][static_cast<std::size_t>(e)])
          pu += theta_sq(e);
      mu(i) = -0.5 * pu;
      for (int j = i; j < p; ++j) {
        double acc = 0.0;
        for (Eigen::Index e = 0; e < theta_sq.size(); ++e)
          if (term.mask[static_cast<std::size_t>(i)][static_cast<std::size_t>(e)] &&
              term.mask[static_cast<std::size_t>(j)][static_cast<std::size_t>(e)])
            acc += theta_sq(e);
        sigma(i, j) = sigma(j, i) = acc;
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    if (llt.info() != Eigen::Success)
      return std::numeric_limits<double>::infinity();
    const Eigen::MatrixXd l = llt.matrixL();
    const double log_det = 2.0 * l.diagonal().array().log().sum();
    const Eigen::MatrixXd sigma_inv_cov = llt.solve(term.cov);
    const Eigen::VectorXd dev = term.mean - mu;
    const double quad = dev.dot(llt.solve(dev));
    total += 0.5 * term.count *
             (p * log_2pi + log_det + sigma_inv_cov.trace() + quad);
  }
  return total;
}

}  // namespace

EstimateResult cle_from_stats(const Tree& tree, const NeighborhoodPlan& plan,
                              const std::map<int, GaussianStats>& stats,
                              const Eigen::VectorXd& init) {
  validate_theta(tree, init);
  // a coordinate sitting at the floor has a log-scale gradient of order
  // theta^2, invisible to the optimizer; start such coordinates higher
  Eigen::VectorXd start = init.cwiseMax(0.05);
  std::vector<CleTerm> terms;
  for (const auto& [u, w] : plan.w) {
    const auto it = stats.find(u);
    if (it == stats.end() || w.size() < 2) continue;
    CleTerm term;
    term.count = it->second.count;
    term.mean = it->second.mean;
    term.cov = it->second.cov;
    for (int v : w.ids())
      if (v != u) term.order.push_back(v);
    term.mask.assign(term.order.size(),
                     std::vector<char>(static_cast<std::size_t>(tree.edge_count()), 0));
    for (std::size_t i = 0; i < term.order.size(); ++i)
      for (int e : tree.path_edge_indices(u, term.order[i]))
        term.mask[i][static_cast<std::size_t>(e)] = 1;
    terms.push_back(std::move(term));
  }

  auto objective = [&](const Eigen::VectorXd& z) {
    const Eigen::VectorXd theta_sq = (2.0 * z.array()).exp();
    return cle_negloglik(terms, theta_sq);
  };
  const MinimizeResult fit =
      bfgs_minimize(objective, start.array().log().matrix());
  if (!std::isfinite(fit.value))
    throw OptimizerDivergence("composite likelihood diverged");

  EstimateResult result;
  result.estimator = "cle";
  result.theta_hat = floor_theta(fit.x.array().exp().matrix());
  result.objective_value = -fit.value;  // maximized composite log-likelihood
  result.convergence = fit.converged ? "converged" : "max_iterations";
  return result;
}

EstimateResult cle(const ObservedData& data, const Tree& tree,
                   const NodeSet& observed, int k, const NeighborhoodPlan& plan,
                   const Eigen::VectorXd& init) {
  const CompleteCases cc = complete_cases(data, observed.ids());
  const RankTransformed xh = pareto_rank_transform(cc.values);
  std::map<int, GaussianStats> stats;
  std::map<int, int> exceedances;
  for (const auto& [u, w] : plan.w) {
    if (w.size() < 2) continue;
    const int u_col = static_cast<int>(
        std::find(cc.nodes.begin(), cc.nodes.end(), u) - cc.nodes.begin());
    const LogDifferences ld = log_differences(xh, u_col, k);
    exceedances[u] = ld.exceedances;
    std::vector<Eigen::Index> take;
    for (std::size_t j = 0; j < ld.columns.size(); ++j)
      if (w.contains(cc.nodes[static_cast<std::size_t>(ld.columns[j])]))
        take.push_back(static_cast<Eigen::Index>(j));
    Eigen::MatrixXd sub(ld.deltas.rows(), static_cast<Eigen::Index>(take.size()));
    for (std::size_t j = 0; j < take.size(); ++j)
      sub.col(static_cast<Eigen::Index>(j)) = ld.deltas.col(take[j]);
    auto [mean, cov] = empirical_mu_sigma(sub);
    stats.emplace(u, GaussianStats{ld.exceedances, std::move(mean), std::move(cov)});
  }
  EstimateResult result = cle_from_stats(tree, plan, stats, init);
  result.k = k;
  result.dropped_rows = cc.dropped;
  result.exceedance_counts = std::move(exceedances);
  return result;
}

namespace {

double empirical_pair_coefficient(const Eigen::MatrixXd& ranks, int col_a,
                                  int col_b, int k) {
  const Eigen::Index n = ranks.rows();
  const double nn = static_cast<double>(n);
  const double threshold = nn - static_cast<double>(k) + 0.5;
  int count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double fa = nn * ranks(i, col_a) / (nn + 1.0);
    const double fb = nn * ranks(i, col_b) / (nn + 1.0);
    if (std::max(fa, fb) > threshold) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(k);
}

}  // namespace

Eigen::VectorXd ece_from_coefficients(const Tree& tree,
                                      const std::vector<NodePair>& pairs,
                                      const Eigen::VectorXd& l_hat,
                                      double* objective, bool* converged) {
  if (static_cast<Eigen::Index>(pairs.size()) != l_hat.size())
    throw DimensionMismatch("one coefficient per pair required");
  if (!pairs_identify(tree, pairs))
    throw RankDeficientPairs("pair set does not identify the parameters");

  const int ne = tree.edge_count();
  const int q = static_cast<int>(pairs.size());
  Eigen::MatrixXd incidence = Eigen::MatrixXd::Zero(q, ne);
  for (int r = 0; r < q; ++r)
    for (int e : tree.path_edge_indices(pairs[static_cast<std::size_t>(r)].first,
                                        pairs[static_cast<std::size_t>(r)].second))
      incidence(r, e) = 1.0;

  // invert each coefficient to a path sum, then solve nonnegatively
  Eigen::VectorXd p_hat(q);
  for (int r = 0; r < q; ++r) {
    const double l = std::clamp(l_hat(r), 1.0 + 1e-12, 2.0 - 1e-6);
    const double z = norm_quantile(0.5 * l);
    p_hat(r) = 4.0 * z * z;
  }
  Eigen::VectorXd theta0 =
      floor_theta(nnls(incidence, p_hat).array().max(0.0).sqrt().matrix());

  // polish on the coefficient scale, in log-parameters to stay positive
  auto path_sums = [&](const Eigen::VectorXd& theta) {
    return (incidence * theta.array().square().matrix()).eval();
  };
  auto residuals = [&](const Eigen::VectorXd& z) {
    const Eigen::VectorXd theta = z.array().exp();
    const Eigen::VectorXd p = path_sums(theta);
    Eigen::VectorXd r(q);
    for (int i = 0; i < q; ++i)
      r(i) = 2.0 * norm_cdf(0.5 * std::sqrt(p(i))) - l_hat(i);
    return r;
  };
  auto jacobian = [&](const Eigen::VectorXd& z) {
    const Eigen::VectorXd theta = z.array().exp();
    const Eigen::VectorXd p = path_sums(theta);
    Eigen::MatrixXd j(q, ne);
    for (int i = 0; i < q; ++i) {
      const double sp = std::sqrt(p(i));
      const double factor = sp > 0.0 ? norm_pdf(0.5 * sp) / sp : 0.0;
      for (int e = 0; e < ne; ++e)
        j(i, e) = incidence(i, e) * factor * theta(e) * theta(e);
    }
    return j;
  };
  const LeastSquaresResult fit = levenberg_marquardt(
      residuals, jacobian, theta0.array().log().matrix());
  if (objective) *objective = fit.objective;
  if (converged) *converged = fit.converged;
  return floor_theta(fit.x.array().exp().matrix());
}

EstimateResult ece(const ObservedData& data, const Tree& tree,
                   const NodeSet& observed, int k,
                   const std::vector<NodePair>& pairs) {
  for (const auto& [a, b] : pairs)
    if (!observed.contains(a) || !observed.contains(b))
      throw RankDeficientPairs("pair touches an unobserved node");
  std::vector<int> used;
  for (const auto& [a, b] : pairs) {
    used.push_back(a);
    used.push_back(b);
  }
  std::sort(used.begin(), used.end());
  used.erase(std::unique(used.begin(), used.end()), used.end());

  const CompleteCases cc = complete_cases(data, used);
  if (cc.values.rows() < 2) throw EmptyExceedanceSet("not enough data rows");
  if (k < 1 || k > cc.values.rows())
    throw DimensionMismatch("k must lie in [1, n]");
  const RankTransformed xh = pareto_rank_transform(cc.values);

  Eigen::VectorXd l_hat(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t r = 0; r < pairs.size(); ++r) {
    const int ca = static_cast<int>(
        std::find(cc.nodes.begin(), cc.nodes.end(), pairs[r].first) -
        cc.nodes.begin());
    const int cb = static_cast<int>(
        std::find(cc.nodes.begin(), cc.nodes.end(), pairs[r].second) -
        cc.nodes.begin());
    l_hat(static_cast<Eigen::Index>(r)) =
        empirical_pair_coefficient(xh.ranks, ca, cb, k);
  }

  EstimateResult result;
  result.estimator = "ece";
  result.k = k;
  result.dropped_rows = cc.dropped;
  bool converged = true;
  result.theta_hat = ece_from_coefficients(tree, pairs, l_hat,
                                           &result.objective_value, &converged);
  result.convergence = converged ? "converged" : "max_iterations";
  return result;
}

double empirical_extremal_coefficient(const ObservedData& data,
                                      const NodeSet& j_set, int k) {
  if (k < 1) throw DimensionMismatch("k must be positive");
  const CompleteCases cc = complete_cases(data, j_set.ids());
  const Eigen::Index n = cc.values.rows();
  if (n < 2) throw TooFewRows("need at least two complete rows");
  Eigen::MatrixXd ranks(n, cc.values.cols());
  for (Eigen::Index c = 0; c < cc.values.cols(); ++c)
    ranks.col(c) = average_ranks(cc.values.col(c));
  const double nn = static_cast<double>(n);
  const double threshold = nn - static_cast<double>(k) + 0.5;
  int count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double best = 0.0;
    for (Eigen::Index c = 0; c < ranks.cols(); ++c)
      best = std::max(best, nn * ranks(i, c) / (nn + 1.0));
    if (best > threshold) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(k);
}

double empirical_pickands(const ObservedData& data, int u, int v, double w,
                          int k) {
  if (w < 0.0 || w > 1.0) throw NonPositiveInput("w must lie in [0,1]");
  if (k < 1) throw DimensionMismatch("k must be positive");
  const CompleteCases cc = complete_cases(data, {u, v});
  const Eigen::Index n = cc.values.rows();
  if (n < 2) throw TooFewRows("need at least two complete rows");
  const Eigen::VectorXd ru = average_ranks(cc.values.col(0));
  const Eigen::VectorXd rv = average_ranks(cc.values.col(1));
  const double nn = static_cast<double>(n);
  const double tu = nn - static_cast<double>(k) * (1.0 - w) + 0.5;
  const double tv = nn - static_cast<double>(k) * w + 0.5;
  int count = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double fu = nn * ru(i) / (nn + 1.0);
    const double fv = nn * rv(i) / (nn + 1.0);
    if (fu > tu || fv > tv) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(k);
}

}  // namespace tailtree
