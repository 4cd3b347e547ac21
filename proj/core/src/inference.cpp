#include "tailtree/inference.hpp"

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>

#include "tailtree/normal.hpp"
#include "tailtree/rng.hpp"

namespace tailtree {

Eigen::MatrixXd ece_jacobian(const HRTreeModel& model,
                             const std::vector<NodePair>& pairs) {
  const int ne = model.tree().edge_count();
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pairs.size()), ne);
  for (std::size_t r = 0; r < pairs.size(); ++r) {
    const double p = model.path_sum(pairs[r].first, pairs[r].second);
    const double sp = std::sqrt(p);
    const double factor = norm_pdf(0.5 * sp) / sp;
    for (int e : model.tree().path_edge_indices(pairs[r].first, pairs[r].second))
      j(static_cast<Eigen::Index>(r), e) = factor * model.theta()(e);
  }
  return j;
}

double stdf_margin_derivative(const HRTreeModel& model, int u, int v) {
  return norm_cdf(0.5 * std::sqrt(model.path_sum(u, v)));
}

namespace {

ObservedData resample_rows(const ObservedData& data, RngStream& rng) {
  ObservedData out;
  out.nodes = data.nodes;
  const Eigen::Index n = data.values.rows();
  out.values.resize(n, data.values.cols());
  for (Eigen::Index i = 0; i < n; ++i)
    out.values.row(i) =
        data.values.row(static_cast<Eigen::Index>(rng.next_below(static_cast<std::uint64_t>(n))));
  return out;
}

Eigen::VectorXd pair_coefficients(const ObservedData& data,
                                  const std::vector<NodePair>& pairs, int k) {
  Eigen::VectorXd l(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t r = 0; r < pairs.size(); ++r)
    l(static_cast<Eigen::Index>(r)) = empirical_extremal_coefficient(
        data, NodeSet{pairs[r].first, pairs[r].second}, k);
  return l;
}

}  // namespace

Eigen::MatrixXd bootstrap_sigma_l(const ObservedData& data,
                                  const std::vector<NodePair>& pairs, int k,
                                  int b, std::uint64_t seed) {
  if (b < 2) throw DimensionMismatch("need at least two replicates");
  const int q = static_cast<int>(pairs.size());
  Eigen::MatrixXd draws(b, q);
  for (int rep = 0; rep < b; ++rep) {
    RngStream rng(seed, rng_purpose::kBootstrap, static_cast<std::uint64_t>(rep));
    const ObservedData sample = resample_rows(data, rng);
    draws.row(rep) = pair_coefficients(sample, pairs, k).transpose();
  }
  const Eigen::RowVectorXd mean = draws.colwise().mean();
  const Eigen::MatrixXd centered = draws.rowwise() - mean;
  return static_cast<double>(k) * (centered.transpose() * centered) /
         static_cast<double>(b - 1);
}

CIResult ece_asymptotic_ci(const HRTreeModel& model,
                           const std::vector<NodePair>& pairs, int k,
                           double level, const Eigen::MatrixXd& sigma_l) {
  if (sigma_l.rows() != static_cast<Eigen::Index>(pairs.size()) ||
      sigma_l.cols() != static_cast<Eigen::Index>(pairs.size()))
    throw DimensionMismatch("sigma_l must be square over the pair set");
  const Eigen::MatrixXd j = ece_jacobian(model, pairs);
  const Eigen::MatrixXd jtj = j.transpose() * j;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  if (!lu.isInvertible())
    throw SingularJacobian("coefficient Jacobian is rank deficient");
  const Eigen::MatrixXd jtj_inv = lu.inverse();
  const Eigen::MatrixXd m = jtj_inv * j.transpose() * sigma_l * j * jtj_inv;

  CIResult out;
  out.level = level;
  out.method = "ece-asymptotic";
  out.k = k;
  const double z = norm_quantile(0.5 * (1.0 + level));
  for (Eigen::Index e = 0; e < model.theta().size(); ++e) {
    const double half = z * std::sqrt(std::max(m(e, e), 0.0) / static_cast<double>(k));
    out.edges.push_back({model.theta()(e) - half, model.theta()(e) + half});
  }
  return out;
}

double empirical_quantile(std::vector<double> values, double q) {
  if (values.empty()) throw TooFewRows("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return (1.0 - frac) * values[lo] + frac * values[hi];
}

CIResult basic_bootstrap_ci(
    const std::function<Eigen::VectorXd(const ObservedData&)>& refit,
    const ObservedData& data, const Eigen::VectorXd& theta_hat, int b,
    double level, std::uint64_t seed) {
  if (b < 200) throw DimensionMismatch("basic bootstrap needs B >= 200");
  std::vector<Eigen::VectorXd> draws;
  draws.reserve(static_cast<std::size_t>(b));
  int failed = 0;
  for (int rep = 0; rep < b; ++rep) {
    RngStream rng(seed, rng_purpose::kBootstrap, static_cast<std::uint64_t>(rep));
    const ObservedData sample = resample_rows(data, rng);
    try {
      draws.push_back(refit(sample));
    } catch (const Error&) {
      ++failed;
    }
  }
  if (failed > b / 10)
    throw ResampleEstimationFailure(std::to_string(failed) + " of " +
                                    std::to_string(b) +
                                    " bootstrap refits failed");

  CIResult out;
  out.level = level;
  out.method = "basic-bootstrap";
  out.replicates = static_cast<int>(draws.size());
  out.failed_replicates = failed;
  const double alpha = 1.0 - level;
  for (Eigen::Index e = 0; e < theta_hat.size(); ++e) {
    std::vector<double> values;
    values.reserve(draws.size());
    for (const auto& d : draws) values.push_back(d(e));
    const double q_lo = empirical_quantile(values, 0.5 * alpha);
    const double q_hi = empirical_quantile(values, 1.0 - 0.5 * alpha);
    out.edges.push_back({2.0 * theta_hat(e) - q_hi, 2.0 * theta_hat(e) - q_lo});
  }
  return out;
}

Eigen::MatrixXd beta_copula_sample(const Eigen::MatrixXd& ranks, int m,
                                   std::uint64_t seed) {
  const Eigen::Index n = ranks.rows();
  const Eigen::Index p = ranks.cols();
  if (n < 1) throw TooFewRows("rank matrix is empty");
  Eigen::MatrixXd out(m, p);
  for (int row = 0; row < m; ++row) {
    RngStream rng(seed, rng_purpose::kBetaCopula, static_cast<std::uint64_t>(row));
    const Eigen::Index src =
        static_cast<Eigen::Index>(rng.next_below(static_cast<std::uint64_t>(n)));
    for (Eigen::Index v = 0; v < p; ++v) {
      const double r = ranks(src, v);
      const double u = rng.next_unit_open();
      out(row, v) = boost::math::ibeta_inv(r, static_cast<double>(n) + 1.0 - r,
                                           u, detail::fast_policy());
    }
  }
  return out;
}

namespace {

/// Pickands counting estimator on a matrix already reduced to two complete
/// columns.
double pickands_estimate(const Eigen::VectorXd& ranks_u,
                         const Eigen::VectorXd& ranks_v, double w, int k) {
  const double nn = static_cast<double>(ranks_u.size());
  const double tu = nn - static_cast<double>(k) * (1.0 - w) + 0.5;
  const double tv = nn - static_cast<double>(k) * w + 0.5;
  int count = 0;
  for (Eigen::Index i = 0; i < ranks_u.size(); ++i) {
    const double fu = nn * ranks_u(i) / (nn + 1.0);
    const double fv = nn * ranks_v(i) / (nn + 1.0);
    if (fu > tu || fv > tv) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(k);
}

}  // namespace

PickandsBand pickands_bootstrap_band(const ObservedData& data, int u, int v,
                                     int k, const std::vector<double>& w_grid,
                                     int b, double level, std::uint64_t seed) {
  if (b < 500) throw DimensionMismatch("band bootstrap needs B >= 500");
  const CompleteCases cc = complete_cases(data, {u, v});
  const Eigen::Index n = cc.values.rows();
  if (n < 2) throw TooFewRows("need at least two complete rows");
  Eigen::MatrixXd ranks(n, 2);
  ranks.col(0) = average_ranks(cc.values.col(0));
  ranks.col(1) = average_ranks(cc.values.col(1));

  PickandsBand band;
  band.w = w_grid;
  band.replicates = b;
  for (double w : w_grid)
    band.empirical.push_back(pickands_estimate(ranks.col(0), ranks.col(1), w, k));

  // smoothed-copula reference curve from one large sample, threshold kept at
  // the same k/n fraction
  const int m = 10 * static_cast<int>(n);
  const int k_m = 10 * k;
  const Eigen::MatrixXd big = beta_copula_sample(ranks, m, mix64(seed));
  Eigen::VectorXd big_ru = average_ranks(big.col(0));
  Eigen::VectorXd big_rv = average_ranks(big.col(1));
  std::vector<double> reference;
  for (double w : w_grid)
    reference.push_back(pickands_estimate(big_ru, big_rv, w, k_m));

  std::vector<std::vector<double>> diffs(w_grid.size());
  for (int rep = 0; rep < b; ++rep) {
    const Eigen::MatrixXd sample = beta_copula_sample(
        ranks, static_cast<int>(n), mix64(seed + 0x9E37u) + static_cast<std::uint64_t>(rep));
    const Eigen::VectorXd ru = average_ranks(sample.col(0));
    const Eigen::VectorXd rv = average_ranks(sample.col(1));
    for (std::size_t g = 0; g < w_grid.size(); ++g)
      diffs[g].push_back(pickands_estimate(ru, rv, w_grid[g], k) - reference[g]);
  }

  const double alpha = 1.0 - level;
  for (std::size_t g = 0; g < w_grid.size(); ++g) {
    const double a_star = empirical_quantile(diffs[g], 0.5 * alpha);
    const double b_star = empirical_quantile(diffs[g], 1.0 - 0.5 * alpha);
    band.lower.push_back(band.empirical[g] - b_star);
    band.upper.push_back(band.empirical[g] - a_star);
  }
  return band;
}

}  // namespace tailtree
