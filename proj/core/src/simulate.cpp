#include "tailtree/simulate.hpp"

#include <cmath>
#include <deque>
#include <tuple>
#include <vector>
#include <string>
#include <utility>

#include "tailtree/normal.hpp"
#include "tailtree/rng.hpp"

namespace tailtree {

double hr_pair_conditional_cdf(double x_j, double x_v, double theta) {
  if (!(x_j > 0.0) || !(x_v > 0.0) || !(theta > 0.0))
    throw NonPositiveInput("hr_pair_conditional_cdf needs positive arguments");
  const double a = 0.5 * theta + std::log(x_j / x_v) / theta;
  const double b = 0.5 * theta + std::log(x_v / x_j) / theta;
  const double phi_a = norm_cdf(a);
  const double phi_b = norm_cdf(b);
  return phi_a * std::exp(-(phi_a - 1.0) / x_v - phi_b / x_j);
}

double sample_conditional(double x_v, double theta, double u01) {
  if (!(u01 > 0.0) || !(u01 < 1.0))
    throw NonPositiveInput("u01 must lie strictly inside (0,1)");
  if (!(x_v > 0.0) || !(theta > 0.0))
    throw NonPositiveInput("sample_conditional needs positive arguments");

  const double lv = std::log(x_v);
  auto g = [&](double lx) {
    return hr_pair_conditional_cdf(std::exp(lx), x_v, theta) - u01;
  };

  double lo = lv - 10.0 * theta, hi = lv + 10.0 * theta;
  double glo = g(lo), ghi = g(hi);
  double width = hi - lo;
  int expansions = 0;
  while (glo > 0.0 && expansions < 60) {
    hi = lo;
    ghi = glo;
    lo -= width;
    width *= 2.0;
    glo = g(lo);
    ++expansions;
  }
  while (ghi < 0.0 && expansions < 60) {
    lo = hi;
    glo = ghi;
    hi += width;
    width *= 2.0;
    ghi = g(hi);
    ++expansions;
  }
  if (glo > 0.0 || ghi < 0.0)
    throw BracketFailure("could not bracket the conditional quantile");

  double mid = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    // alternate secant and bisection so the bracket keeps shrinking even
    // where the cdf is flat to double precision
    double cand = 0.5 * (lo + hi);
    if ((it & 1) == 0 && ghi != glo) {
      const double sec = lo - glo * (hi - lo) / (ghi - glo);
      if (sec > lo && sec < hi) cand = sec;
    }
    mid = cand;
    const double gm = g(mid);
    if (std::fabs(gm) <= 1e-10 && hi - lo <= 1e-10) return std::exp(mid);
    if (gm < 0.0) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
      ghi = gm;
    }
    if (hi - lo < 1e-14) break;
  }
  return std::exp(0.5 * (lo + hi));
}

namespace {

double frechet_draw(RngStream& rng) { return -1.0 / std::log(rng.next_unit_open()); }

/// Edges ordered away from the root: (parent node, child node, edge index).
std::vector<std::tuple<int, int, int>> edges_from_root(const Tree& tree,
                                                       int root) {
  tree.require_node(root);
  std::vector<std::tuple<int, int, int>> out;
  std::vector<char> seen(static_cast<std::size_t>(tree.node_count()) + 1, 0);
  std::deque<int> queue{root};
  seen[static_cast<std::size_t>(root)] = 1;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int w : tree.neighbors(v)) {
      if (seen[static_cast<std::size_t>(w)]) continue;
      seen[static_cast<std::size_t>(w)] = 1;
      out.emplace_back(v, w, tree.edge_index(v, w));
      queue.push_back(w);
    }
  }
  return out;
}

}  // namespace

Eigen::MatrixXd sample_markov_tree(const HRTreeModel& model, int root, int n,
                                   std::uint64_t seed) {
  if (n < 0) throw DimensionMismatch("sample size must be nonnegative");
  const auto& tree = model.tree();
  const auto edges = edges_from_root(tree, root);
  Eigen::MatrixXd out(n, tree.node_count());
  for (int row = 0; row < n; ++row) {
    RngStream root_rng(seed, rng_purpose::kMarkovRoot,
                       static_cast<std::uint64_t>(row),
                       static_cast<std::uint64_t>(root));
    out(row, root - 1) = frechet_draw(root_rng);
    for (const auto& [v, j, e] : edges) {
      RngStream rng(seed, rng_purpose::kMarkovEdge,
                    static_cast<std::uint64_t>(row),
                    static_cast<std::uint64_t>(e));
      out(row, j - 1) =
          sample_conditional(out(row, v - 1), model.theta()(e), rng.next_unit_open());
    }
  }
  return out;
}

Eigen::MatrixXd add_noise(const Eigen::MatrixXd& samples, double sigma,
                          std::uint64_t seed) {
  if (sigma < 0.0) throw NonPositiveInput("noise sigma must be nonnegative");
  if (sigma == 0.0) return samples;
  Eigen::MatrixXd out = samples;
  for (Eigen::Index row = 0; row < out.rows(); ++row) {
    for (Eigen::Index col = 0; col < out.cols(); ++col) {
      RngStream rng(seed, rng_purpose::kNoise, static_cast<std::uint64_t>(row),
                    static_cast<std::uint64_t>(col));
      out(row, col) += sigma * rng.next_normal();
    }
  }
  return out;
}

TailTreeSample sample_tail_tree(const HRTreeModel& model, int u, int n,
                                std::uint64_t seed) {
  if (n < 0) throw DimensionMismatch("sample size must be nonnegative");
  const auto& tree = model.tree();
  tree.require_node(u);
  TailTreeSample out;
  out.base = u;
  for (int v = 1; v <= tree.node_count(); ++v)
    if (v != u) out.order.push_back(v);
  const int p = static_cast<int>(out.order.size());
  const int ne = tree.edge_count();

  std::vector<std::vector<int>> paths(static_cast<std::size_t>(p));
  for (int i = 0; i < p; ++i)
    paths[static_cast<std::size_t>(i)] =
        tree.path_edge_indices(u, out.order[static_cast<std::size_t>(i)]);

  out.xi.resize(n, p);
  std::vector<double> log_m(static_cast<std::size_t>(ne));
  for (int row = 0; row < n; ++row) {
    for (int e = 0; e < ne; ++e) {
      RngStream rng(seed, rng_purpose::kTailTree,
                    static_cast<std::uint64_t>(row), static_cast<std::uint64_t>(e));
      const double theta = model.theta()(e);
      log_m[static_cast<std::size_t>(e)] =
          -0.5 * theta * theta + theta * rng.next_normal();
    }
    for (int i = 0; i < p; ++i) {
      double acc = 0.0;
      for (int e : paths[static_cast<std::size_t>(i)])
        acc += log_m[static_cast<std::size_t>(e)];
      out.xi(row, i) = std::exp(acc);
    }
  }
  return out;
}

}  // namespace tailtree
