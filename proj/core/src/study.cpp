#include "tailtree/study.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

#include "tailtree/csv.hpp"
#include "tailtree/estimate.hpp"
#include "tailtree/rng.hpp"
#include "tailtree/simulate.hpp"

namespace tailtree {

int resolve_thread_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("TAILTREE_THREADS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

StudyConfig reference_study_config() {
  StudyConfig config;
  config.tree = Tree(7, {{1, 2}, {2, 3}, {3, 4}, {3, 5}, {1, 6}, {1, 7}});
  config.theta = Eigen::VectorXd(6);
  config.theta << 0.1, 0.3, 0.8, 0.5, 0.2, 1.2;
  config.latent = NodeSet{1, 3};
  return config;
}

namespace {

struct RepResult {
  bool failed = false;
  // theta draws keyed by (estimator index, k index)
  std::vector<Eigen::VectorXd> fits;
};

}  // namespace

StudyResult run_study(const StudyConfig& config) {
  const HRTreeModel model(config.tree, config.theta);
  const NodeSet observed = config.latent.complement(config.tree.node_count());
  const NeighborhoodPlan plan =
      default_neighborhoods(config.tree, observed, config.plan_radius);
  const std::vector<NodePair> pairs = observable_pairs(observed);

  const int n_est = static_cast<int>(config.estimators.size());
  const int n_k = static_cast<int>(config.k_grid.size());
  std::vector<RepResult> reps(static_cast<std::size_t>(config.reps));

  auto run_rep = [&](int rep) {
    RepResult& out = reps[static_cast<std::size_t>(rep)];
    out.fits.assign(static_cast<std::size_t>(n_est * n_k), Eigen::VectorXd());
    const std::uint64_t sample_seed =
        mix64(config.seed + (static_cast<std::uint64_t>(rep) + 1) * kRngGamma);
    try {
      Eigen::MatrixXd draws =
          sample_markov_tree(model, config.root, config.n, sample_seed);
      draws = add_noise(draws, config.noise_sigma, mix64(sample_seed + 1));
      ObservedData data;
      data.nodes = observed.ids();
      data.values.resize(draws.rows(), static_cast<Eigen::Index>(data.nodes.size()));
      for (std::size_t c = 0; c < data.nodes.size(); ++c)
        data.values.col(static_cast<Eigen::Index>(c)) = draws.col(data.nodes[c] - 1);

      for (int ki = 0; ki < n_k; ++ki) {
        const int k = config.k_grid[static_cast<std::size_t>(ki)];
        Eigen::VectorXd mme_theta, cle_theta;
        for (int ei = 0; ei < n_est; ++ei) {
          const std::string& name = config.estimators[static_cast<std::size_t>(ei)];
          Eigen::VectorXd theta;
          if (name == "mme") {
            theta = mme(data, config.tree, observed, k, plan).theta_hat;
            mme_theta = theta;
          } else if (name == "cle") {
            if (mme_theta.size() == 0)
              mme_theta = mme(data, config.tree, observed, k, plan).theta_hat;
            theta = cle(data, config.tree, observed, k, plan, mme_theta).theta_hat;
            cle_theta = theta;
          } else if (name == "ece") {
            theta = ece(data, config.tree, observed, k, pairs).theta_hat;
          } else if (name == "pooled") {
            if (mme_theta.size() == 0)
              mme_theta = mme(data, config.tree, observed, k, plan).theta_hat;
            if (cle_theta.size() == 0)
              cle_theta = cle(data, config.tree, observed, k, plan, mme_theta).theta_hat;
            theta = 0.5 * (mme_theta + cle_theta);
          } else {
            throw DimensionMismatch("unknown estimator: " + name);
          }
          out.fits[static_cast<std::size_t>(ei * n_k + ki)] = std::move(theta);
        }
      }
    } catch (const Error&) {
      out.failed = true;
    }
  };

  const int threads = std::min(resolve_thread_count(config.threads), config.reps);
  if (threads <= 1) {
    for (int rep = 0; rep < config.reps; ++rep) run_rep(rep);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(threads));
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (;;) {
          const int rep = next.fetch_add(1);
          if (rep >= config.reps) return;
          run_rep(rep);
        }
      });
    for (auto& t : pool) t.join();
  }

  StudyResult result;
  result.total_replicates = config.reps;
  for (const auto& rep : reps)
    if (rep.failed) ++result.failed_replicates;

  for (int ei = 0; ei < n_est; ++ei) {
    for (int ki = 0; ki < n_k; ++ki) {
      for (int e = 0; e < config.tree.edge_count(); ++e) {
        double sum = 0.0, sum_sq = 0.0, sum_err_sq = 0.0;
        int m = 0;
        for (const auto& rep : reps) {
          if (rep.failed) continue;
          const auto& theta = rep.fits[static_cast<std::size_t>(ei * n_k + ki)];
          const double value = theta(e);
          sum += value;
          sum_sq += value * value;
          const double err = value - config.theta(e);
          sum_err_sq += err * err;
          ++m;
        }
        StudyRow row;
        row.estimator = config.estimators[static_cast<std::size_t>(ei)];
        row.edge = e;
        row.k = config.k_grid[static_cast<std::size_t>(ki)];
        row.replicates = m;
        if (m > 0) {
          const double mean = sum / m;
          row.bias = mean - config.theta(e);
          row.sd = std::sqrt(std::max(sum_sq / m - mean * mean, 0.0));
          row.rmse = std::sqrt(sum_err_sq / m);
        }
        result.rows.push_back(std::move(row));
      }
    }
  }
  return result;
}

std::string format_study_csv(const StudyResult& result) {
  std::ostringstream out;
  out << "estimator,edge,k,bias,sd,rmse,replicates\n";
  for (const auto& row : result.rows) {
    out << row.estimator << "," << row.edge + 1 << "," << row.k << ","
        << format_csv_double(row.bias) << "," << format_csv_double(row.sd)
        << "," << format_csv_double(row.rmse) << "," << row.replicates << "\n";
  }
  return out.str();
}

}  // namespace tailtree
