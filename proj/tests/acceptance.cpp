// Acceptance suite: runs the project's top-level correctness criteria and
// prints one PASS/FAIL line per criterion.
#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <map>
#include <random>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tailtree/estimate.hpp"
#include "tailtree/inference.hpp"
#include "tailtree/model.hpp"
#include "tailtree/mvn.hpp"
#include "tailtree/normal.hpp"
#include "tailtree/pipeline.hpp"
#include "tailtree/rng.hpp"
#include "tailtree/simulate.hpp"
#include "tailtree/study.hpp"
#include "test_util.hpp"

using namespace tailtree;

namespace {

struct Check {
  bool ok = true;
  std::string detail;

  void fail(const std::string& why) {
    ok = false;
    if (!detail.empty()) detail += "; ";
    detail += why;
  }
};

void parallel_reps(int count, const std::function<void(int)>& body) {
  const int threads = std::min(resolve_thread_count(0), count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= count) return;
        body(i);
      }
    });
  for (auto& t : pool) t.join();
}

HRTreeModel reference_model() {
  const StudyConfig config = reference_study_config();
  return HRTreeModel(config.tree, config.theta);
}

ObservedData observed_from(const Eigen::MatrixXd& draws,
                           const std::vector<int>& nodes) {
  ObservedData data;
  data.nodes = nodes;
  data.values.resize(draws.rows(), static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t c = 0; c < nodes.size(); ++c)
    data.values.col(static_cast<Eigen::Index>(c)) = draws.col(nodes[c] - 1);
  return data;
}

// ---------------------------------------------------------------------------
// criterion 1: the degree criterion and the exact-rank criterion agree on
// every unlabeled tree with up to 8 nodes and every observed subset
// ---------------------------------------------------------------------------

std::string ahu_string(const Tree& tree, int root, int parent) {
  std::vector<std::string> parts;
  for (int w : tree.neighbors(root))
    if (w != parent) parts.push_back(ahu_string(tree, w, root));
  std::sort(parts.begin(), parts.end());
  std::string out = "(";
  for (const auto& p : parts) out += p;
  out += ")";
  return out;
}

std::string canonical_form(const Tree& tree) {
  // peel leaves to find the one or two center nodes
  const int d = tree.node_count();
  std::vector<int> degree(static_cast<std::size_t>(d) + 1);
  std::vector<int> layer;
  for (int v = 1; v <= d; ++v) {
    degree[static_cast<std::size_t>(v)] = tree.degree(v);
    if (degree[static_cast<std::size_t>(v)] <= 1) layer.push_back(v);
  }
  int remaining = d;
  std::vector<int> centers = layer;
  while (remaining > 2) {
    remaining -= static_cast<int>(layer.size());
    std::vector<int> next;
    for (int v : layer)
      for (int w : tree.neighbors(v))
        if (--degree[static_cast<std::size_t>(w)] == 1) next.push_back(w);
    layer = next;
    centers = layer;
  }
  std::string best;
  for (int c : centers) {
    std::string s = ahu_string(tree, c, 0);
    if (best.empty() || s < best) best = s;
  }
  return best;
}

Check criterion_identifiability() {
  Check check;
  const int expected_counts[9] = {0, 0, 1, 1, 2, 3, 6, 11, 23};
  long cases = 0;
  for (int d = 2; d <= 8; ++d) {
    std::map<std::string, Tree> unlabeled;
    std::vector<int> code(static_cast<std::size_t>(std::max(d - 2, 0)), 1);
    bool more = true;
    while (more) {
      Tree t(d, test_util::pruefer_decode(code, d));
      unlabeled.try_emplace(canonical_form(t), std::move(t));
      more = false;
      for (auto& c : code) {
        if (c < d) {
          ++c;
          more = true;
          break;
        }
        c = 1;
      }
    }
    if (static_cast<int>(unlabeled.size()) != expected_counts[d])
      check.fail("unexpected tree count at d=" + std::to_string(d) + ": " +
                 std::to_string(unlabeled.size()));
    for (const auto& [form, tree] : unlabeled) {
      for (int mask = 1; mask < (1 << d); ++mask) {
        std::vector<int> obs;
        for (int v = 1; v <= d; ++v)
          if (mask & (1 << (v - 1))) obs.push_back(v);
        const NodeSet observed(obs);
        const bool by_degree =
            check_identifiability_degree(tree, observed).identifiable;
        const bool by_rank = check_identifiability_rank(tree, observed);
        ++cases;
        if (by_degree != by_rank) {
          check.fail("criteria disagree at d=" + std::to_string(d) +
                     " mask=" + std::to_string(mask));
          return check;
        }
      }
    }
  }
  check.detail = std::to_string(cases) + " tree/subset cases";
  return check;
}

// ---------------------------------------------------------------------------
// criterion 2: extraction plans recover every squared edge parameter from
// observable path sums with relative error at most 1e-12
// ---------------------------------------------------------------------------

Check criterion_extraction() {
  Check check;
  std::mt19937_64 gen(0xACCE01);
  std::uniform_real_distribution<double> theta_draw(0.05, 2.0);
  int instances = 0;
  double worst = 0.0;
  while (instances < 1000) {
    const int d = 4 + static_cast<int>(gen() % 7);  // up to 10 nodes
    const Tree tree = test_util::random_tree(d, gen);
    std::vector<int> obs;
    std::vector<int> latent;
    for (int v = 1; v <= d; ++v) {
      if (tree.degree(v) >= 3 && (gen() & 1))
        latent.push_back(v);
      else
        obs.push_back(v);
    }
    const NodeSet observed(obs);
    if (observed.empty() ||
        !check_identifiability_degree(tree, observed).identifiable)
      continue;
    ++instances;

    std::vector<double> theta_sq(static_cast<std::size_t>(d - 1));
    for (auto& x : theta_sq) {
      const double th = theta_draw(gen);
      x = th * th;
    }
    const auto path_sum = [&](int a, int b) {
      double acc = 0.0;
      for (int e : tree.path_edge_indices(a, b))
        acc += theta_sq[static_cast<std::size_t>(e)];
      return acc;
    };
    const ExtractionPlan plan = extraction_plan(tree, observed);
    for (int e = 0; e < tree.edge_count(); ++e) {
      const double got = plan.evaluate_edge(e, path_sum);
      const double rel = std::fabs(got - theta_sq[static_cast<std::size_t>(e)]) /
                         theta_sq[static_cast<std::size_t>(e)];
      worst = std::max(worst, rel);
      if (rel > 1e-12) {
        check.fail("relative error " + std::to_string(rel));
        return check;
      }
    }
  }
  std::ostringstream detail;
  detail << instances << " instances, worst relative error " << worst;
  check.detail = detail.str();
  return check;
}

// ---------------------------------------------------------------------------
// criterion 3: the two covariance constructions and the mean identity agree
// entrywise to 1e-12 on random configurations
// ---------------------------------------------------------------------------

Check criterion_identities() {
  Check check;
  std::mt19937_64 gen(0xACCE03);
  std::uniform_real_distribution<double> theta_draw(0.05, 2.0);
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const int d = 3 + static_cast<int>(gen() % 8);
    Eigen::VectorXd theta(d - 1);
    for (int e = 0; e < d - 1; ++e) theta(e) = theta_draw(gen);
    const HRTreeModel model(test_util::random_tree(d, gen), theta);
    const Eigen::MatrixXd lambda = lambda_matrix(model);

    std::vector<int> members;
    for (int v = 1; v <= d; ++v)
      if (gen() & 1) members.push_back(v);
    if (members.size() < 2) {
      --rep;
      continue;
    }
    const NodeSet w(members);
    const int u = members[gen() % members.size()];
    const MuSigma ms = mu_sigma(model, w, u);
    const Eigen::MatrixXd gamma = gamma_matrix(lambda, w, u);
    worst = std::max(worst, (gamma - ms.sigma).cwiseAbs().maxCoeff());
    for (std::size_t i = 0; i < ms.order.size(); ++i)
      worst = std::max(worst,
                       std::fabs(2.0 * lambda(u - 1, ms.order[i] - 1) +
                                 ms.mu(static_cast<Eigen::Index>(i))));
    if (worst > 1e-12) {
      check.fail("entrywise deviation " + std::to_string(worst));
      return check;
    }
  }
  std::ostringstream detail;
  detail << "1000 configurations, worst deviation " << worst;
  check.detail = detail.str();
  return check;
}

// ---------------------------------------------------------------------------
// criterion 4: stdf margins, homogeneity, the bivariate closed form, and a
// simulation oracle for a three-node coefficient
// ---------------------------------------------------------------------------

Check criterion_stdf() {
  Check check;
  const HRTreeModel model = reference_model();
  const int d = model.tree().node_count();

  // unit coordinate vectors
  for (int j = 1; j <= d; ++j) {
    Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
    x(j - 1) = 1.0;
    if (stdf(model, NodeSet::all(d), x) != 1.0) {
      check.fail("margin at node " + std::to_string(j));
      return check;
    }
  }

  // homogeneity
  std::mt19937_64 gen(0xACCE04);
  std::uniform_real_distribution<double> xdraw(0.2, 2.5);
  for (int rep = 0; rep < 5; ++rep) {
    Eigen::VectorXd x(d);
    for (int i = 0; i < d; ++i) x(i) = xdraw(gen);
    const double t = 0.4 + 2.0 * xdraw(gen);
    const double base = stdf(model, NodeSet::all(d), x, 2e-6);
    const double scaled = stdf(model, NodeSet::all(d), (t * x).eval(), 2e-6);
    const double rel = std::fabs(scaled - t * base) / (t * base);
    if (rel > 1e-5) {
      check.fail("homogeneity relative error " + std::to_string(rel));
      return check;
    }
  }

  // bivariate general route against the closed form
  for (const auto& [u, v] : std::vector<NodePair>{{2, 4}, {6, 7}, {4, 7}}) {
    const double closed = 2.0 * norm_cdf(0.5 * std::sqrt(model.path_sum(u, v)));
    Eigen::VectorXd ones = Eigen::VectorXd::Ones(2);
    const double general = stdf(model, NodeSet{u, v}, ones, 1e-6);
    if (std::fabs(general - closed) > 1e-5) {
      check.fail("bivariate mismatch at " + std::to_string(u) + "," +
                 std::to_string(v));
      return check;
    }
  }

  // three-node coefficient against a simulation oracle built from the
  // multiplicative tail representation and inclusion-exclusion: each joint
  // survival term is the expected minimum of the tail limits seen from a
  // base inside that node set
  const NodeSet triple{2, 4, 5};
  const double via_stdf = extremal_coefficient(model, triple, 1e-5);

  std::mt19937_64 oracle_gen(0xACCE14);
  std::normal_distribution<double> z;
  const long draws = 1'000'000;
  const double p24 = model.path_sum(2, 4);
  const double p25 = model.path_sum(2, 5);
  const double p45 = model.path_sum(4, 5);
  std::vector<std::vector<int>> paths;
  for (int target : {4, 5})
    paths.push_back(model.tree().path_edge_indices(2, target));

  double sum_pair[3] = {0, 0, 0}, sum_sq_pair[3] = {0, 0, 0};
  double sum_triple = 0, sum_sq_triple = 0;
  for (long i = 0; i < draws; ++i) {
    // pair terms: independent draws of the bivariate tail limit
    const double pair_terms[3] = {
        std::min(1.0, std::exp(-0.5 * p24 + std::sqrt(p24) * z(oracle_gen))),
        std::min(1.0, std::exp(-0.5 * p25 + std::sqrt(p25) * z(oracle_gen))),
        std::min(1.0, std::exp(-0.5 * p45 + std::sqrt(p45) * z(oracle_gen)))};
    for (int t = 0; t < 3; ++t) {
      sum_pair[t] += pair_terms[t];
      sum_sq_pair[t] += pair_terms[t] * pair_terms[t];
    }
    // triple term: shared increments along the paths leaving node 2
    double log_m[6];
    for (int e = 0; e < 6; ++e) {
      const double th = model.theta()(e);
      log_m[e] = -0.5 * th * th + th * z(oracle_gen);
    }
    double triple_min = 1.0;
    for (const auto& path : paths) {
      double acc = 0.0;
      for (int e : path) acc += log_m[e];
      triple_min = std::min(triple_min, std::exp(acc));
    }
    sum_triple += triple_min;
    sum_sq_triple += triple_min * triple_min;
  }
  double oracle = 3.0;
  double variance = 0.0;
  const double n = static_cast<double>(draws);
  for (int t = 0; t < 3; ++t) {
    oracle -= sum_pair[t] / n;
    variance += (sum_sq_pair[t] / n - (sum_pair[t] / n) * (sum_pair[t] / n)) / n;
  }
  oracle += sum_triple / n;
  variance += (sum_sq_triple / n - (sum_triple / n) * (sum_triple / n)) / n;
  const double se = std::sqrt(variance);
  const double tol = 3.0 * std::sqrt(se * se + (1e-5 / 3.0) * (1e-5 / 3.0));
  std::ostringstream detail;
  detail << "triple coefficient " << via_stdf << " vs oracle " << oracle
         << " (3 combined se = " << tol << ")";
  check.detail = detail.str();
  if (std::fabs(via_stdf - oracle) > tol) check.fail("triple coefficient off");
  return check;
}

// ---------------------------------------------------------------------------
// criterion 5: sampler fidelity at n = 100000
// ---------------------------------------------------------------------------

Check criterion_sampler() {
  Check check;
  const HRTreeModel model = reference_model();
  const int n = 100000;
  const int d = model.tree().node_count();
  const Eigen::MatrixXd draws = sample_markov_tree(model, 2, n, 0xACCE05);

  // (a) unit-Frechet margins at the 1% level
  const double ks_critical = 1.628 / std::sqrt(static_cast<double>(n));
  for (int v = 1; v <= d; ++v) {
    std::vector<double> column(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
      column[static_cast<std::size_t>(i)] = draws(i, v - 1);
    const double ks = test_util::ks_distance(
        column, [](double x) { return x > 0 ? std::exp(-1.0 / x) : 0.0; });
    if (ks > ks_critical) {
      check.fail("margin at node " + std::to_string(v) + " ks=" +
                 std::to_string(ks));
    }
  }

  // (b) per-edge empirical pair coefficients
  const int k = static_cast<int>(std::sqrt(static_cast<double>(n)));
  std::vector<int> all_nodes;
  for (int v = 1; v <= d; ++v) all_nodes.push_back(v);
  const ObservedData data = observed_from(draws, all_nodes);
  for (int e = 0; e < model.tree().edge_count(); ++e) {
    const auto [a, b] = model.tree().edge(e);
    const double l_hat = empirical_extremal_coefficient(data, NodeSet{a, b}, k);
    const double expected = 2.0 * norm_cdf(0.5 * model.theta()(e));
    const double se =
        std::sqrt(std::max(l_hat * (1.0 - l_hat * k / n), 1e-12) / k);
    if (std::fabs(l_hat - expected) > 3.0 * se)
      check.fail("edge " + std::to_string(a) + "-" + std::to_string(b) +
                 " coefficient " + std::to_string(l_hat) + " vs " +
                 std::to_string(expected));
  }

  // (c) conditional log-ratio moments at every base node, thresholding the
  // exactly standardized draws themselves
  for (int u = 1; u <= d; ++u) {
    std::vector<int> rows;
    for (int i = 0; i < n; ++i)
      if (draws(i, u - 1) > static_cast<double>(n) / k) rows.push_back(i);
    Eigen::MatrixXd deltas(static_cast<Eigen::Index>(rows.size()), d - 1);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      int col = 0;
      for (int v = 1; v <= d; ++v)
        if (v != u)
          deltas(static_cast<Eigen::Index>(i), col++) =
              std::log(draws(rows[i], v - 1)) - std::log(draws(rows[i], u - 1));
    }
    const auto [mean, cov] = empirical_mu_sigma(deltas);
    const MuSigma ms = mu_sigma(model, NodeSet::all(d), u);
    const int m = static_cast<int>(rows.size());
    for (int i = 0; i < d - 1; ++i) {
      const double se = std::sqrt(ms.sigma(i, i) / m);
      if (std::fabs(mean(i) - ms.mu(i)) > 3.0 * se)
        check.fail("mean at u=" + std::to_string(u) + " node " +
                   std::to_string(ms.order[static_cast<std::size_t>(i)]));
      for (int j = i; j < d - 1; ++j) {
        const double var_prod = ms.sigma(i, i) * ms.sigma(j, j) +
                                ms.sigma(i, j) * ms.sigma(i, j);
        if (std::fabs(cov(i, j) - ms.sigma(i, j)) >
            3.0 * std::sqrt(var_prod / m))
          check.fail("cov at u=" + std::to_string(u) + " entry " +
                     std::to_string(i) + "," + std::to_string(j));
      }
    }
  }
  if (check.ok) check.detail = "margins, pair coefficients, conditional moments";
  return check;
}

// ---------------------------------------------------------------------------
// criterion 6: replicated estimation study matches the qualitative picture
// ---------------------------------------------------------------------------

Check criterion_study() {
  Check check;
  StudyConfig config = reference_study_config();
  config.seed = 0xACCE06;
  const StudyResult result = run_study(config);
  if (result.failed_replicates > 0)
    check.fail(std::to_string(result.failed_replicates) + " failed replicates");

  // index rows by estimator/edge/k
  std::map<std::string, std::map<int, std::map<int, StudyRow>>> table;
  for (const auto& row : result.rows) table[row.estimator][row.edge][row.k] = row;

  double worst_rho = -1.0;
  for (const auto& [estimator, edges] : table) {
    for (const auto& [edge, by_k] : edges) {
      std::vector<double> ks, sds;
      for (const auto& [k, row] : by_k) {
        ks.push_back(k);
        sds.push_back(row.sd);
      }
      const double rho = test_util::spearman_rho(sds, ks);
      worst_rho = std::max(worst_rho, rho);
      if (rho > 0.2)
        check.fail(estimator + " edge " + std::to_string(edge + 1) +
                   " sd trend rho=" + std::to_string(rho));
    }
  }

  double worst_rmse = 0.0;
  for (const auto& [estimator, edges] : table)
    for (const auto& [edge, by_k] : edges) {
      const double rmse = by_k.at(100).rmse;
      worst_rmse = std::max(worst_rmse, rmse);
      if (rmse > 0.35)
        check.fail(estimator + " edge " + std::to_string(edge + 1) +
                   " rmse(100)=" + std::to_string(rmse));
    }

  double worst_gap = 0.0;
  for (const auto& [edge, by_k] : table.at("mme"))
    for (const auto& [k, row] : by_k) {
      const double gap = std::fabs(row.rmse - table.at("cle").at(edge).at(k).rmse);
      worst_gap = std::max(worst_gap, gap);
      if (gap > 0.05)
        check.fail("mme/cle rmse gap " + std::to_string(gap) + " at edge " +
                   std::to_string(edge + 1) + " k=" + std::to_string(k));
    }

  std::ostringstream detail;
  detail << "worst sd-trend rho " << worst_rho << ", worst rmse(100) "
         << worst_rmse << ", worst mme/cle gap " << worst_gap;
  if (check.ok) check.detail = detail.str();
  return check;
}

// ---------------------------------------------------------------------------
// criterion 7: confidence interval coverage
// ---------------------------------------------------------------------------

Check criterion_coverage() {
  Check check;
  const StudyConfig base = reference_study_config();
  const HRTreeModel model(base.tree, base.theta);
  const NodeSet observed = base.latent.complement(base.tree.node_count());
  const NeighborhoodPlan plan = default_neighborhoods(base.tree, observed, 2);
  const std::vector<NodePair> pairs = observable_pairs(observed);
  const int reps = 200, n = 4000, k = 200, boot_b = 500;
  const int ne = base.tree.edge_count();

  std::vector<std::array<int, 2>> covered(
      static_cast<std::size_t>(ne), std::array<int, 2>{0, 0});
  std::vector<int> usable(2, 0);
  std::mutex merge_mutex;

  parallel_reps(reps, [&](int rep) {
    const std::uint64_t seed = mix64(0xACCE07 + 977u * static_cast<std::uint64_t>(rep));
    Eigen::MatrixXd draws = sample_markov_tree(model, 2, n, seed);
    draws = add_noise(draws, 1.0, mix64(seed + 1));
    const ObservedData data = observed_from(draws, observed.ids());

    // basic bootstrap around the moment estimator
    const auto refit = [&](const ObservedData& resample) {
      return mme(resample, base.tree, observed, k, plan).theta_hat;
    };
    const Eigen::VectorXd point = refit(data);
    const CIResult boot =
        basic_bootstrap_ci(refit, data, point, boot_b, 0.95, mix64(seed + 2));

    // asymptotic interval around the pairwise coefficient estimator
    const EstimateResult ece_fit = ece(data, base.tree, observed, k, pairs);
    const Eigen::MatrixXd sigma_l =
        bootstrap_sigma_l(data, pairs, k, boot_b, mix64(seed + 3));
    const HRTreeModel fitted(base.tree, ece_fit.theta_hat);
    const CIResult asym = ece_asymptotic_ci(fitted, pairs, k, 0.95, sigma_l);

    std::lock_guard<std::mutex> lock(merge_mutex);
    ++usable[0];
    ++usable[1];
    for (int e = 0; e < ne; ++e) {
      if (boot.edges[static_cast<std::size_t>(e)].lower <= base.theta(e) &&
          base.theta(e) <= boot.edges[static_cast<std::size_t>(e)].upper)
        ++covered[static_cast<std::size_t>(e)][0];
      if (asym.edges[static_cast<std::size_t>(e)].lower <= base.theta(e) &&
          base.theta(e) <= asym.edges[static_cast<std::size_t>(e)].upper)
        ++covered[static_cast<std::size_t>(e)][1];
    }
  });

  std::ostringstream detail;
  for (int method = 0; method < 2; ++method) {
    detail << (method == 0 ? "bootstrap:" : " asymptotic:");
    for (int e = 0; e < ne; ++e) {
      const double rate = static_cast<double>(covered[static_cast<std::size_t>(e)][method]) /
                          usable[static_cast<std::size_t>(method)];
      detail << " " << rate;
      if (rate < 0.90 || rate > 0.98)
        check.fail((method == 0 ? std::string("bootstrap") : std::string("asymptotic")) +
                   " coverage " + std::to_string(rate) + " at edge " +
                   std::to_string(e + 1));
    }
  }
  check.detail = detail.str();
  return check;
}

// ---------------------------------------------------------------------------
// criterion 8: pipeline determinism, regression exactness, and the
// declustering trace
// ---------------------------------------------------------------------------

Check criterion_pipeline() {
  Check check;

  // hand trace: nine increasing days, radius one
  {
    TimeSeriesTable daily;
    daily.stations = {"s"};
    daily.values.resize(9, 1);
    for (int i = 0; i < 9; ++i) {
      daily.times.push_back(static_cast<TimePoint>(i + 1) * 86400);
      daily.values(i, 0) = i + 1;
    }
    const EventTable events = decluster(daily, 1);
    const std::vector<Day> expect_dates{3, 6, 9};
    if (events.dates != expect_dates) check.fail("trace centers");
    for (int i = 0; i < 3; ++i)
      if (events.values(i, 0) != 3.0 * (i + 1)) check.fail("trace maxima");
  }

  // synthetic gauge network through the full pipeline, twice
  std::ostringstream csv;
  csv << "timestamp,a,b,c\n";
  std::mt19937_64 gen(0xACCE08);
  std::uniform_real_distribution<double> u;
  Day day = day_of(parse_timestamp("2005-10-01"));
  for (int i = 0; i < 3408; ++i) {
    if (u(gen) < 0.03) ++day;  // occasional calendar gap
    csv << format_day(day) << "T06:00," << 100 + 40 * u(gen) << ","
        << 220 + 25 * u(gen) << ",";
    if (u(gen) < 0.05)
      csv << "\n";
    else
      csv << 180 + 30 * u(gen) << "\n";
    ++day;
  }
  const std::string text = csv.str();
  auto run_pipeline = [&]() {
    std::istringstream in(text);
    const TimeSeriesTable raw = read_timeseries_csv(in);
    const TimeSeriesTable daily = daily_average(raw);
    const EventTable events = decluster(daily, 3);
    return format_event_csv(deseasonalize(events));
  };
  const std::string first = run_pipeline();
  if (first != run_pipeline()) check.fail("pipeline output not byte-identical");

  // orthogonality of residuals to the seasonal design
  {
    std::istringstream in(text);
    const EventTable events = decluster(daily_average(read_timeseries_csv(in)), 3);
    const EventTable resid = deseasonalize(events);
    const Eigen::Index rows = resid.values.rows();
    for (Eigen::Index c = 0; c < resid.values.cols(); ++c) {
      double dot_one = 0, dot_trend = 0, dot_spring = 0;
      double scale = 0;
      for (Eigen::Index i = 0; i < rows; ++i) {
        const double r = resid.values(i, c);
        if (std::isnan(r)) continue;
        const int month = month_of_day(resid.dates[static_cast<std::size_t>(i)]);
        dot_one += r;
        dot_trend += r * static_cast<double>(i + 1);
        if (month >= 3 && month <= 5) dot_spring += r;
        scale = std::max(scale, std::fabs(r) * static_cast<double>(rows));
      }
      if (std::fabs(dot_one) > 1e-10 * std::max(1.0, scale) ||
          std::fabs(dot_trend) > 1e-10 * std::max(1.0, scale * rows) ||
          std::fabs(dot_spring) > 1e-10 * std::max(1.0, scale))
        check.fail("residual orthogonality at column " + std::to_string(c));
    }
    std::ostringstream detail;
    detail << events.dates.size() << " events from 3408 daily rows";
    if (check.ok) check.detail = detail.str();
  }
  return check;
}

// ---------------------------------------------------------------------------
// criterion 9: the normal-cdf kernel against exact and simulation oracles
// ---------------------------------------------------------------------------

Check criterion_mvn() {
  Check check;

  // dimension-one reduction
  {
    Eigen::VectorXd upper(1), mean(1);
    Eigen::MatrixXd cov(1, 1);
    upper << 1.3;
    mean << 0.4;
    cov << 2.25;
    const double got = mvn_cdf(upper, mean, cov).value;
    if (std::fabs(got - norm_cdf(0.6)) > 1e-10) check.fail("univariate reduction");
  }

  // diagonal factorization
  {
    Eigen::VectorXd upper(5);
    upper << 0.3, -0.2, 1.0, 0.4, -0.9;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(5, 5);
    cov.diagonal() << 1.0, 0.5, 2.0, 1.5, 0.8;
    double expected = 1.0;
    for (int i = 0; i < 5; ++i) expected *= norm_cdf(upper(i) / std::sqrt(cov(i, i)));
    const double got = mvn_cdf(upper, Eigen::VectorXd::Zero(5), cov, {1e-6, 2'000'000}).value;
    if (std::fabs(got - expected) > 1e-6) check.fail("diagonal factorization");
  }

  // random spd case against a ten-million-draw oracle
  {
    std::mt19937_64 gen(0xACCE09);
    std::normal_distribution<double> z;
    Eigen::MatrixXd a(5, 5);
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 5; ++j) a(i, j) = z(gen);
    const Eigen::MatrixXd cov = a * a.transpose() + 0.5 * Eigen::MatrixXd::Identity(5, 5);
    Eigen::VectorXd upper(5);
    for (int i = 0; i < 5; ++i) upper(i) = 0.5 * z(gen);

    const Eigen::MatrixXd l = cholesky(cov);
    const long draws = 10'000'000;
    long hits = 0;
    Eigen::VectorXd g(5);
    for (long i = 0; i < draws; ++i) {
      for (int j = 0; j < 5; ++j) g(j) = z(gen);
      const Eigen::VectorXd x = l * g;
      bool inside = true;
      for (int j = 0; j < 5; ++j)
        if (x(j) > upper(j)) {
          inside = false;
          break;
        }
      if (inside) ++hits;
    }
    const double mc = static_cast<double>(hits) / draws;
    const double mc_se = std::sqrt(mc * (1.0 - mc) / draws);
    const CdfResult r = mvn_cdf(upper, Eigen::VectorXd::Zero(5), cov, {1e-5, 4'000'000});
    const double tol = 3.0 * std::sqrt(mc_se * mc_se + (r.error_estimate / 3.0) *
                                                           (r.error_estimate / 3.0));
    std::ostringstream detail;
    detail << "p=5 case " << r.value << " vs oracle " << mc << " (tol " << tol << ")";
    check.detail = detail.str();
    if (std::fabs(r.value - mc) > tol) check.fail("p=5 oracle mismatch");
  }
  return check;
}

struct Criterion {
  int id;
  const char* label;
  Check (*run)();
};

const Criterion kCriteria[] = {
    {1, "identifiability criteria agree on all small trees", criterion_identifiability},
    {2, "extraction plans are exact", criterion_extraction},
    {3, "covariance and mean identities", criterion_identities},
    {4, "stdf margins, homogeneity, closed forms, simulation oracle", criterion_stdf},
    {5, "sampler fidelity at n=100000", criterion_sampler},
    {6, "replicated study shape", criterion_study},
    {7, "confidence interval coverage", criterion_coverage},
    {8, "pipeline determinism and regression exactness", criterion_pipeline},
    {9, "normal cdf kernel oracles", criterion_mvn},
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc)
      only = std::atoi(argv[i + 1]);
  }
  bool all_ok = true;
  for (const auto& criterion : kCriteria) {
    if (only != 0 && criterion.id != only) continue;
    const Check check = criterion.run();
    std::printf("%s criterion %d: %s%s%s\n", check.ok ? "PASS" : "FAIL",
                criterion.id, criterion.label,
                check.detail.empty() ? "" : " — ", check.detail.c_str());
    std::fflush(stdout);
    all_ok = all_ok && check.ok;
  }
  return all_ok ? 0 : 1;
}
