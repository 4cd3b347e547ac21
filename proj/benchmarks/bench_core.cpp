#include <benchmark/benchmark.h>

#include "tailtree/estimate.hpp"
#include "tailtree/mvn.hpp"
#include "tailtree/simulate.hpp"
#include "tailtree/study.hpp"

using namespace tailtree;

namespace {

HRTreeModel reference_model() {
  const StudyConfig config = reference_study_config();
  return HRTreeModel(config.tree, config.theta);
}

ObservedData reference_data(int n, std::uint64_t seed) {
  const StudyConfig config = reference_study_config();
  const HRTreeModel model(config.tree, config.theta);
  Eigen::MatrixXd draws = sample_markov_tree(model, 2, n, seed);
  draws = add_noise(draws, 1.0, seed + 1);
  const NodeSet observed = config.latent.complement(7);
  ObservedData data;
  data.nodes = observed.ids();
  data.values.resize(n, static_cast<Eigen::Index>(data.nodes.size()));
  for (std::size_t c = 0; c < data.nodes.size(); ++c)
    data.values.col(static_cast<Eigen::Index>(c)) = draws.col(data.nodes[c] - 1);
  return data;
}

}  // namespace

static void BM_MvnCdf(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(p, p, 0.4);
  cov.diagonal().setOnes();
  const Eigen::VectorXd upper = Eigen::VectorXd::Constant(p, 0.5);
  const Eigen::VectorXd mean = Eigen::VectorXd::Zero(p);
  for (auto _ : state) {
    const CdfResult r = mvn_cdf(upper, mean, cov);
    benchmark::DoNotOptimize(r.value);
  }
}
BENCHMARK(BM_MvnCdf)->Arg(3)->Arg(6)->Arg(10);

static void BM_Stdf(benchmark::State& state) {
  const HRTreeModel model = reference_model();
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(7);
  for (auto _ : state) {
    const double l = stdf(model, NodeSet::all(7), ones);
    benchmark::DoNotOptimize(l);
  }
}
BENCHMARK(BM_Stdf);

static void BM_SampleMarkovTree(benchmark::State& state) {
  const HRTreeModel model = reference_model();
  const int n = static_cast<int>(state.range(0));
  std::uint64_t seed = 1;
  for (auto _ : state) {
    const Eigen::MatrixXd draws = sample_markov_tree(model, 2, n, ++seed);
    benchmark::DoNotOptimize(draws.sum());
  }
  state.SetItemsProcessed(state.iterations() * n);
}
BENCHMARK(BM_SampleMarkovTree)->Arg(100)->Arg(1000);

static void BM_RankTransform(benchmark::State& state) {
  const ObservedData data = reference_data(static_cast<int>(state.range(0)), 5);
  for (auto _ : state) {
    const RankTransformed rt = pareto_rank_transform(data.values);
    benchmark::DoNotOptimize(rt.xhat.sum());
  }
}
BENCHMARK(BM_RankTransform)->Arg(1000)->Arg(10000);

static void BM_Mme(benchmark::State& state) {
  const StudyConfig config = reference_study_config();
  const NodeSet observed = config.latent.complement(7);
  const NeighborhoodPlan plan = default_neighborhoods(config.tree, observed, 2);
  const ObservedData data = reference_data(1000, 7);
  for (auto _ : state) {
    const EstimateResult fit = mme(data, config.tree, observed, 100, plan);
    benchmark::DoNotOptimize(fit.theta_hat.sum());
  }
}
BENCHMARK(BM_Mme);

static void BM_Cle(benchmark::State& state) {
  const StudyConfig config = reference_study_config();
  const NodeSet observed = config.latent.complement(7);
  const NeighborhoodPlan plan = default_neighborhoods(config.tree, observed, 2);
  const ObservedData data = reference_data(1000, 7);
  const Eigen::VectorXd init = mme(data, config.tree, observed, 100, plan).theta_hat;
  for (auto _ : state) {
    const EstimateResult fit = cle(data, config.tree, observed, 100, plan, init);
    benchmark::DoNotOptimize(fit.theta_hat.sum());
  }
}
BENCHMARK(BM_Cle);

static void BM_Ece(benchmark::State& state) {
  const StudyConfig config = reference_study_config();
  const NodeSet observed = config.latent.complement(7);
  const auto pairs = observable_pairs(observed);
  const ObservedData data = reference_data(1000, 7);
  for (auto _ : state) {
    const EstimateResult fit = ece(data, config.tree, observed, 100, pairs);
    benchmark::DoNotOptimize(fit.theta_hat.sum());
  }
}
BENCHMARK(BM_Ece);

BENCHMARK_MAIN();
