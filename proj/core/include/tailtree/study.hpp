#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "tailtree/model.hpp"

namespace tailtree {

/// Thread count for replicate-parallel work: explicit value, else the
/// TAILTREE_THREADS environment variable, else hardware concurrency.
int resolve_thread_count(int requested = 0);

/// Monte Carlo replication harness: repeatedly simulate from the model, hide
/// the latent columns, add observation noise, and re-estimate.
struct StudyConfig {
  Tree tree{2, {{1, 2}}};
  Eigen::VectorXd theta;
  NodeSet latent;
  int reps = 200;
  int n = 1000;
  std::vector<int> k_grid{25, 50, 100, 150, 200, 300};
  double noise_sigma = 1.0;
  int root = 2;
  std::uint64_t seed = 20230;
  int plan_radius = 2;
  std::vector<std::string> estimators{"mme", "cle", "ece"};
  int threads = 0;
};

/// The default replication settings used across the project's examples.
StudyConfig reference_study_config();

struct StudyRow {
  std::string estimator;
  int edge = 0;  // edge position
  int k = 0;
  double bias = 0.0;
  double sd = 0.0;
  double rmse = 0.0;
  int replicates = 0;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  int failed_replicates = 0;
  int total_replicates = 0;
};

StudyResult run_study(const StudyConfig& config);

std::string format_study_csv(const StudyResult& result);

}  // namespace tailtree
