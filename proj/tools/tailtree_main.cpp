// tailtree: fit, simulate, and query tree-structured tail dependence models.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "tailtree/csv.hpp"
#include "tailtree/estimate.hpp"
#include "tailtree/inference.hpp"
#include "tailtree/model.hpp"
#include "tailtree/pipeline.hpp"
#include "tailtree/rng.hpp"
#include "tailtree/simulate.hpp"
#include "tailtree/study.hpp"

using nlohmann::json;
using namespace tailtree;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;   // identifiability or other domain negatives
constexpr int kExitUsage = 2;    // configuration and parse problems
constexpr int kExitNumeric = 3;  // estimation or numeric failures

int classify(const Error& e) {
  if (dynamic_cast<const NotIdentifiable*>(&e)) return kExitDomain;
  if (dynamic_cast<const RankDeficientPairs*>(&e)) return kExitDomain;
  if (dynamic_cast<const ParseError*>(&e) ||
      dynamic_cast<const UnparseableTimestamp*>(&e) ||
      dynamic_cast<const DimensionMismatch*>(&e) ||
      dynamic_cast<const NodeOutOfRange*>(&e) ||
      dynamic_cast<const SelfLoop*>(&e) ||
      dynamic_cast<const DuplicateEdge*>(&e) ||
      dynamic_cast<const CycleOrDisconnected*>(&e) ||
      dynamic_cast<const NonPositiveInput*>(&e))
    return kExitUsage;
  return kExitNumeric;
}

std::vector<int> parse_id_list(const std::string& text) {
  std::vector<int> out;
  std::string token;
  std::istringstream ss(text);
  while (std::getline(ss, token, ','))
    if (!token.empty()) out.push_back(std::stoi(token));
  return out;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> out;
  std::string token;
  std::istringstream ss(text);
  while (std::getline(ss, token, ','))
    if (!token.empty()) out.push_back(std::stod(token));
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot write: " + path);
  out << text;
}

struct LoadedModel {
  HRTreeModel model;
  NodeSet latent;
};

/// Accepts a model text file or a fit report in JSON form.
LoadedModel load_model_any(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open model: " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ParseError("invalid json in " + path);
    const auto& jt = j.at("tree");
    std::vector<NodePair> edges;
    for (const auto& e : jt.at("edges"))
      edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
    Tree tree(jt.at("d").get<int>(), edges);
    std::vector<int> latent = jt.value("latent", std::vector<int>{});
    const auto theta_values = j.at("theta").get<std::vector<double>>();
    Eigen::VectorXd theta(static_cast<Eigen::Index>(theta_values.size()));
    for (std::size_t i = 0; i < theta_values.size(); ++i)
      theta(static_cast<Eigen::Index>(i)) = theta_values[i];
    return LoadedModel{HRTreeModel(std::move(tree), std::move(theta)),
                       NodeSet(std::move(latent))};
  }
  std::istringstream ss(text);
  ModelFile mf = read_model_file(ss);
  return LoadedModel{std::move(mf.model), std::move(mf.latent)};
}

ObservedData load_observed_csv(const std::string& path,
                               const std::vector<int>& nodes) {
  const CsvTable csv = read_csv_file(path);
  std::vector<int> col_of;
  for (int node : nodes) {
    const std::string wanted = std::to_string(node);
    int found = -1;
    for (std::size_t c = 0; c < csv.header.size(); ++c)
      if (csv.header[c] == wanted) found = static_cast<int>(c);
    if (found < 0)
      throw DimensionMismatch("data is missing a column named '" + wanted + "'");
    col_of.push_back(found);
  }
  ObservedData data;
  data.nodes = nodes;
  data.values.resize(static_cast<Eigen::Index>(csv.rows.size()),
                     static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t i = 0; i < csv.rows.size(); ++i) {
    for (std::size_t j = 0; j < col_of.size(); ++j) {
      const auto& field = csv.rows[i].at(static_cast<std::size_t>(col_of[j]));
      data.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          field.empty() ? std::numeric_limits<double>::quiet_NaN()
                        : parse_csv_double(field);
    }
  }
  return data;
}

json theta_to_json(const Eigen::VectorXd& theta) {
  json out = json::array();
  for (Eigen::Index e = 0; e < theta.size(); ++e) out.push_back(theta(e));
  return out;
}

json tree_to_json(const Tree& tree, const NodeSet& latent) {
  json edges = json::array();
  for (const auto& [a, b] : tree.edges()) edges.push_back({a, b});
  return json{{"d", tree.node_count()},
              {"edges", edges},
              {"latent", latent.ids()}};
}

// ---------------------------------------------------------------- check-id

int cmd_check_id(const std::string& tree_path, const std::string& latent_arg) {
  TreeFile tf = read_tree_file(tree_path);
  NodeSet latent = latent_arg.empty() ? tf.latent : NodeSet(parse_id_list(latent_arg));
  for (int v : latent.ids()) tf.tree.require_node(v);
  const NodeSet observed = latent.complement(tf.tree.node_count());
  if (observed.empty()) throw NodeOutOfRange("every node is latent");

  const DegreeCheck check = check_identifiability_degree(tf.tree, observed);
  std::cout << "nodes: " << tf.tree.node_count() << "\n";
  std::cout << "latent:";
  for (int v : latent.ids()) std::cout << " " << v;
  std::cout << "\nidentifiable: " << (check.identifiable ? "yes" : "no") << "\n";
  if (!check.identifiable) {
    for (const auto& [node, degree] : check.violations)
      std::cout << "violation: node " << node << " has degree " << degree << "\n";
    return kExitDomain;
  }
  const ExtractionPlan plan = extraction_plan(tf.tree, observed);
  for (int e = 0; e < tf.tree.edge_count(); ++e) {
    const auto [a, b] = tf.tree.edge(e);
    std::cout << "edge " << a << "-" << b << ": theta^2 =";
    bool first = true;
    for (const auto& term : plan.per_edge[static_cast<std::size_t>(e)]) {
      std::cout << (term.coeff < 0 ? " - " : (first ? " " : " + "))
                << std::fabs(term.coeff) << "*p(" << term.pair.first << ","
                << term.pair.second << ")";
      first = false;
    }
    std::cout << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(const std::string& tree_path, const std::string& theta_arg,
                 int n, int root, double noise_sigma, std::uint64_t seed,
                 const std::string& out, bool drop_latent,
                 const std::string& latent_arg) {
  std::optional<LoadedModel> loaded;
  try {
    loaded = load_model_any(tree_path);
  } catch (const ParseError&) {
    loaded.reset();
  }
  Tree tree = loaded ? loaded->model.tree() : read_tree_file(tree_path).tree;
  NodeSet latent = loaded ? loaded->latent : read_tree_file(tree_path).latent;
  if (!latent_arg.empty()) latent = NodeSet(parse_id_list(latent_arg));

  Eigen::VectorXd theta;
  if (!theta_arg.empty()) {
    const auto values = parse_double_list(theta_arg);
    theta.resize(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i)
      theta(static_cast<Eigen::Index>(i)) = values[i];
  } else if (loaded) {
    theta = loaded->model.theta();
  } else {
    throw DimensionMismatch("provide --theta or a model file with a theta line");
  }
  const HRTreeModel model(tree, theta);

  Eigen::MatrixXd draws = sample_markov_tree(model, root, n, seed);
  draws = add_noise(draws, noise_sigma, mix64(seed + 1));

  std::vector<int> keep;
  for (int v = 1; v <= tree.node_count(); ++v)
    if (!drop_latent || !latent.contains(v)) keep.push_back(v);

  std::ostringstream text;
  for (std::size_t i = 0; i < keep.size(); ++i)
    text << (i ? "," : "") << keep[i];
  text << "\n";
  for (Eigen::Index row = 0; row < draws.rows(); ++row) {
    for (std::size_t i = 0; i < keep.size(); ++i)
      text << (i ? "," : "") << format_csv_double(draws(row, keep[i] - 1));
    text << "\n";
  }
  write_text(out, text.str());
  return kExitOk;
}

// --------------------------------------------------------------------- fit

struct FitOptions {
  std::string data_path;
  std::string tree_path;
  std::string latent_arg;
  std::string estimator = "mme";
  std::string k_grid_arg;
  std::string k_range_arg;
  int plan_radius = 2;
  int bootstrap_b = 0;
  bool asymptotic = false;
  std::uint64_t seed = 1;
  std::string out_json;
  std::string out_csv;
};

Eigen::VectorXd fit_one(const std::string& estimator, const ObservedData& data,
                        const Tree& tree, const NodeSet& observed, int k,
                        const NeighborhoodPlan& plan,
                        const std::vector<NodePair>& pairs,
                        EstimateResult* detail = nullptr) {
  if (estimator == "mme") {
    EstimateResult r = mme(data, tree, observed, k, plan);
    if (detail) *detail = r;
    return r.theta_hat;
  }
  if (estimator == "cle") {
    const Eigen::VectorXd init = mme(data, tree, observed, k, plan).theta_hat;
    EstimateResult r = cle(data, tree, observed, k, plan, init);
    if (detail) *detail = r;
    return r.theta_hat;
  }
  if (estimator == "ece") {
    EstimateResult r = ece(data, tree, observed, k, pairs);
    if (detail) *detail = r;
    return r.theta_hat;
  }
  if (estimator == "pooled") {
    const Eigen::VectorXd m = mme(data, tree, observed, k, plan).theta_hat;
    EstimateResult r = cle(data, tree, observed, k, plan, m);
    if (detail) {
      *detail = r;
      detail->estimator = "pooled";
    }
    return 0.5 * (m + r.theta_hat);
  }
  throw DimensionMismatch("unknown estimator: " + estimator);
}

int cmd_fit(const FitOptions& opt) {
  TreeFile tf = read_tree_file(opt.tree_path);
  NodeSet latent =
      opt.latent_arg.empty() ? tf.latent : NodeSet(parse_id_list(opt.latent_arg));
  const NodeSet observed = latent.complement(tf.tree.node_count());
  if (observed.empty()) throw NodeOutOfRange("every node is latent");
  const DegreeCheck check = check_identifiability_degree(tf.tree, observed);
  if (!check.identifiable)
    throw NotIdentifiable("the latent set is not identifiable");

  std::vector<int> k_grid{25, 50, 100, 150, 200, 300};
  if (!opt.k_grid_arg.empty()) k_grid = parse_id_list(opt.k_grid_arg);
  if (opt.k_range_arg.empty())
    throw DimensionMismatch("--k-range lo:hi is required");
  int k_lo = 0, k_hi = 0;
  {
    const auto colon = opt.k_range_arg.find(':');
    if (colon == std::string::npos)
      throw DimensionMismatch("--k-range must look like lo:hi");
    k_lo = std::stoi(opt.k_range_arg.substr(0, colon));
    k_hi = std::stoi(opt.k_range_arg.substr(colon + 1));
  }

  const ObservedData data = load_observed_csv(opt.data_path, observed.ids());
  const int n = static_cast<int>(data.values.rows());
  for (int k : k_grid)
    if (k < 1 || k > n)
      throw DimensionMismatch("k = " + std::to_string(k) +
                              " is outside [1, n = " + std::to_string(n) + "]");

  const NeighborhoodPlan plan =
      default_neighborhoods(tf.tree, observed, opt.plan_radius);
  const std::vector<NodePair> pairs = observable_pairs(observed);

  json per_k = json::array();
  std::ostringstream tidy;
  tidy << "estimator,edge,k,theta_hat\n";
  Eigen::VectorXd point = Eigen::VectorXd::Zero(tf.tree.edge_count());
  int in_range = 0;
  int dropped = 0;

  for (int k : k_grid) {
    EstimateResult detail;
    const Eigen::VectorXd theta =
        fit_one(opt.estimator, data, tf.tree, observed, k, plan, pairs, &detail);
    dropped = detail.dropped_rows;
    json entry{{"k", k},
               {"theta", theta_to_json(theta)},
               {"objective", detail.objective_value},
               {"convergence", detail.convergence}};
    json counts = json::object();
    for (const auto& [node, count] : detail.exceedance_counts)
      counts[std::to_string(node)] = count;
    entry["exceedances"] = counts;

    const bool in = (k >= k_lo && k <= k_hi);
    if (in) {
      point += theta;
      ++in_range;
    }

    if (in && opt.bootstrap_b > 0) {
      const auto refit = [&](const ObservedData& resample) {
        return fit_one(opt.estimator, resample, tf.tree, observed, k, plan, pairs);
      };
      const CIResult ci = basic_bootstrap_ci(refit, data, theta, opt.bootstrap_b,
                                             0.95, mix64(opt.seed + k));
      json intervals = json::array();
      for (int e = 0; e < tf.tree.edge_count(); ++e)
        intervals.push_back({{"edge", e + 1},
                             {"lower", ci.edges[static_cast<std::size_t>(e)].lower},
                             {"upper", ci.edges[static_cast<std::size_t>(e)].upper},
                             {"method", ci.method},
                             {"B", opt.bootstrap_b}});
      entry["ci"] = intervals;
      entry["failed_replicates"] = ci.failed_replicates;
    }
    if (in && opt.asymptotic) {
      if (opt.estimator != "ece")
        throw DimensionMismatch("--asymptotic is only valid with --estimator ece");
      const HRTreeModel fitted(tf.tree, theta);
      const Eigen::MatrixXd sigma_l =
          bootstrap_sigma_l(data, pairs, k, 500, mix64(opt.seed + 7 * k));
      const CIResult ci = ece_asymptotic_ci(fitted, pairs, k, 0.95, sigma_l);
      json intervals = json::array();
      for (int e = 0; e < tf.tree.edge_count(); ++e)
        intervals.push_back({{"edge", e + 1},
                             {"lower", ci.edges[static_cast<std::size_t>(e)].lower},
                             {"upper", ci.edges[static_cast<std::size_t>(e)].upper},
                             {"method", ci.method}});
      entry["asymptotic_ci"] = intervals;
    }
    per_k.push_back(entry);
    for (int e = 0; e < tf.tree.edge_count(); ++e)
      tidy << opt.estimator << "," << e + 1 << "," << k << ","
           << format_csv_double(theta(e)) << "\n";
  }
  if (in_range == 0)
    throw DimensionMismatch("no k-grid value falls inside the k-range");
  point /= static_cast<double>(in_range);

  json report{{"tree", tree_to_json(tf.tree, latent)},
              {"estimator", opt.estimator},
              {"k_grid", k_grid},
              {"k_range", {k_lo, k_hi}},
              {"n", n},
              {"dropped_rows", dropped},
              {"seed", opt.seed},
              {"per_k", per_k},
              {"theta", theta_to_json(point)}};
  write_text(opt.out_json, report.dump(2) + "\n");
  if (!opt.out_csv.empty()) write_text(opt.out_csv, tidy.str());
  return kExitOk;
}

// ------------------------------------------------------------------ coeffs

int cmd_coeffs(const std::string& model_path, const std::string& data_path,
               const std::string& sets, int k, const std::string& out,
               const std::string& out_json) {
  const LoadedModel loaded = load_model_any(model_path);
  const Tree& tree = loaded.model.tree();
  const NodeSet observed = loaded.latent.complement(tree.node_count());

  std::optional<ObservedData> data;
  if (!data_path.empty()) {
    if (k < 1) throw DimensionMismatch("--k is required with --data");
    data = load_observed_csv(data_path, observed.ids());
  }

  std::vector<std::vector<int>> groups;
  const bool pairs_wanted = sets == "pairs" || sets == "all";
  const bool triples_wanted = sets == "triples" || sets == "all";
  if (!pairs_wanted && !triples_wanted)
    throw DimensionMismatch("--sets must be pairs, triples, or all");
  const int d = tree.node_count();
  if (pairs_wanted)
    for (int a = 1; a <= d; ++a)
      for (int b = a + 1; b <= d; ++b) groups.push_back({a, b});
  if (triples_wanted)
    for (int a = 1; a <= d; ++a)
      for (int b = a + 1; b <= d; ++b)
        for (int c = b + 1; c <= d; ++c) groups.push_back({a, b, c});

  std::ostringstream text;
  text << "nodes,size,model,empirical,chi_model,chi_empirical\n";
  json rows = json::array();
  for (const auto& group : groups) {
    const NodeSet j_set(group);
    std::string label;
    for (std::size_t i = 0; i < group.size(); ++i)
      label += (i ? "-" : "") + std::to_string(group[i]);
    const double model_value = extremal_coefficient(loaded.model, j_set);
    bool all_observed = true;
    for (int v : group)
      if (!observed.contains(v)) all_observed = false;

    text << label << "," << group.size() << ","
         << format_csv_double(model_value) << ",";
    std::optional<double> empirical;
    if (data && all_observed)
      empirical = empirical_extremal_coefficient(*data, j_set, k);
    if (empirical) text << format_csv_double(*empirical);
    text << ",";
    if (group.size() == 2)
      text << format_csv_double(
          tail_dep_coefficient(loaded.model, group[0], group[1]));
    text << ",";
    if (group.size() == 2 && empirical)
      text << format_csv_double(2.0 - *empirical);
    text << "\n";

    if (!out_json.empty()) {
      json row{{"nodes", group}, {"model", model_value}};
      if (empirical) row["empirical"] = *empirical;
      if (group.size() == 2) {
        row["chi_model"] = tail_dep_coefficient(loaded.model, group[0], group[1]);
        if (empirical) row["chi_empirical"] = 2.0 - *empirical;
      }
      rows.push_back(std::move(row));
    }
  }
  write_text(out, text.str());
  if (!out_json.empty()) {
    const Eigen::MatrixXd lambda = lambda_matrix(loaded.model);
    json lambda_json = json::array();
    for (Eigen::Index i = 0; i < lambda.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < lambda.cols(); ++j) row.push_back(lambda(i, j));
      lambda_json.push_back(std::move(row));
    }
    const json report{{"tree", tree_to_json(tree, loaded.latent)},
                      {"theta", theta_to_json(loaded.model.theta())},
                      {"lambda", lambda_json},
                      {"coefficients", rows}};
    write_text(out_json, report.dump(2) + "\n");
  }
  return kExitOk;
}

// ---------------------------------------------------------------- pickands

int cmd_pickands(const std::string& model_path, const std::string& data_path,
                 const std::string& pair_arg, int k, int grid_points,
                 int band_b, double level, std::uint64_t seed,
                 const std::string& out) {
  const LoadedModel loaded = load_model_any(model_path);
  const auto pair_ids = parse_id_list(pair_arg);
  if (pair_ids.size() != 2)
    throw DimensionMismatch("--pair must name two nodes, e.g. 1,4");
  const int u = pair_ids[0], v = pair_ids[1];
  loaded.model.tree().require_node(u);
  loaded.model.tree().require_node(v);
  if (grid_points < 3) throw DimensionMismatch("--grid needs at least 3 points");

  std::optional<ObservedData> data;
  if (!data_path.empty()) {
    const NodeSet observed = loaded.latent.complement(loaded.model.tree().node_count());
    if (!observed.contains(u) || !observed.contains(v))
      throw DimensionMismatch("empirical curve needs an observed pair");
    if (k < 1) throw DimensionMismatch("--k is required with --data");
    data = load_observed_csv(data_path, {u, v});
  }

  std::vector<double> grid(static_cast<std::size_t>(grid_points));
  for (int i = 0; i < grid_points; ++i)
    grid[static_cast<std::size_t>(i)] = static_cast<double>(i) / (grid_points - 1);

  std::optional<PickandsBand> band;
  if (band_b > 0) {
    if (!data) throw DimensionMismatch("--band-B needs --data");
    band = pickands_bootstrap_band(*data, u, v, k, grid, band_b, level, seed);
  }

  std::ostringstream text;
  text << "w,A_model,A_empirical";
  if (band) text << ",band_lo,band_hi";
  text << "\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    text << format_csv_double(grid[i]) << ","
         << format_csv_double(pickands(loaded.model, u, v, grid[i])) << ",";
    if (data) text << format_csv_double(empirical_pickands(*data, u, v, grid[i], k));
    if (band)
      text << "," << format_csv_double(band->lower[i]) << ","
           << format_csv_double(band->upper[i]);
    text << "\n";
  }
  write_text(out, text.str());
  return kExitOk;
}

// ---------------------------------------------------------------- pipeline

int cmd_pipeline(const std::string& input, const std::string& out, int window_r,
                 bool no_detrend) {
  const TimeSeriesTable raw = read_timeseries_csv(input);
  const TimeSeriesTable daily = daily_average(raw);
  EventTable events = decluster(daily, window_r);
  std::cerr << "daily rows: " << daily.times.size()
            << ", events: " << events.dates.size() << "\n";
  if (!no_detrend) events = deseasonalize(events);
  write_text(out, format_event_csv(events));
  return kExitOk;
}

// ------------------------------------------------------------------- study

int cmd_study(const std::string& tree_path, const std::string& theta_arg,
              const std::string& latent_arg, int reps, int n,
              const std::string& k_grid_arg, double noise_sigma, int root,
              std::uint64_t seed, const std::string& estimators_arg,
              const std::string& out) {
  StudyConfig config = reference_study_config();
  if (!tree_path.empty()) {
    TreeFile tf = read_tree_file(tree_path);
    config.tree = tf.tree;
    config.latent = tf.latent;
    config.theta.resize(0);
  }
  if (!theta_arg.empty()) {
    const auto values = parse_double_list(theta_arg);
    config.theta.resize(static_cast<Eigen::Index>(values.size()));
    for (std::size_t i = 0; i < values.size(); ++i)
      config.theta(static_cast<Eigen::Index>(i)) = values[i];
  }
  if (config.theta.size() == 0)
    throw DimensionMismatch("provide --theta for a custom tree");
  if (!latent_arg.empty()) config.latent = NodeSet(parse_id_list(latent_arg));
  config.reps = reps;
  config.n = n;
  if (!k_grid_arg.empty()) config.k_grid = parse_id_list(k_grid_arg);
  config.noise_sigma = noise_sigma;
  config.root = root;
  config.seed = seed;
  if (!estimators_arg.empty()) {
    config.estimators.clear();
    std::istringstream ss(estimators_arg);
    std::string token;
    while (std::getline(ss, token, ','))
      if (!token.empty()) config.estimators.push_back(token);
  }

  const StudyResult result = run_study(config);
  std::cerr << "replicates: " << result.total_replicates
            << ", failed: " << result.failed_replicates << "\n";
  write_text(out, format_study_csv(result));
  if (result.failed_replicates * 10 > result.total_replicates) {
    std::cerr << "more than 10% of replicates failed\n";
    return kExitNumeric;
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tree-structured tail dependence models"};
  app.require_subcommand(1);

  // check-id
  std::string ci_tree, ci_latent;
  auto* check_id = app.add_subcommand("check-id", "identifiability report");
  check_id->add_option("tree", ci_tree, "tree file")->required();
  check_id->add_option("--latent", ci_latent, "comma-separated latent nodes");

  // simulate
  std::string sim_tree, sim_theta, sim_out, sim_latent;
  int sim_n = 1000, sim_root = 2;
  double sim_noise = 0.0;
  std::uint64_t sim_seed = 1;
  bool sim_drop_latent = false;
  auto* simulate = app.add_subcommand("simulate", "draw from the tree model");
  simulate->add_option("tree", sim_tree, "tree or model file")->required();
  simulate->add_option("--theta", sim_theta, "edge parameters, comma separated");
  simulate->add_option("--latent", sim_latent, "latent node override");
  simulate->add_option("--n", sim_n, "sample size");
  simulate->add_option("--root", sim_root, "sampling root node");
  simulate->add_option("--noise-sigma", sim_noise, "observation noise scale");
  simulate->add_option("--seed", sim_seed, "rng seed");
  simulate->add_option("--out", sim_out, "output csv (default stdout)");
  simulate->add_flag("--drop-latent", sim_drop_latent, "omit latent columns");

  // fit
  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "estimate edge parameters");
  fit_cmd->add_option("--data", fit.data_path, "observation csv")->required();
  fit_cmd->add_option("--tree", fit.tree_path, "tree file")->required();
  fit_cmd->add_option("--latent", fit.latent_arg, "latent node override");
  fit_cmd->add_option("--estimator", fit.estimator, "mme|cle|ece|pooled");
  fit_cmd->add_option("--k-grid", fit.k_grid_arg, "thresholds, comma separated");
  fit_cmd->add_option("--k-range", fit.k_range_arg, "lo:hi averaging range")
      ->required();
  fit_cmd->add_option("--plan-radius", fit.plan_radius, "neighborhood radius");
  fit_cmd->add_option("--bootstrap", fit.bootstrap_b, "basic bootstrap replicates");
  fit_cmd->add_flag("--asymptotic", fit.asymptotic, "normal intervals (ece)");
  fit_cmd->add_option("--seed", fit.seed, "rng seed");
  fit_cmd->add_option("--out-json", fit.out_json, "json report path");
  fit_cmd->add_option("--out-csv", fit.out_csv, "tidy csv path");

  // coeffs
  std::string co_model, co_data, co_sets = "pairs", co_out, co_out_json;
  int co_k = 0;
  auto* coeffs = app.add_subcommand("coeffs", "extremal coefficient tables");
  coeffs->add_option("--model", co_model, "model file or fit json")->required();
  coeffs->add_option("--data", co_data, "observation csv for empirical column");
  coeffs->add_option("--sets", co_sets, "pairs|triples|all");
  coeffs->add_option("--k", co_k, "threshold for the empirical column");
  coeffs->add_option("--out", co_out, "output csv (default stdout)");
  coeffs->add_option("--out-json", co_out_json, "json report with the pairwise dependence matrix");

  // pickands
  std::string pk_model, pk_data, pk_pair, pk_out;
  int pk_k = 0, pk_grid = 101, pk_band = 0;
  double pk_level = 0.95;
  std::uint64_t pk_seed = 1;
  auto* pick = app.add_subcommand("pickands", "dependence function curves");
  pick->add_option("--model", pk_model, "model file or fit json")->required();
  pick->add_option("--data", pk_data, "observation csv");
  pick->add_option("--pair", pk_pair, "two nodes, e.g. 1,4")->required();
  pick->add_option("--k", pk_k, "threshold for the empirical curve");
  pick->add_option("--grid", pk_grid, "grid points on [0,1]");
  pick->add_option("--band-B", pk_band, "bootstrap band replicates");
  pick->add_option("--level", pk_level, "band level");
  pick->add_option("--seed", pk_seed, "rng seed");
  pick->add_option("--out", pk_out, "output csv (default stdout)");

  // pipeline
  std::string pl_input, pl_out;
  int pl_r = 3;
  bool pl_no_detrend = false;
  auto* pipe = app.add_subcommand("pipeline", "daily average, decluster, detrend");
  pipe->add_option("--input", pl_input, "raw time series csv")->required();
  pipe->add_option("--out", pl_out, "event table csv (default stdout)");
  pipe->add_option("--window-r", pl_r, "event window radius in days");
  pipe->add_flag("--no-detrend", pl_no_detrend, "skip the seasonal regression");

  // study
  std::string st_tree, st_theta, st_latent, st_kgrid, st_est, st_out;
  int st_reps = 200, st_n = 1000, st_root = 2;
  double st_noise = 1.0;
  std::uint64_t st_seed = 20230;
  auto* study = app.add_subcommand("study", "replicated estimation study");
  study->add_option("--tree", st_tree, "tree file (default: built-in study tree)");
  study->add_option("--theta", st_theta, "true parameters");
  study->add_option("--latent", st_latent, "latent node override");
  study->add_option("--reps", st_reps, "replicates");
  study->add_option("--n", st_n, "sample size per replicate");
  study->add_option("--k-grid", st_kgrid, "thresholds, comma separated");
  study->add_option("--noise-sigma", st_noise, "observation noise scale");
  study->add_option("--root", st_root, "sampling root node");
  study->add_option("--seed", st_seed, "rng seed");
  study->add_option("--estimators", st_est, "subset of mme,cle,ece,pooled");
  study->add_option("--out", st_out, "output csv (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (check_id->parsed()) return cmd_check_id(ci_tree, ci_latent);
    if (simulate->parsed())
      return cmd_simulate(sim_tree, sim_theta, sim_n, sim_root, sim_noise,
                          sim_seed, sim_out, sim_drop_latent, sim_latent);
    if (fit_cmd->parsed()) return cmd_fit(fit);
    if (coeffs->parsed())
      return cmd_coeffs(co_model, co_data, co_sets, co_k, co_out, co_out_json);
    if (pick->parsed())
      return cmd_pickands(pk_model, pk_data, pk_pair, pk_k, pk_grid, pk_band,
                          pk_level, pk_seed, pk_out);
    if (pipe->parsed()) return cmd_pipeline(pl_input, pl_out, pl_r, pl_no_detrend);
    if (study->parsed())
      return cmd_study(st_tree, st_theta, st_latent, st_reps, st_n, st_kgrid,
                       st_noise, st_root, st_seed, st_est, st_out);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return classify(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
