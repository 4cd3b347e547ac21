#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "tailtree/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli() {
  const char* path = std::getenv("TAILTREE_CLI");
  REQUIRE(path != nullptr);
  return path;
}

struct RunResult {
  int exit_code = -1;
  std::string output;
};

RunResult run(const std::string& args) {
  const fs::path tmp = fs::temp_directory_path() / "tailtree_cli_out.txt";
  const std::string command = cli() + " " + args + " > " + tmp.string() + " 2>/dev/null";
  const int status = std::system(command.c_str());
  RunResult result;
  result.exit_code = WEXITSTATUS(status);
  std::ifstream in(tmp);
  std::stringstream buffer;
  buffer << in.rdbuf();
  result.output = buffer.str();
  return result;
}

fs::path sandbox() {
  const fs::path dir = fs::temp_directory_path() / "tailtree_cli_tests";
  fs::create_directories(dir);
  return dir;
}

fs::path write_file(const std::string& name, const std::string& content) {
  const fs::path path = sandbox() / name;
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

const std::string kRiverTree =
    "7\n1 2\n2 3\n2 4\n4 5\n5 6\n5 7\n# latent: 2 5\n";
const std::string kStudyTree =
    "7\n1 2\n2 3\n3 4\n3 5\n1 6\n1 7\n# latent: 1 3\n";
const std::string kStudyTheta = "0.1,0.3,0.8,0.5,0.2,1.2";

int count_lines(const std::string& text) {
  int lines = 0;
  for (char c : text)
    if (c == '\n') ++lines;
  return lines;
}

}  // namespace

TEST_CASE("check-id exit codes") {
  const fs::path river = write_file("river.tree", kRiverTree);
  const RunResult ok = run("check-id " + river.string());
  CHECK(ok.exit_code == 0);
  CHECK(ok.output.find("identifiable: yes") != std::string::npos);

  const fs::path chain = write_file("chain.tree", "3\n1 2\n2 3\n# latent: 2\n");
  const RunResult no = run("check-id " + chain.string());
  CHECK(no.exit_code == 1);
  CHECK(no.output.find("identifiable: no") != std::string::npos);
  CHECK(no.output.find("degree 2") != std::string::npos);

  const fs::path bad = write_file("bad.tree", "3\n1 2\n");
  CHECK(run("check-id " + bad.string()).exit_code == 2);
}

TEST_CASE("simulate is reproducible and honors latent dropping") {
  const fs::path tree = write_file("study.tree", kStudyTree);
  const std::string base =
      "simulate " + tree.string() + " --theta " + kStudyTheta + " --n 50";
  const RunResult a = run(base + " --seed 11");
  const RunResult b = run(base + " --seed 11");
  REQUIRE(a.exit_code == 0);
  CHECK(a.output == b.output);
  CHECK(a.output.substr(0, a.output.find('\n')) == "1,2,3,4,5,6,7");

  const RunResult dropped = run(base + " --seed 11 --drop-latent");
  CHECK(dropped.output.substr(0, dropped.output.find('\n')) == "2,4,5,6,7");

  const RunResult other_seed = run(base + " --seed 12");
  REQUIRE(other_seed.exit_code == 0);
  CHECK(a.output.substr(0, 14) == other_seed.output.substr(0, 14));  // header
  CHECK(a.output != other_seed.output);

  const RunResult empty = run("simulate " + tree.string() + " --theta " +
                              kStudyTheta + " --n 0");
  CHECK(empty.exit_code == 0);
  CHECK(empty.output == "1,2,3,4,5,6,7\n");

  // model file carries theta
  const fs::path model = write_file(
      "model.txt", kRiverTree + "theta: 0.35 0.26 0.58 0.41 0.33 0.54\n");
  CHECK(run("simulate " + model.string() + " --n 5").exit_code == 0);
  // wrong theta length is a usage error
  CHECK(run("simulate " + tree.string() + " --theta 0.1,0.2 --n 5").exit_code == 2);
}

TEST_CASE("fit recovers the generating parameters and round-trips json") {
  const fs::path tree = write_file("study.tree", kStudyTree);
  const fs::path data = sandbox() / "sim.csv";
  const RunResult sim =
      run("simulate " + write_file("study.tree", kStudyTree).string() +
          " --theta " + kStudyTheta +
          " --n 10000 --seed 3 --noise-sigma 1 --drop-latent --out " +
          data.string());
  REQUIRE(sim.exit_code == 0);

  const fs::path report = sandbox() / "fit.json";
  const fs::path tidy = sandbox() / "fit.csv";
  const double truth[6] = {0.1, 0.3, 0.8, 0.5, 0.2, 1.2};
  for (const std::string est : {"mme", "cle", "pooled"}) {
    const RunResult fit = run("fit --data " + data.string() + " --tree " +
                              tree.string() + " --estimator " + est +
                              " --k-grid 100 --k-range 50:150 --out-json " +
                              report.string() + " --out-csv " + tidy.string());
    REQUIRE(fit.exit_code == 0);
    const nlohmann::json report_json = nlohmann::json::parse(slurp(report));
    const auto point = report_json.at("theta").get<std::vector<double>>();
    REQUIRE(point.size() == 6);
    for (int e = 0; e < 6; ++e) CHECK(std::fabs(point[static_cast<std::size_t>(e)] - truth[e]) < 0.15);
    const std::string tidy_text = slurp(tidy);
    CHECK(tidy_text.substr(0, tidy_text.find('\n')) == "estimator,edge,k,theta_hat");
    CHECK(count_lines(tidy_text) == 1 + 6);
  }
  // the pairwise estimator needs the threshold-averaged point estimate to
  // reach the same accuracy
  {
    const RunResult fit = run("fit --data " + data.string() + " --tree " +
                              tree.string() +
                              " --estimator ece --k-grid 100,150,200,300 "
                              "--k-range 100:300 --out-json " +
                              report.string());
    REQUIRE(fit.exit_code == 0);
    const nlohmann::json report_json = nlohmann::json::parse(slurp(report));
    const auto point = report_json.at("theta").get<std::vector<double>>();
    for (int e = 0; e < 6; ++e) CHECK(std::fabs(point[static_cast<std::size_t>(e)] - truth[e]) < 0.15);
  }

  // fit json serves as a model for the coefficient table, byte stable
  const RunResult once = run("coeffs --model " + report.string());
  const RunResult twice = run("coeffs --model " + report.string());
  REQUIRE(once.exit_code == 0);
  CHECK(once.output == twice.output);

  // mismatched columns
  const fs::path wrong = write_file("wrong.csv", "9,10\n1.0,2.0\n");
  CHECK(run("fit --data " + wrong.string() + " --tree " + tree.string() +
            " --k-range 1:5")
            .exit_code == 2);

  // unidentifiable latent set
  CHECK(run("fit --data " + data.string() + " --tree " + tree.string() +
            " --latent 4 --k-range 50:150")
            .exit_code == 1);

  // asymptotic intervals demand the pairwise estimator
  CHECK(run("fit --data " + data.string() + " --tree " + tree.string() +
            " --estimator mme --k-grid 100 --k-range 50:150 --asymptotic")
            .exit_code == 2);
  const RunResult asym = run("fit --data " + data.string() + " --tree " +
                             tree.string() +
                             " --estimator ece --k-grid 100 --k-range 50:150 "
                             "--asymptotic --out-json " +
                             report.string());
  CHECK(asym.exit_code == 0);
  CHECK(slurp(report).find("asymptotic_ci") != std::string::npos);
}

TEST_CASE("coeffs reports model values for latent sets and empirical for data") {
  const fs::path model = write_file(
      "model.txt", kRiverTree + "theta: 0.35 0.26 0.58 0.41 0.33 0.54\n");
  const fs::path data = sandbox() / "river_sim.csv";
  REQUIRE(run("simulate " + model.string() +
              " --n 4000 --seed 5 --drop-latent --out " + data.string())
              .exit_code == 0);

  const RunResult pairs =
      run("coeffs --model " + model.string() + " --data " + data.string() + " --k 200");
  REQUIRE(pairs.exit_code == 0);
  CHECK(count_lines(pairs.output) == 1 + 21);  // header + C(7,2)

  std::istringstream lines(pairs.output);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "nodes,size,model,empirical,chi_model,chi_empirical");
  bool saw_latent_na = false, saw_observed_value = false;
  while (std::getline(lines, line)) {
    const auto c1 = line.find(',');
    const auto nodes = line.substr(0, c1);
    std::istringstream fields(line);
    std::string field;
    std::vector<std::string> cells;
    while (std::getline(fields, field, ',')) cells.push_back(field);
    if (nodes == "1-2" || nodes == "2-5") {
      CHECK(!cells[2].empty());  // model value always present
      CHECK(cells[3].empty());   // empirical unavailable for latent nodes
      saw_latent_na = true;
    }
    if (nodes == "1-4") {
      CHECK(!cells[3].empty());
      saw_observed_value = true;
    }
  }
  CHECK(saw_latent_na);
  CHECK(saw_observed_value);

  const RunResult triples = run("coeffs --model " + model.string() + " --sets triples");
  CHECK(count_lines(triples.output) == 1 + 35);  // header + C(7,3)

  const fs::path lam = sandbox() / "coeffs.json";
  REQUIRE(run("coeffs --model " + model.string() + " --out-json " + lam.string())
              .exit_code == 0);
  const nlohmann::json j = nlohmann::json::parse(slurp(lam));
  REQUIRE(j.at("lambda").size() == 7);
  CHECK(j.at("lambda")[0][0].get<double>() == 0.0);
  CHECK(j.at("lambda")[0][1].get<double>() ==
        doctest::Approx(0.25 * 0.35 * 0.35).epsilon(1e-12));
  CHECK(j.at("coefficients").size() == 21);
}

TEST_CASE("pickands table shape and properties") {
  const fs::path model = write_file(
      "model.txt", kRiverTree + "theta: 0.35 0.26 0.58 0.41 0.33 0.54\n");
  const fs::path data = sandbox() / "river_sim2.csv";
  REQUIRE(run("simulate " + model.string() +
              " --n 2000 --seed 6 --drop-latent --out " + data.string())
              .exit_code == 0);

  const RunResult base = run("pickands --model " + model.string() + " --data " +
                             data.string() + " --pair 1,4 --k 100 --grid 21");
  REQUIRE(base.exit_code == 0);
  std::istringstream lines(base.output);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "w,A_model,A_empirical");
  std::vector<double> a_model;
  while (std::getline(lines, line)) {
    std::istringstream fields(line);
    std::string w_str, a_str;
    std::getline(fields, w_str, ',');
    std::getline(fields, a_str, ',');
    a_model.push_back(std::stod(a_str));
  }
  REQUIRE(a_model.size() == 21);
  CHECK(a_model.front() == 1.0);
  CHECK(a_model.back() == 1.0);
  for (std::size_t i = 1; i + 1 < a_model.size(); ++i)
    CHECK(a_model[i + 1] - 2.0 * a_model[i] + a_model[i - 1] >= -1e-9);

  const RunResult banded =
      run("pickands --model " + model.string() + " --data " + data.string() +
          " --pair 1,4 --k 100 --grid 5 --band-B 500 --seed 4");
  REQUIRE(banded.exit_code == 0);
  CHECK(banded.output.substr(0, banded.output.find('\n')) ==
        "w,A_model,A_empirical,band_lo,band_hi");

  // latent pair has no empirical curve
  CHECK(run("pickands --model " + model.string() + " --data " + data.string() +
            " --pair 2,5 --k 100")
            .exit_code == 2);
  // model-only curves for latent pairs are fine
  CHECK(run("pickands --model " + model.string() + " --pair 2,5").exit_code == 0);
}

TEST_CASE("pipeline produces a deterministic event table") {
  std::ostringstream csv;
  csv << "timestamp,ga,gb\n";
  // two years of synthetic daily readings with occasional gaps
  std::uint64_t state = 12345;
  auto next_unit = [&]() {
    state = state * 6364136223846793005ull + 1442695040888963407ull;
    return static_cast<double>(state >> 11) * 0x1.0p-53;
  };
  tailtree::Day day = tailtree::day_of(tailtree::parse_timestamp("2001-01-01"));
  for (int i = 0; i < 730; ++i) {
    day += (next_unit() < 0.05) ? 2 : 1;
    csv << tailtree::format_day(day) << "T06:00," << 100.0 + 50.0 * next_unit();
    if (next_unit() < 0.1)
      csv << ",\n";
    else
      csv << "," << 200.0 + 30.0 * next_unit() << "\n";
  }
  const fs::path input = write_file("gauges.csv", csv.str());
  const fs::path out1 = sandbox() / "events1.csv";
  const fs::path out2 = sandbox() / "events2.csv";
  REQUIRE(run("pipeline --input " + input.string() + " --out " + out1.string())
              .exit_code == 0);
  REQUIRE(run("pipeline --input " + input.string() + " --out " + out2.string())
              .exit_code == 0);
  const std::string first = slurp(out1);
  CHECK(first == slurp(out2));
  CHECK(first.substr(0, first.find('\n')) == "event_date,ga,gb");
  CHECK(count_lines(first) > 50);

  const RunResult raw = run("pipeline --input " + input.string() + " --no-detrend");
  CHECK(raw.exit_code == 0);
}

TEST_CASE("study csv output and degenerate replicate count") {
  const RunResult tiny =
      run("study --reps 2 --n 400 --k-grid 25,50 --seed 2 --estimators mme");
  REQUIRE(tiny.exit_code == 0);
  CHECK(tiny.output.substr(0, tiny.output.find('\n')) ==
        "estimator,edge,k,bias,sd,rmse,replicates");
  CHECK(count_lines(tiny.output) == 1 + 6 * 2);

  const RunResult again =
      run("study --reps 2 --n 400 --k-grid 25,50 --seed 2 --estimators mme");
  CHECK(tiny.output == again.output);

  const RunResult single =
      run("study --reps 1 --n 400 --k-grid 25 --seed 5 --estimators mme");
  REQUIRE(single.exit_code == 0);
  std::istringstream lines(single.output);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    std::istringstream fields(line);
    std::string cell;
    for (int c = 0; c <= 4; ++c) std::getline(fields, cell, ',');
    CHECK(cell == "0");  // sd column
  }
}
