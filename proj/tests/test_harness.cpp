#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "telecoupler/harness.hpp"

using namespace telecoupler;

namespace {

// Blank out the trailing runtime_seconds column of a sweep CSV; wall time is
// the one field that legitimately varies between reruns.
std::string mask_runtime_column(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!header) {
      auto pos = line.rfind(',');
      if (pos != std::string::npos) line = line.substr(0, pos) + ",<runtime>";
    }
    header = false;
    out << line << '\n';
  }
  return out.str();
}

}  // namespace

TEST_SUITE_BEGIN("harness");

TEST_CASE("bounds table experiment") {
  ExperimentConfig config;
  config.experiment = ExperimentKind::bounds_table;
  config.zeta = 1.0;
  config.t_stars = {16.0, 64.0, 256.0, 1024.0};
  std::vector<BoundReport> rows = run_bounds_table(config);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK(r.main_rhs > 0.0);
    CHECK(r.L_star == doctest::Approx(std::sqrt(r.T_star)).epsilon(1e-12));
  }
  // deterministic serialization
  CHECK(bounds_to_csv(rows) == bounds_to_csv(run_bounds_table(config)));
  CHECK(bounds_to_json(rows) == bounds_to_json(run_bounds_table(config)));
}

TEST_CASE("kmt gap experiment") {
  ExperimentConfig config;
  config.experiment = ExperimentKind::kmt_gap;
  config.gap_lengths = {16, 64, 256};
  config.replicates = 150;
  config.seed = 5;
  GapResult result = run_kmt_gap(config);
  REQUIRE(result.rows.size() == 6);
  for (const auto& r : result.rows) CHECK(r.median_gap > 0.0);
  CHECK(result.exponent_dyadic < result.exponent_quantile);
  // byte-deterministic rerun
  CHECK(gap_to_jsonl(result) == gap_to_jsonl(run_kmt_gap(config)));
  CHECK(gap_to_csv(result) == gap_to_csv(run_kmt_gap(config)));
}

TEST_CASE("convergence sweep smoke") {
  ExperimentConfig config;
  config.experiment = ExperimentKind::convergence_sweep;
  config.zeta = 1.0;
  config.t_stars = {4.0, 8.0, 16.0, 32.0};
  config.replicates = 300;
  config.seed = 9;
  SweepResult result = run_convergence_sweep(config);
  REQUIRE(result.rows.size() == 4);
  for (const auto& r : result.rows) {
    CHECK(std::isfinite(r.w2_upper_coinflip_chain.point));
    CHECK(r.w2_upper_coinflip_chain.point > 0.0);
    CHECK(r.w2_upper_independent.point > 0.0);
    CHECK(r.w2_lower.point >= 0.0);
    CHECK(r.runtime_seconds > 0.0);
  }
  CHECK(result.sandwich_ok);
  CHECK(result.slope < 0.0);

  // reports agree between reruns up to the wall-clock column
  SweepResult again = run_convergence_sweep(config);
  CHECK(mask_runtime_column(sweep_to_csv(result)) == mask_runtime_column(sweep_to_csv(again)));

  config.t_stars = {4.0, 8.0};
  CHECK_THROWS_AS(run_convergence_sweep(config), std::invalid_argument);
}

TEST_CASE("verification suites pass at reduced scale") {
  ExperimentConfig config;
  config.seed = 12;
  config.replicates = 20000;
  for (const auto& c : run_moment_verification(config)) {
    INFO(c.name, ": ", c.statistic, " vs ", c.threshold);
    CHECK(c.pass);
  }
  for (const auto& c : run_coupling_verification(config)) {
    INFO(c.name, ": ", c.statistic, " vs ", c.threshold);
    CHECK(c.pass);
  }
}

TEST_CASE("csv quoting and check serialization") {
  std::vector<CheckResult> checks{{"a", "uses \"quotes\", and, commas", 1.0, 2.0, true}};
  std::string csv = checks_to_csv(checks);
  CHECK(csv.find("\"uses \"\"quotes\"\", and, commas\"") != std::string::npos);
  CHECK(csv.find(",true") != std::string::npos);
}

TEST_CASE("run_experiment writes the report file") {
  ExperimentConfig config;
  config.experiment = ExperimentKind::bounds_table;
  config.t_stars = {16.0, 64.0, 256.0, 1024.0};
  config.output = "bounds_report_test.csv";
  config.format = ReportFormat::csv;
  CHECK(run_experiment(config) == 0);
  std::ifstream in(config.output);
  REQUIRE(in.good());
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "T_star,L_star,main_rhs,crude_rhs,coinflip_rhs,synchronous_rhs,kmt_rhs,C,k1,k2,k3");
  in.close();
  std::remove(config.output.c_str());
}

TEST_SUITE_END();
