#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "telecoupler/bounds.hpp"
#include "telecoupler/path.hpp"
#include "telecoupler/transport.hpp"

namespace telecoupler {

enum class ExperimentKind { verify_moments, verify_couplings, convergence_sweep, kmt_gap, bounds_table };
enum class ReportFormat { csv, json };

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::verify_moments;
  double zeta = 1.0;
  std::vector<double> t_stars = {16.0, 64.0, 256.0, 1024.0};
  ScalingParams params;  // model scales; the verify suites pin their own desk-scale points
  long long replicates = 0;  // 0 selects the per-experiment default
  std::uint64_t seed = 1;
  std::string output;  // empty writes to stdout
  ReportFormat format = ReportFormat::csv;
  std::map<std::string, double> constants;        // C, k1, k2, k3 (default 1)
  std::vector<long long> gap_lengths;             // kmt-gap walk lengths
};

/// One named verification check: a statistic compared against a threshold.
/// `formula` states the closed form or identity being checked.
struct CheckResult {
  std::string name;
  std::string formula;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

struct SweepRow {
  double T_star = 0.0;
  double L_star = 0.0;
  EstimateWithCI w2_upper_coinflip_chain;
  EstimateWithCI w2_upper_independent;
  EstimateWithCI w2_lower;
  double main_rhs = 0.0;
  double crude_rhs = 0.0;
  double runtime_seconds = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  double slope = 0.0;
  double slope_stderr = 0.0;
  bool sandwich_ok = false;
};

struct GapRow {
  long long n = 0;
  std::string mode;
  double median_gap = 0.0;
  long long replicates = 0;
};

struct GapResult {
  std::vector<GapRow> rows;
  double exponent_quantile = 0.0;
  double exponent_dyadic = 0.0;
};

/// Moment identities and analytic-bound checks for the samplers, the flip
/// path and the simplex measure.
std::vector<CheckResult> run_moment_verification(const ExperimentConfig& config);

/// Marginal audits for the coupling samplers plus the exact interpolation
/// and increment identities.
std::vector<CheckResult> run_coupling_verification(const ExperimentConfig& config);

/// Transport estimates across the scaling sweep T* -> infinity at fixed
/// zeta = T*/L*^2, including the fitted log-log slope of the chain upper
/// estimate.
SweepResult run_convergence_sweep(const ExperimentConfig& config);

/// Median max-partial-sum gap of the coupled walks per mode and walk length,
/// with fitted growth exponents.
GapResult run_kmt_gap(const ExperimentConfig& config);

/// Analytic bound table over the sweep points.
std::vector<BoundReport> run_bounds_table(const ExperimentConfig& config);

/// Run the configured experiment and write its report. Returns the process
/// exit code: 0 iff every check passed (or the experiment completed with
/// consistent rows).
int run_experiment(const ExperimentConfig& config);

// Report writers; all output is byte-deterministic given the result values.
std::string checks_to_csv(const std::vector<CheckResult>& checks);
std::string checks_to_json(const std::vector<CheckResult>& checks);
std::string sweep_to_csv(const SweepResult& result);
std::string sweep_to_json(const SweepResult& result);
std::string gap_to_csv(const GapResult& result);
std::string gap_to_jsonl(const GapResult& result);
std::string bounds_to_csv(const std::vector<BoundReport>& rows);
std::string bounds_to_json(const std::vector<BoundReport>& rows);

}  // namespace telecoupler
