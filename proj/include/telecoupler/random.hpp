#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace telecoupler {

/// Seeded random stream keyed by (seed, stream_id).
///
/// Equal keys reproduce identical draw sequences; distinct stream_ids give
/// statistically independent streams, so replicates can run one stream per
/// worker without any sequence coordination.
class RngState {
 public:
  explicit RngState(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_; }

  /// Derive an independent child stream, e.g. one per sub-process of a
  /// coupled draw. Deterministic in (seed, stream_id, tag).
  RngState spawn(std::uint64_t tag) const;

  std::uint64_t next_u64();
  /// Uniform strictly inside (0,1), so log and quantile transforms are safe.
  double uniform01();
  /// Uniform on (a,b).
  double uniform(double a, double b);
  /// Standard normal via the inverse CDF.
  double normal01();

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::mt19937_64 engine_;
};

// --- distribution samplers ---------------------------------------------

/// Exp(rate) via the quantile transform -log(u)/rate.
double sample_exponential(RngState& rng, double rate);

/// Quantile (inverse CDF) of Exp(rate) at p in [0,1).
double exponential_quantile(double p, double rate);

/// Poisson with the given mean.
long long sample_poisson(RngState& rng, double mean);

/// Gamma with integer shape >= 1 and rate > 0 (mean shape/rate).
double sample_gamma(RngState& rng, long long shape, double rate);

/// One sample from the uniform distribution on the simplex
/// {u in R_+^n : sum u_k = 1}, generated as n normalized Exp(1) draws.
struct SimplexSample {
  long long n = 0;
  std::vector<double> u;
};
SimplexSample sample_simplex(RngState& rng, long long n);

/// Map a pair of positive values to ((u-v)/(u+v), u+v). Over independent
/// Exp(rate) inputs the first coordinate is Uniform[-1,1], the second is
/// Gamma(2, rate), and the two are independent.
struct UniformGammaPair {
  double ratio;  // in [-1,1]
  double sum;    // > 0
};
UniformGammaPair gamma_uniform_decomposition(double u, double v);

// --- exact moment oracles ----------------------------------------------

/// <u_i^p> under the uniform simplex measure: p! / prod_{k=0}^{p-1}(n+k).
double simplex_moment_exact(long long n, long long p);

/// <u_i u_j>, i != j, n >= 2: 1/(n(n+1)).
double simplex_cross_moment_exact(long long n);

/// Bound on <N^{-p} 1{N>=1}> for N ~ Poisson(lambda): C_p/lambda^p with
/// C_p = 2^{p(p+2)/2}.
double poisson_inverse_moment_bound(double lambda, double p);

/// Logarithmic variant: sqrt(C_{2p}) ln(lambda+3)/lambda^p bounds
/// <N^{-p} ln(N+1) 1{N>=1}>.
double poisson_inverse_log_moment_bound(double lambda, double p);

/// Bound on <(2 floor(N/2)/lambda - 1)^2 1{N>=2}>: 35/lambda.
double poisson_halved_deviation_bound(double lambda);

// --- small numerics shared by samplers and couplings --------------------

/// Standard normal quantile (Wichura's AS241 rational approximation,
/// double-precision accurate).
double normal_quantile(double p);

/// Standard normal CDF.
double normal_cdf(double x);

/// Quantile of the standard Laplace distribution (density e^{-|x|}/2).
double laplace_quantile(double p);

/// CDF of the standard Laplace distribution.
double laplace_cdf(double x);

}  // namespace telecoupler
