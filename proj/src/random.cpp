#include "telecoupler/random.hpp"

#include <cmath>
#include <stdexcept>

#include "telecoupler/errors.hpp"

namespace telecoupler {

namespace {

// splitmix64, used only to expand (seed, stream_id) into engine state.
std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t x = seed;
  std::uint64_t a = splitmix64(x);
  x ^= stream * 0xda942042e4dd58b5ULL + 0x2545f4914f6cdd1dULL;
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(x >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace

RngState::RngState(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_(stream_id), engine_(make_engine(seed, stream_id)) {}

RngState RngState::spawn(std::uint64_t tag) const {
  std::uint64_t x = stream_ ^ (tag * 0x9e3779b97f4a7c15ULL);
  std::uint64_t child = splitmix64(x) | 0x8000000000000000ULL;  // keep clear of small replicate ids
  return RngState(seed_, child);
}

std::uint64_t RngState::next_u64() { return engine_(); }

double RngState::uniform01() {
  // 53-bit mantissa, offset to the cell midpoint: strictly inside (0,1),
  // so both log(u) and quantile transforms stay finite.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RngState::uniform(double a, double b) { return a + (b - a) * uniform01(); }

double RngState::normal01() { return normal_quantile(uniform01()); }

double sample_exponential(RngState& rng, double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("sample_exponential: rate must be > 0");
  return -std::log(rng.uniform01()) / rate;
}

double exponential_quantile(double p, double rate) {
  if (!(rate > 0.0)) throw std::invalid_argument("exponential_quantile: rate must be > 0");
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("exponential_quantile: p must lie in [0,1)");
  return -std::log1p(-p) / rate;
}

long long sample_poisson(RngState& rng, double mean) {
  if (!(mean > 0.0)) throw std::invalid_argument("sample_poisson: mean must be > 0");
  std::poisson_distribution<long long> dist(mean);
  struct Adapter {
    RngState* rng;
    using result_type = std::uint64_t;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type(0); }
    result_type operator()() { return rng->next_u64(); }
  } adapter{&rng};
  return dist(adapter);
}

double sample_gamma(RngState& rng, long long shape, double rate) {
  if (shape < 1) throw std::invalid_argument("sample_gamma: shape must be >= 1");
  if (!(rate > 0.0)) throw std::invalid_argument("sample_gamma: rate must be > 0");
  std::gamma_distribution<double> dist(static_cast<double>(shape), 1.0 / rate);
  struct Adapter {
    RngState* rng;
    using result_type = std::uint64_t;
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~result_type(0); }
    result_type operator()() { return rng->next_u64(); }
  } adapter{&rng};
  return dist(adapter);
}

SimplexSample sample_simplex(RngState& rng, long long n) {
  if (n < 1) throw std::invalid_argument("sample_simplex: n must be >= 1");
  SimplexSample out;
  out.n = n;
  out.u.resize(static_cast<std::size_t>(n));
  if (n == 1) {
    out.u[0] = 1.0;
    return out;
  }
  double total = 0.0;
  for (auto& v : out.u) {
    v = -std::log(rng.uniform01());
    total += v;
  }
  for (auto& v : out.u) v /= total;
  return out;
}

UniformGammaPair gamma_uniform_decomposition(double u, double v) {
  if (!(u > 0.0) || !(v > 0.0))
    throw std::invalid_argument("gamma_uniform_decomposition: inputs must be > 0");
  return UniformGammaPair{(u - v) / (u + v), u + v};
}

double simplex_moment_exact(long long n, long long p) {
  if (n < 1 || p < 1) throw std::invalid_argument("simplex_moment_exact: need n >= 1, p >= 1");
  // p!/prod(n+k) computed as a stable product of ratios (k+1)/(n+k).
  double r = 1.0;
  for (long long k = 0; k < p; ++k) r *= static_cast<double>(k + 1) / static_cast<double>(n + k);
  return r;
}

double simplex_cross_moment_exact(long long n) {
  if (n < 2) throw std::invalid_argument("simplex_cross_moment_exact: need n >= 2");
  return 1.0 / (static_cast<double>(n) * static_cast<double>(n + 1));
}

double poisson_inverse_moment_bound(double lambda, double p) {
  if (!(lambda > 0.0) || !(p > 0.0))
    throw std::invalid_argument("poisson_inverse_moment_bound: need lambda > 0, p > 0");
  return std::exp2(p * (p + 2.0) / 2.0) / std::pow(lambda, p);
}

double poisson_inverse_log_moment_bound(double lambda, double p) {
  if (!(lambda > 0.0) || !(p > 0.0))
    throw std::invalid_argument("poisson_inverse_log_moment_bound: need lambda > 0, p > 0");
  double c2p = std::exp2(2.0 * p * (2.0 * p + 2.0) / 2.0);
  return std::sqrt(c2p) * std::log(lambda + 3.0) / std::pow(lambda, p);
}

double poisson_halved_deviation_bound(double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("poisson_halved_deviation_bound: lambda must be > 0");
  return 35.0 / lambda;
}

// Wichura's algorithm AS241 (PPND16).
double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p must lie in (0,1)");
  const double q = p - 0.5;
  double r, x;
  if (std::fabs(q) <= 0.425) {
    r = 0.180625 - q * q;
    x = q *
        (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r + 6.7265770927008700853e4) * r +
             4.5921953931549871457e4) *
                r +
            1.3731693765509461125e4) *
               r +
           1.9715909503065514427e3) *
              r +
          1.3314166789178437745e2) *
             r +
         3.3871328727963666080e0) /
        (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r + 3.9307895800092710610e4) * r +
             2.1213794301586595867e4) *
                r +
            5.3941960214247511077e3) *
               r +
           6.8718700749205790830e2) *
              r +
          4.2313330701600911252e1) *
             r +
         1.0);
    return x;
  }
  r = q < 0.0 ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  if (r <= 5.0) {
    r -= 1.6;
    x = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r + 2.41780725177450611770e-1) * r +
             1.27045825245236838258e0) *
                r +
            3.64784832476320460504e0) *
               r +
           5.76949722146069140550e0) *
              r +
          4.63033784615654529590e0) *
             r +
         1.42343711074968357734e0) /
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r + 1.51986665636164571966e-2) * r +
             1.48103976427480074590e-1) *
                r +
            6.89767334985100004550e-1) *
               r +
           1.67638483018380384940e0) *
              r +
          2.05319162663775882187e0) *
             r +
         1.0);
  } else {
    r -= 5.0;
    x = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r + 1.24266094738807843860e-3) * r +
             2.65321895265761230930e-2) *
                r +
            2.96560571828504891230e-1) *
               r +
           1.78482653991729133580e0) *
              r +
          5.46378491116411436990e0) *
             r +
         6.65790464350110377720e0) /
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r + 1.84631831751005468180e-5) * r +
             7.86869131145613259100e-4) *
                r +
            1.48753612908506148525e-2) *
               r +
           1.36929880922735805310e-1) *
              r +
          5.99832206555887937690e-1) *
             r +
         1.0);
  }
  return q < 0.0 ? -x : x;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double laplace_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("laplace_quantile: p must lie in (0,1)");
  return p < 0.5 ? std::log(2.0 * p) : -std::log(2.0 * (1.0 - p));
}

double laplace_cdf(double x) { return x < 0.0 ? 0.5 * std::exp(x) : 1.0 - 0.5 * std::exp(-x); }

}  // namespace telecoupler
