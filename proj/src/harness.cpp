#include "telecoupler/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "telecoupler/couplings.hpp"
#include "telecoupler/errors.hpp"
#include "telecoupler/fmtutil.hpp"
#include "telecoupler/kmt_tables.hpp"
#include "telecoupler/parallel.hpp"
#include "telecoupler/surrogate.hpp"
#include "telecoupler/telegraph.hpp"
#include "telecoupler/transport.hpp"

namespace telecoupler {

namespace {

constexpr std::uint64_t kStreamBlock = 1ULL << 24;

struct Moments {
  double mean = 0.0;
  double se_mean = 0.0;
  double var = 0.0;
  double se_var = 0.0;
  long long n = 0;
};

Moments sample_moments(const std::vector<double>& v) {
  Moments m;
  m.n = static_cast<long long>(v.size());
  double n = static_cast<double>(v.size());
  for (double x : v) m.mean += x;
  m.mean /= n;
  double m2 = 0.0, m4 = 0.0;
  for (double x : v) {
    double d = x - m.mean;
    m2 += d * d;
    m4 += d * d * d * d;
  }
  m.var = m2 / (n - 1.0);
  m4 /= n;
  m.se_mean = std::sqrt(m.var / n);
  m.se_var = std::sqrt(std::max(m4 - m.var * m.var, 0.0) / n);
  return m;
}

CheckResult mean_check(const std::string& name, const std::string& formula,
                       const std::vector<double>& samples, double target, double k_se = 4.0) {
  Moments m = sample_moments(samples);
  CheckResult c{name, formula, std::fabs(m.mean - target), k_se * m.se_mean, false};
  c.pass = c.statistic <= c.threshold;
  return c;
}

CheckResult variance_check(const std::string& name, const std::string& formula,
                           const std::vector<double>& samples, double target, double k_se = 4.0) {
  Moments m = sample_moments(samples);
  CheckResult c{name, formula, std::fabs(m.var - target), k_se * m.se_var, false};
  c.pass = c.statistic <= c.threshold;
  return c;
}

CheckResult bound_check(const std::string& name, const std::string& formula, double statistic,
                        double bound) {
  return CheckResult{name, formula, statistic, bound, statistic <= bound};
}

CheckResult exact_check(const std::string& name, const std::string& formula, double deviation,
                        double tolerance) {
  return CheckResult{name, formula, deviation, tolerance, deviation <= tolerance};
}

// Composite Simpson rule on [a,b].
double simpson(const std::function<double(double)>& f, double a, double b, int intervals) {
  int m = intervals % 2 == 0 ? intervals : intervals + 1;
  double h = (b - a) / m;
  double acc = f(a) + f(b);
  for (int i = 1; i < m; ++i) acc += f(a + h * i) * (i % 2 == 1 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

struct LineFit {
  double slope = 0.0;
  double stderr_slope = 0.0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit fit;
  fit.slope = sxy / sxx;
  double intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - intercept - fit.slope * x[i];
    ssr += r * r;
  }
  if (x.size() > 2) fit.stderr_slope = std::sqrt(ssr / (n - 2.0) / sxx);
  return fit;
}

long long default_draws(const ExperimentConfig& config, long long fallback) {
  return config.replicates > 0 ? std::max<long long>(config.replicates, 100) : fallback;
}

double constant_or(const ExperimentConfig& config, const std::string& key, double fallback) {
  auto it = config.constants.find(key);
  return it == config.constants.end() ? fallback : it->second;
}

}  // namespace

// ---------------------------------------------------------------------------
// moment verification
// ---------------------------------------------------------------------------

std::vector<CheckResult> run_moment_verification(const ExperimentConfig& config) {
  std::vector<CheckResult> checks;
  const std::uint64_t seed = config.seed;
  const long long n_draws = default_draws(config, 1000000);
  std::uint64_t stream = 0;

  {  // exponential sampler
    RngState rng(seed, ++stream);
    std::vector<double> v(static_cast<std::size_t>(n_draws));
    for (auto& x : v) x = sample_exponential(rng, 1.0);
    checks.push_back(mean_check("exp-mean", "E[Exp(1)] = 1", v, 1.0));
    for (auto& x : v) x = sample_exponential(rng, 2.0);
    checks.push_back(variance_check("exp-variance", "Var[Exp(2)] = 1/4", v, 0.25));
    checks.push_back(exact_check("exp-quantile-median", "Exp(1) quantile at 1/2 = ln 2",
                                 std::fabs(exponential_quantile(0.5, 1.0) - std::log(2.0)), 1e-15));
  }

  {  // poisson sampler
    RngState rng(seed, ++stream);
    std::vector<double> zero(static_cast<std::size_t>(n_draws)), mean1(zero.size()), sq(zero.size());
    for (std::size_t i = 0; i < zero.size(); ++i) zero[i] = sample_poisson(rng, 4.0) == 0 ? 1.0 : 0.0;
    for (std::size_t i = 0; i < mean1.size(); ++i) {
      double k = static_cast<double>(sample_poisson(rng, 1.0));
      mean1[i] = k;
      sq[i] = k * k;
    }
    checks.push_back(mean_check("poisson-p0", "P(Po(4) = 0) = e^{-4}", zero, std::exp(-4.0)));
    checks.push_back(mean_check("poisson-mean", "E[Po(1)] = 1", mean1, 1.0));
    checks.push_back(mean_check("poisson-second-moment", "E[Po(1)^2] = lambda^2 + lambda = 2", sq, 2.0));
  }

  {  // gamma sampler
    RngState rng(seed, ++stream);
    std::vector<double> v(static_cast<std::size_t>(n_draws));
    for (auto& x : v) x = sample_gamma(rng, 8, 8.0);
    checks.push_back(mean_check("gamma-mean", "E[Gamma(n,n)] = 1", v, 1.0));
    checks.push_back(variance_check("gamma-variance", "Var[Gamma(8,8)] = 1/8", v, 0.125));
    for (auto& x : v) {
      double y = sample_gamma(rng, 2, 2.0);
      x = y * y * y * y;
    }
    checks.push_back(mean_check("gamma-fourth-moment", "E[Gamma(2,theta)^4] = 120/theta^4", v, 120.0 / 16.0));
  }

  {  // uniform-gamma decomposition of exponential pairs
    RngState rng(seed, ++stream);
    std::size_t n = static_cast<std::size_t>(n_draws);
    std::vector<double> xs(n), ys(n), xy(n);
    for (std::size_t i = 0; i < n; ++i) {
      auto d = gamma_uniform_decomposition(sample_exponential(rng, 1.0), sample_exponential(rng, 1.0));
      xs[i] = d.ratio;
      ys[i] = d.sum;
      xy[i] = d.ratio * d.sum;
    }
    checks.push_back(mean_check("ratio-mean", "E[(U-V)/(U+V)] = 0", xs, 0.0));
    checks.push_back(variance_check("ratio-variance", "Var[Uniform[-1,1]] = 1/3", xs, 1.0 / 3.0));
    checks.push_back(mean_check("sum-mean", "E[Gamma(2,1)] = 2", ys, 2.0));
    // independence: E[XY] = E[X]E[Y] = 0
    checks.push_back(mean_check("ratio-sum-uncorrelated", "E[XY] - E[X]E[Y] = 0", xy, 0.0));
  }

  {  // simplex moments
    RngState rng(seed, ++stream);
    for (long long n : {2LL, 3LL, 10LL, 100LL}) {
      std::size_t draws = static_cast<std::size_t>(n_draws);
      std::vector<double> u1(draws), u2(draws), u3(draws), cross(draws);
      for (std::size_t i = 0; i < draws; ++i) {
        SimplexSample s = sample_simplex(rng, n);
        u1[i] = s.u[0];
        u2[i] = s.u[0] * s.u[0];
        u3[i] = s.u[0] * s.u[0] * s.u[0];
        cross[i] = n >= 2 ? s.u[0] * s.u[1] : 0.0;
      }
      std::string tag = "simplex-n" + std::to_string(n);
      checks.push_back(mean_check(tag + "-mean", "<u_i> = 1/n", u1, simplex_moment_exact(n, 1)));
      checks.push_back(mean_check(tag + "-square", "<u_i^2> = 2/(n(n+1))", u2, simplex_moment_exact(n, 2)));
      checks.push_back(
          mean_check(tag + "-cube", "<u_i^3> = 6/(n(n+1)(n+2))", u3, simplex_moment_exact(n, 3)));
      if (n >= 2)
        checks.push_back(
            mean_check(tag + "-cross", "<u_i u_j> = 1/(n(n+1))", cross, simplex_cross_moment_exact(n)));
    }
    // exchangeability: coordinate moments agree across positions
    {
      const long long n = 5;
      std::size_t draws = 200000;
      std::vector<std::vector<double>> per_coord(static_cast<std::size_t>(n),
                                                 std::vector<double>(draws));
      for (std::size_t i = 0; i < draws; ++i) {
        SimplexSample s = sample_simplex(rng, n);
        for (std::size_t j = 0; j < static_cast<std::size_t>(n); ++j) per_coord[j][i] = s.u[j] * s.u[j];
      }
      double lo = 1e300, hi = -1e300, se = 0.0;
      for (auto& col : per_coord) {
        Moments m = sample_moments(col);
        lo = std::min(lo, m.mean);
        hi = std::max(hi, m.mean);
        se = std::max(se, m.se_mean);
      }
      checks.push_back(exact_check("simplex-exchangeable", "<u_i^2> equal across coordinates", hi - lo,
                                   4.0 * std::sqrt(2.0) * se));
    }
    checks.push_back(exact_check("simplex-normalization", "n <u_i> = 1 exactly",
                                 std::fabs(100.0 * simplex_moment_exact(100, 1) - 1.0), 0.0));
  }

  {  // maximum coordinate bound, C1 = max{6, 4 ln 3 / ln 2}
    RngState rng(seed, ++stream);
    double c1 = std::max(6.0, 4.0 * std::log(3.0) / std::log(2.0));
    for (long long n = 2; n <= 1024; n *= 2) {
      std::size_t draws = 100000;
      double acc = 0.0;
      for (std::size_t i = 0; i < draws; ++i) {
        SimplexSample s = sample_simplex(rng, n);
        acc += *std::max_element(s.u.begin(), s.u.end());
      }
      checks.push_back(bound_check("simplex-max-n" + std::to_string(n),
                                   "<max u_i> <= max{6, 4 ln3/ln2} ln(n+1)/n", acc / draws,
                                   c1 * std::log(static_cast<double>(n) + 1.0) / static_cast<double>(n)));
    }
  }

  {  // exponential moments of one coordinate: quadrature of the exact marginal
    for (long long n = 2; n <= 64; ++n) {
      double theta = static_cast<double>(n - 1);
      double integral = simpson([&](double x) { return std::pow(x, n - 2.0) * std::exp(-theta * x); },
                                0.0, 1.0, 4096);
      double value = theta * std::exp(theta) * integral;  // (n-1) e^theta int x^{n-2} e^{-theta x}
      if (n == 2 || n == 16 || n == 64)
        checks.push_back(bound_check("simplex-expmoment-n" + std::to_string(n),
                                     "<e^{(n-1)u_1}> <= 3 sqrt(n-1)", value, 3.0 * std::sqrt(theta)));
    }
    // Monte Carlo spot check against the quadrature value at n = 8.
    RngState rng(seed, ++stream);
    const long long n = 8;
    double theta = 7.0;
    double exact = theta * std::exp(theta) *
                   simpson([&](double x) { return std::pow(x, n - 2.0) * std::exp(-theta * x); }, 0.0, 1.0, 4096);
    std::vector<double> v(200000);
    for (auto& x : v) x = std::exp(theta * sample_simplex(rng, n).u[0]);
    checks.push_back(mean_check("simplex-expmoment-mc", "<e^{7 u_1}> matches marginal quadrature", v, exact));
  }

  {  // Poisson inverse-moment bounds
    RngState rng(seed, ++stream);
    for (double lambda : {2.0, 5.0, 20.0}) {
      std::size_t draws = static_cast<std::size_t>(n_draws);
      double inv = 0.0, dev = 0.0;
      for (std::size_t i = 0; i < draws; ++i) {
        long long k = sample_poisson(rng, lambda);
        if (k >= 1) inv += 1.0 / static_cast<double>(k);
        if (k >= 2) {
          double d = 2.0 * static_cast<double>(k / 2) / lambda - 1.0;
          dev += d * d;
        }
      }
      std::string tag = num_to_string(lambda);
      checks.push_back(bound_check("poisson-inverse-lambda" + tag,
                                   "<N^{-1} 1{N>=1}> <= 2^{3/2}/lambda", inv / draws,
                                   poisson_inverse_moment_bound(lambda, 1.0)));
      checks.push_back(bound_check("poisson-halved-lambda" + tag,
                                   "<(2 floor(N/2)/lambda - 1)^2 1{N>=2}> <= 35/lambda", dev / draws,
                                   poisson_halved_deviation_bound(lambda)));
    }
  }

  {  // flip path moments against the closed forms
    ScalingParams params(1.0, 1.0, 1.0, 4.0);
    const std::size_t draws = static_cast<std::size_t>(n_draws);
    const std::vector<double> times{0.25, 1.0, 4.0};
    std::vector<std::vector<double>> at(times.size(), std::vector<double>(draws));
    std::uint64_t base = (++stream) * kStreamBlock;
    parallel_for_index(draws, [&](std::size_t i) {
      RngState rng(seed, base + i);
      PiecewisePath path = sample_telegraph(rng, params);
      for (std::size_t k = 0; k < times.size(); ++k) at[k][i] = path.eval(times[k]);
    });
    for (std::size_t k = 0; k < times.size(); ++k) {
      std::string tag = "t" + num_to_string(times[k]);
      checks.push_back(mean_check("flip-mean-" + tag, "E[X(t)] = v0/(2 lambda)(1 - e^{-2 lambda t})",
                                  at[k], telegraph_mean_exact(times[k], params)));
      checks.push_back(variance_check(
          "flip-variance-" + tag,
          "Var[X(t)] = (v0^2/lambda^2)(lambda t + e^{-2 lambda t} - e^{-4 lambda t}/4 - 3/4)", at[k],
          telegraph_variance_exact(times[k], params)));
    }
    // jump count mean over the horizon
    RngState rng(seed, (++stream));
    ScalingParams p5(1.0, 1.0, 1.0, 5.0);
    std::vector<double> cnt(100000);
    for (auto& x : cnt) x = static_cast<double>(sample_telegraph(rng, p5).segment_count() - 1);
    checks.push_back(mean_check("flip-jump-count", "E[N(T)] = lambda T = 5", cnt, 5.0));
  }

  {  // absolute-moment bounds with frozen constants
    ScalingParams params(1.0, 1.0, 1.0, 8.0);
    const std::map<double, double> frozen_c{{1.0, 2.0}, {2.0, 1.0}, {4.0, 8.0}};
    const std::size_t draws = 200000;
    const std::vector<double> times{0.25, 0.5, 1.0, 2.0, 4.0, 8.0};
    std::vector<std::vector<double>> abs_at(times.size(), std::vector<double>(draws));
    std::uint64_t base = (++stream) * kStreamBlock;
    parallel_for_index(draws, [&](std::size_t i) {
      RngState rng(seed, base + i);
      PiecewisePath path = sample_telegraph(rng, params);
      for (std::size_t k = 0; k < times.size(); ++k) abs_at[k][i] = std::fabs(path.eval(times[k]));
    });
    for (auto [r, cr] : frozen_c) {
      double worst_ratio = 0.0;
      for (std::size_t k = 0; k < times.size(); ++k) {
        double emp = 0.0;
        for (double a : abs_at[k]) emp += std::pow(a, r);
        emp /= static_cast<double>(draws);
        worst_ratio = std::max(worst_ratio, emp / abs_moment_bound(times[k], r, params, cr));
      }
      checks.push_back(bound_check("flip-absmoment-r" + num_to_string(r),
                                   "E|X(t)|^r <= min(crude, diffusive) bound", worst_ratio, 1.0));
    }
  }

  return checks;
}

// ---------------------------------------------------------------------------
// coupling verification
// ---------------------------------------------------------------------------

std::vector<CheckResult> run_coupling_verification(const ExperimentConfig& config) {
  std::vector<CheckResult> checks;
  const std::uint64_t seed = config.seed;
  const long long n_draws = default_draws(config, 1000000);
  std::uint64_t stream = 1000;

  {  // coin-flip scale marginals and the normalisation identity
    for (long long n : {2LL, 8LL, 32LL}) {
      RngState rng(seed, ++stream);
      std::size_t draws = static_cast<std::size_t>(n_draws);
      std::vector<double> r1(draws), r1sq(draws), r2(draws), diag(draws), excess(draws);
      double r_star = coinflip_threshold(n);
      long long support_violations = 0;
      for (std::size_t i = 0; i < draws; ++i) {
        CoinFlipScales s = coinflip_scale_pair(rng, n);
        r1[i] = s.r1;
        r1sq[i] = s.r1 * s.r1;
        r2[i] = s.r2;
        diag[i] = s.branch == BranchTag::diagonal ? 1.0 : 0.0;
        if (s.branch == BranchTag::offdiagonal) {
          // g(r2) < 1 < g(r1): r1 in (r*, 1], r2 outside [r*, 1]
          if (!(s.r1 > r_star && s.r1 <= 1.0)) ++support_violations;
          if (s.r2 >= r_star && s.r2 <= 1.0) ++support_violations;
        }
        // independent estimate of Z = <(g-1)_+>_{nu2}
        double g = std::exp(coinflip_log_density_ratio(n, sample_gamma(rng, n, static_cast<double>(n))));
        excess[i] = g > 1.0 ? g - 1.0 : 0.0;
      }
      std::string tag = "coinflip-n" + std::to_string(n);
      double dn = static_cast<double>(n);
      checks.push_back(mean_check(tag + "-r1-mean", "E[r1] = n/(n+1)", r1, dn / (dn + 1.0)));
      checks.push_back(mean_check(tag + "-r1-square", "E[r1^2] = n/(n+2)", r1sq, dn / (dn + 2.0)));
      checks.push_back(mean_check(tag + "-r2-mean", "E[r2] = 1", r2, 1.0));
      checks.push_back(variance_check(tag + "-r2-variance", "Var[r2] = 1/n", r2, 1.0 / dn));
      checks.push_back(exact_check(tag + "-offdiag-support", "off-diagonal: g(r2) < 1 < g(r1)",
                                   static_cast<double>(support_violations), 0.0));
      Moments md = sample_moments(diag);
      Moments mz = sample_moments(excess);
      double dev = std::fabs(md.mean + mz.mean - 1.0);
      double se = std::sqrt(md.se_mean * md.se_mean + mz.se_mean * mz.se_mean);
      checks.push_back(exact_check(tag + "-normalisation", "P(diagonal) + <(g-1)_+>_{nu2} = 1", dev, 4.0 * se));
    }
  }

  {  // independent coupling against its closed-form cost
    ScalingParams params = ScalingParams::from_dimensionless(1.0, 1.0);
    std::uint64_t base = (++stream) * kStreamBlock;
    EstimateWithCI est = empirical_w2_upper(
        [&params](RngState& rng) { return pair_cost(independent_pair(rng, params)); }, seed, base, 20000);
    double target = crude_and_exact_independent(1.0, 1.0).exact;
    checks.push_back(exact_check("independent-cost", "sqrt(E c2) = independent closed form",
                                 std::fabs(est.point - target), 2.0 * est.half_width_95));

    // cross term and Brownian marginal at t = T
    std::size_t draws = 100000;
    std::vector<double> cross(draws), bT(draws);
    base = (++stream) * kStreamBlock;
    parallel_for_index(draws, [&](std::size_t i) {
      RngState rng(seed, base + i);
      CoupledPathPair pair = independent_pair(rng, params);
      cross[i] = pair.left.eval(params.T) * pair.right.eval(params.T);
      bT[i] = pair.right.eval(params.T);
    });
    checks.push_back(mean_check("independent-cross-term", "E[L^{-1}X(T) B(T)] = 0", cross, 0.0));
    checks.push_back(variance_check("brownian-marginal", "Var[B(T)] = sigma^2 T", bT,
                                    params.sigma2() * params.T));
  }

  {  // coin-flip pair: diagonal cost is zero, left marginal is the flip law
    ScalingParams params = ScalingParams::from_dimensionless(4.0, 2.0);
    std::size_t draws = 100000;
    std::vector<double> leftT(draws), diag_cost(draws, 0.0);
    std::uint64_t base = (++stream) * kStreamBlock;
    parallel_for_index(draws, [&](std::size_t i) {
      RngState rng(seed, base + i);
      CoupledPathPair pair = coinflip_pair(rng, params);
      leftT[i] = pair.left.eval(params.T);
      if (pair.branch_tag == BranchTag::diagonal && i % 100 == 0) diag_cost[i] = pair_cost(pair);
    });
    double worst_diag_cost = *std::max_element(diag_cost.begin(), diag_cost.end());
    checks.push_back(exact_check("coinflip-diagonal-cost", "diagonal branch: c2 = 0", worst_diag_cost, 0.0));
    checks.push_back(variance_check("coinflip-left-marginal", "Var[left(T)] = Var[X(T)]/L^2", leftT,
                                    telegraph_variance_exact(params.T, params) / (params.L * params.L)));
  }

  {  // coin-flip right marginal against the directly sampled decoupled process
    ScalingParams params = ScalingParams::from_dimensionless(4.0, 2.0);
    std::size_t draws = 100000;
    std::vector<double> via_coupling(draws), direct(draws);
    std::uint64_t base = (++stream) * kStreamBlock;
    parallel_for_index(draws, [&](std::size_t i) {
      RngState rng_a(seed, base + i);
      via_coupling[i] = coinflip_pair(rng_a, params).right.eval(params.T);
      RngState rng_b(seed, base + kStreamBlock / 2 + i);
      direct[i] = mix_over_poisson(rng_b, params, SurrogateKind::decoupled_flip).eval(params.T);
    });
    Moments a = sample_moments(via_coupling);
    Moments b = sample_moments(direct);
    checks.push_back(exact_check("coinflip-right-marginal-mean",
                                 "coupling right mean = decoupled process mean",
                                 std::fabs(a.mean - b.mean),
                                 4.0 * std::sqrt(a.se_mean * a.se_mean + b.se_mean * b.se_mean)));
    checks.push_back(exact_check("coinflip-right-marginal-variance",
                                 "coupling right variance = decoupled process variance",
                                 std::fabs(a.var - b.var),
                                 4.0 * std::sqrt(a.se_var * a.se_var + b.se_var * b.se_var)));
  }

  {  // synchronous identities
    ScalingParams params(1.7, 1.3, 0.9, 2.0);
    RngState rng(seed, ++stream);
    double worst = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
      SurrogateInputs in;
      in.params = params;
      in.n = 2 + static_cast<long long>(rng.next_u64() % 49);
      in.unit_gaps.resize(static_cast<std::size_t>(in.n));
      for (auto& u : in.unit_gaps) u = sample_exponential(rng, 1.0);
      PiecewisePath flip = decoupled_flip_path(in);
      PiecewisePath walk = rescaled_even_jump_walk_path(in);
      for (std::size_t k = 1; k < walk.breakpoints().size(); ++k) {
        double t = walk.breakpoints()[k];
        worst = std::max(worst, std::fabs(flip.eval(t) - walk.eval(t)));
      }
    }
    checks.push_back(exact_check("interpolation-identity",
                                 "flip path equals rescaled walk at even rescaled jump times", worst, 1e-12));

    // even-jump increments of the flip path
    double worst_inc = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
      std::vector<double> gaps(20);
      for (auto& g : gaps) g = sample_exponential(rng, params.lambda);
      WaitingTimes d(gaps, 2.0 * params.T);
      double t2 = 0.0;
      for (int k = 1; 2 * k < 20; ++k) {
        double prev = t2;
        t2 += gaps[2 * k - 2] + gaps[2 * k - 1];
        double lhs = (path_eval(t2, d, params.v0) - path_eval(prev, d, params.v0)) / params.L;
        double rhs = -params.v0 / params.L * (gaps[2 * k - 1] - gaps[2 * k - 2]);
        worst_inc = std::max(worst_inc, std::fabs(lhs - rhs));
      }
    }
    checks.push_back(exact_check("even-jump-increment",
                                 "X(t_{2k})/L - X(t_{2k-2})/L = -v0 (s_{2k} - s_{2k-1})/L", worst_inc, 1e-12));

    // centered walk increments: mean 0, variance 2/L*^2
    std::vector<double> inc;
    inc.reserve(400000);
    while (inc.size() < 400000) {
      SurrogateInputs in = sample_surrogate_inputs(rng, params);
      WalkIncrements w = walk_increments(in);
      inc.insert(inc.end(), w.increments.begin(), w.increments.end());
    }
    double lstar = params.l_star();
    checks.push_back(mean_check("walk-increment-mean", "E[eta] = 0", inc, 0.0));
    checks.push_back(variance_check("walk-increment-variance", "Var[eta] = 2/L*^2", inc,
                                    2.0 / (lstar * lstar)));
  }

  {  // Poisson mixture facts
    ScalingParams params = ScalingParams::from_dimensionless(1.0, 1.0);
    RngState rng(seed, ++stream);
    std::size_t draws = 200000;
    std::vector<double> zmean(draws);
    for (std::size_t i = 0; i < draws; ++i)
      zmean[i] = mix_over_poisson(rng, params, SurrogateKind::even_jump_walk).eval(params.T);
    checks.push_back(mean_check("mixture-zero-mean", "E[Z(T)] = 0", zmean, 0.0));
    RngState rng2(seed, ++stream);
    std::vector<double> k0(draws);
    for (auto& x : k0) x = sample_poisson(rng2, params.t_star()) == 0 ? 1.0 : 0.0;
    checks.push_back(mean_check("mixture-k0", "P(K = 0) = e^{-T*}", k0, std::exp(-params.t_star())));
  }

  {  // Brownian bridge fill
    RngState rng(seed, ++stream);
    std::size_t draws = 200000;
    double sigma2 = 0.7, span = 0.8, v = 0.3;
    std::vector<double> mid(draws);
    for (std::size_t i = 0; i < draws; ++i) {
      PiecewisePath b = brownian_fill({0.0, v}, {0.0, span}, sigma2, {span / 2.0}, rng);
      mid[i] = b.eval(span / 2.0);
    }
    checks.push_back(mean_check("bridge-mean", "bridge mean at midpoint = linear interpolation", mid, v / 2.0));
    checks.push_back(variance_check("bridge-variance", "bridge variance at midpoint = sigma^2 h/4", mid,
                                    sigma2 * span / 4.0));
  }

  {  // KMT skeleton: coupled Gaussian increments keep their law (dyadic mode)
    RngState rng(seed, ++stream);
    std::vector<double> all;
    all.reserve(300000);
    while (all.size() < 300000) {
      std::vector<double> lap(256);
      for (auto& v : lap) v = laplace_quantile(rng.uniform01());
      std::vector<double> g = coupled_gaussian_increments(lap, KmtMode::dyadic, shared_laplace_walk_tables());
      all.insert(all.end(), g.begin(), g.end());
    }
    checks.push_back(mean_check("kmt-gaussian-mean", "coupled Gaussian increments: mean 0", all, 0.0));
    checks.push_back(variance_check("kmt-gaussian-variance", "coupled Gaussian increments: variance 2",
                                    all, 2.0));
    // skeleton gap: dyadic below quantile at n = 4096
    std::vector<double> gq(64), gd(64);
    for (std::size_t i = 0; i < gq.size(); ++i) {
      RngState r1(seed, (stream << 8) + 2 * i);
      RngState r2(seed, (stream << 8) + 2 * i + 1);
      gq[i] = kmt_gap_statistic(r1, 4096, KmtMode::quantile);
      gd[i] = kmt_gap_statistic(r2, 4096, KmtMode::dyadic);
    }
    std::sort(gq.begin(), gq.end());
    std::sort(gd.begin(), gd.end());
    checks.push_back(exact_check("kmt-gap-ordering", "median gap: dyadic < quantile at n = 4096",
                                 gd[gd.size() / 2], gq[gq.size() / 2]));
  }

  {  // time-marginal lower estimator on Gaussian marginals
    RngState rng(seed, ++stream);
    std::size_t n = 20000;
    std::vector<std::vector<double>> a(n, std::vector<double>(1)), b(n, std::vector<double>(1));
    for (std::size_t i = 0; i < n; ++i) {
      a[i][0] = rng.normal01();
      b[i][0] = 2.0 * rng.normal01();
    }
    EstimateWithCI lower = empirical_w2_lower(a, b, {1.0});
    checks.push_back(exact_check("lower-gaussian", "W2(N(0,1), N(0,4)) = |1 - 2| = 1",
                                 std::fabs(lower.point - 1.0), std::max(4.0 * lower.half_width_95, 0.02)));
  }

  {  // chain coupling: both endpoint marginals keep their laws
    ScalingParams params = ScalingParams::from_dimensionless(16.0, 4.0);
    std::size_t draws = 50000;
    std::vector<double> leftT(draws), rightT(draws), right_mid(draws);
    std::uint64_t base = (++stream) * kStreamBlock;
    parallel_for_index(draws, [&](std::size_t i) {
      RngState rng(seed, base + i);
      CoupledPathPair pair = chain_pair(rng, params);
      leftT[i] = pair.left.eval(params.T);
      rightT[i] = pair.right.eval(params.T);
      right_mid[i] = pair.right.eval(0.37 * params.T);
    });
    checks.push_back(variance_check("chain-left-marginal", "Var[left(T)] = Var[X(T)]/L^2", leftT,
                                    telegraph_variance_exact(params.T, params) / (params.L * params.L)));
    checks.push_back(mean_check("chain-right-mean", "E[B(T)] = 0", rightT, 0.0));
    checks.push_back(variance_check("chain-right-marginal", "Var[B(T)] = sigma^2 T", rightT,
                                    params.sigma2() * params.T));
    checks.push_back(variance_check("chain-right-interior", "Var[B(t)] = sigma^2 t off the skeleton grid",
                                    right_mid, params.sigma2() * 0.37 * params.T));
    // Gaussian shape: fourth moment of B(T) is 3 (sigma^2 T)^2
    std::vector<double> fourth(draws);
    for (std::size_t i = 0; i < draws; ++i) fourth[i] = rightT[i] * rightT[i] * rightT[i] * rightT[i];
    checks.push_back(mean_check("chain-right-kurtosis", "E[B(T)^4] = 3 (sigma^2 T)^2", fourth,
                                3.0 * params.sigma2() * params.T * params.sigma2() * params.T));
  }

  {  // strong-approximation pair: Brownian marginal at and between grid points
    ScalingParams params = ScalingParams::from_dimensionless(32.0, std::sqrt(32.0));
    std::size_t draws = 50000;
    std::vector<double> rightT(draws);
    std::uint64_t base = (++stream) * kStreamBlock;
    parallel_for_index(draws, [&](std::size_t i) {
      RngState rng(seed, base + i);
      rightT[i] = kmt_pair(rng, params, KmtMode::dyadic).right.eval(params.T);
    });
    checks.push_back(variance_check("kmt-right-marginal", "Var[B(T)] = sigma^2 T", rightT,
                                    params.sigma2() * params.T));
  }

  return checks;
}

// ---------------------------------------------------------------------------
// convergence sweep
// ---------------------------------------------------------------------------

SweepResult run_convergence_sweep(const ExperimentConfig& config) {
  if (!(config.zeta > 0.0)) throw std::invalid_argument("sweep: zeta must be > 0");
  if (config.t_stars.size() < 4) throw std::invalid_argument("sweep: need at least 4 T* points");
  for (std::size_t i = 1; i < config.t_stars.size(); ++i)
    if (!(config.t_stars[i] > config.t_stars[i - 1]))
      throw std::invalid_argument("sweep: T* values must be strictly increasing");
  const long long replicates = default_draws(config, 10000);
  const double C = constant_or(config, "C", 1.0);

  SweepResult result;
  for (std::size_t row_idx = 0; row_idx < config.t_stars.size(); ++row_idx) {
    auto t0 = std::chrono::steady_clock::now();
    double t_star = config.t_stars[row_idx];
    double l_star = std::sqrt(t_star / config.zeta);
    ScalingParams params = ScalingParams::from_dimensionless(t_star, l_star);
    std::uint64_t base = static_cast<std::uint64_t>(row_idx) * 4 * kStreamBlock;

    SweepRow row;
    row.T_star = t_star;
    row.L_star = l_star;
    row.w2_upper_coinflip_chain = empirical_w2_upper(
        [&params](RngState& rng) { return pair_cost(chain_pair(rng, params)); }, config.seed, base,
        replicates);
    row.w2_upper_independent = empirical_w2_upper(
        [&params](RngState& rng) { return pair_cost(independent_pair(rng, params)); }, config.seed,
        base + kStreamBlock, replicates);

    // marginal samples on a coarse grid for the lower estimate
    const std::size_t n_low = static_cast<std::size_t>(std::clamp<long long>(replicates, 200, 2000));
    const std::size_t grid_n = 64;
    std::vector<double> grid(grid_n);
    for (std::size_t k = 0; k < grid_n; ++k)
      grid[k] = params.T * static_cast<double>(k + 1) / static_cast<double>(grid_n);
    std::vector<std::vector<double>> flips(n_low), brownians(n_low);
    parallel_for_index(n_low, [&](std::size_t i) {
      RngState rng_flip(config.seed, base + 2 * kStreamBlock + i);
      RngState rng_b(config.seed, base + 3 * kStreamBlock + i);
      PiecewisePath x = sample_telegraph(rng_flip, params).scaled(1.0 / params.L);
      std::vector<double> xv(grid_n), bv(grid_n);
      double b = 0.0, prev = 0.0;
      for (std::size_t k = 0; k < grid_n; ++k) {
        xv[k] = x.eval(grid[k]);
        b += std::sqrt(params.sigma2() * (grid[k] - prev)) * rng_b.normal01();
        bv[k] = b;
        prev = grid[k];
      }
      flips[i] = std::move(xv);
      brownians[i] = std::move(bv);
    });
    row.w2_lower = empirical_w2_lower(flips, brownians, grid);

    row.main_rhs = main_bound_rhs(t_star, l_star, C);
    row.crude_rhs = crude_and_exact_independent(t_star, l_star).crude;
    row.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.rows.push_back(row);
  }

  // sandwich: lower <= chain <= independent within combined CI slack
  result.sandwich_ok = true;
  for (const auto& row : result.rows) {
    double slack_lo = row.w2_lower.half_width_95 + row.w2_upper_coinflip_chain.half_width_95;
    double slack_hi = row.w2_upper_coinflip_chain.half_width_95 + row.w2_upper_independent.half_width_95;
    if (row.w2_lower.point > row.w2_upper_coinflip_chain.point + slack_lo) result.sandwich_ok = false;
    if (row.w2_upper_coinflip_chain.point > row.w2_upper_independent.point + slack_hi)
      result.sandwich_ok = false;
  }

  // log-log slope of the chain estimate; drop the smallest T* if too noisy
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const auto& est = result.rows[i].w2_upper_coinflip_chain;
    if (i == 0 && est.half_width_95 > 0.2 * est.point) continue;
    lx.push_back(std::log(result.rows[i].T_star));
    ly.push_back(std::log(est.point));
  }
  LineFit fit = fit_line(lx, ly);
  result.slope = fit.slope;
  result.slope_stderr = fit.stderr_slope;
  return result;
}

// ---------------------------------------------------------------------------
// KMT gap diagnostic
// ---------------------------------------------------------------------------

GapResult run_kmt_gap(const ExperimentConfig& config) {
  std::vector<long long> lengths = config.gap_lengths;
  if (lengths.empty())
    for (long long n = 16; n <= 4096; n *= 2) lengths.push_back(n);
  const long long replicates = default_draws(config, 1000);

  GapResult result;
  std::vector<double> log_n, log_med_q, log_med_d;
  for (std::size_t idx = 0; idx < lengths.size(); ++idx) {
    long long n = lengths[idx];
    for (KmtMode mode : {KmtMode::quantile, KmtMode::dyadic}) {
      std::vector<double> gaps(static_cast<std::size_t>(replicates));
      std::uint64_t base =
          (static_cast<std::uint64_t>(idx) * 2 + (mode == KmtMode::dyadic ? 1 : 0)) * kStreamBlock;
      parallel_for_index(gaps.size(), [&](std::size_t i) {
        RngState rng(config.seed, base + i);
        gaps[i] = kmt_gap_statistic(rng, n, mode);
      });
      std::sort(gaps.begin(), gaps.end());
      double median = gaps[gaps.size() / 2];
      result.rows.push_back(GapRow{n, mode == KmtMode::dyadic ? "dyadic" : "quantile", median, replicates});
      (mode == KmtMode::dyadic ? log_med_d : log_med_q).push_back(std::log(median));
    }
    log_n.push_back(std::log(static_cast<double>(n)));
  }
  result.exponent_quantile = fit_line(log_n, log_med_q).slope;
  result.exponent_dyadic = fit_line(log_n, log_med_d).slope;
  return result;
}

std::vector<BoundReport> run_bounds_table(const ExperimentConfig& config) {
  if (!(config.zeta > 0.0)) throw std::invalid_argument("bounds-table: zeta must be > 0");
  std::vector<BoundReport> rows;
  for (double t_star : config.t_stars)
    rows.push_back(evaluate_bounds(t_star, std::sqrt(t_star / config.zeta), constant_or(config, "C", 1.0),
                                   constant_or(config, "k1", 1.0), constant_or(config, "k2", 1.0),
                                   constant_or(config, "k3", 1.0)));
  return rows;
}

// ---------------------------------------------------------------------------
// report writers
// ---------------------------------------------------------------------------

namespace {

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_estimate_csv(std::ostringstream& out, const EstimateWithCI& e) {
  out << num_to_string(e.point) << ',' << num_to_string(e.half_width_95) << ','
      << num_to_string(e.n_replicates);
}

nlohmann::ordered_json estimate_json(const EstimateWithCI& e) {
  nlohmann::ordered_json j;
  j["point"] = e.point;
  j["half_width_95"] = e.half_width_95;
  j["n_replicates"] = e.n_replicates;
  return j;
}

}  // namespace

std::string checks_to_csv(const std::vector<CheckResult>& checks) {
  std::ostringstream out;
  out << "name,formula,statistic,threshold,pass\n";
  for (const auto& c : checks)
    out << c.name << ',' << csv_quote(c.formula) << ',' << num_to_string(c.statistic) << ','
        << num_to_string(c.threshold) << ',' << (c.pass ? "true" : "false") << '\n';
  return out.str();
}

std::string checks_to_json(const std::vector<CheckResult>& checks) {
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    nlohmann::ordered_json j;
    j["name"] = c.name;
    j["formula"] = c.formula;
    j["statistic"] = c.statistic;
    j["threshold"] = c.threshold;
    j["pass"] = c.pass;
    rows.push_back(j);
  }
  return rows.dump(2) + "\n";
}

std::string sweep_to_csv(const SweepResult& result) {
  std::ostringstream out;
  out << "T_star,L_star,"
         "w2_upper_coinflip_chain,w2_upper_coinflip_chain_half_width_95,w2_upper_coinflip_chain_n_replicates,"
         "w2_upper_independent,w2_upper_independent_half_width_95,w2_upper_independent_n_replicates,"
         "w2_lower,w2_lower_half_width_95,w2_lower_n_replicates,"
         "main_rhs,crude_rhs,runtime_seconds\n";
  for (const auto& r : result.rows) {
    out << num_to_string(r.T_star) << ',' << num_to_string(r.L_star) << ',';
    write_estimate_csv(out, r.w2_upper_coinflip_chain);
    out << ',';
    write_estimate_csv(out, r.w2_upper_independent);
    out << ',';
    write_estimate_csv(out, r.w2_lower);
    out << ',' << num_to_string(r.main_rhs) << ',' << num_to_string(r.crude_rhs) << ','
        << num_to_string(r.runtime_seconds) << '\n';
  }
  return out.str();
}

std::string sweep_to_json(const SweepResult& result) {
  nlohmann::ordered_json j;
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : result.rows) {
    nlohmann::ordered_json row;
    row["T_star"] = r.T_star;
    row["L_star"] = r.L_star;
    row["w2_upper_coinflip_chain"] = estimate_json(r.w2_upper_coinflip_chain);
    row["w2_upper_independent"] = estimate_json(r.w2_upper_independent);
    row["w2_lower"] = estimate_json(r.w2_lower);
    row["main_rhs"] = r.main_rhs;
    row["crude_rhs"] = r.crude_rhs;
    row["runtime_seconds"] = r.runtime_seconds;
    j["rows"].push_back(row);
  }
  j["slope"] = result.slope;
  j["slope_stderr"] = result.slope_stderr;
  j["sandwich_ok"] = result.sandwich_ok;
  return j.dump(2) + "\n";
}

std::string gap_to_csv(const GapResult& result) {
  std::ostringstream out;
  out << "n,mode,median_gap,replicates\n";
  for (const auto& r : result.rows)
    out << r.n << ',' << r.mode << ',' << num_to_string(r.median_gap) << ',' << r.replicates << '\n';
  return out.str();
}

std::string gap_to_jsonl(const GapResult& result) {
  std::ostringstream out;
  for (const auto& r : result.rows) {
    nlohmann::ordered_json j;
    j["n"] = r.n;
    j["mode"] = r.mode;
    j["median_gap"] = r.median_gap;
    j["replicates"] = r.replicates;
    out << j.dump() << '\n';
  }
  nlohmann::ordered_json tail;
  tail["exponent_quantile"] = result.exponent_quantile;
  tail["exponent_dyadic"] = result.exponent_dyadic;
  out << tail.dump() << '\n';
  return out.str();
}

std::string bounds_to_csv(const std::vector<BoundReport>& rows) {
  std::ostringstream out;
  out << "T_star,L_star,main_rhs,crude_rhs,coinflip_rhs,synchronous_rhs,kmt_rhs,C,k1,k2,k3\n";
  for (const auto& r : rows) {
    out << num_to_string(r.T_star) << ',' << num_to_string(r.L_star) << ',' << num_to_string(r.main_rhs)
        << ',' << num_to_string(r.crude_rhs) << ',' << num_to_string(r.coinflip_rhs) << ','
        << num_to_string(r.synchronous_rhs) << ',' << num_to_string(r.kmt_rhs);
    for (const char* key : {"C", "k1", "k2", "k3"}) {
      auto it = r.constants_used.find(key);
      out << ',' << num_to_string(it == r.constants_used.end() ? 1.0 : it->second);
    }
    out << '\n';
  }
  return out.str();
}

std::string bounds_to_json(const std::vector<BoundReport>& rows) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json j;
    j["T_star"] = r.T_star;
    j["L_star"] = r.L_star;
    j["main_rhs"] = r.main_rhs;
    j["crude_rhs"] = r.crude_rhs;
    j["coinflip_rhs"] = r.coinflip_rhs;
    j["synchronous_rhs"] = r.synchronous_rhs;
    j["kmt_rhs"] = r.kmt_rhs;
    j["constants_used"] = r.constants_used;
    arr.push_back(j);
  }
  return arr.dump(2) + "\n";
}

namespace {

void write_report(const ExperimentConfig& config, const std::string& text) {
  if (config.output.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(config.output, std::ios::binary);
  if (!out) throw io_error("cannot open " + config.output);
  out << text;
  if (!out) throw io_error("write failed: " + config.output);
}

}  // namespace

int run_experiment(const ExperimentConfig& config) {
  switch (config.experiment) {
    case ExperimentKind::verify_moments:
    case ExperimentKind::verify_couplings: {
      std::vector<CheckResult> checks = config.experiment == ExperimentKind::verify_moments
                                            ? run_moment_verification(config)
                                            : run_coupling_verification(config);
      write_report(config, config.format == ReportFormat::csv ? checks_to_csv(checks)
                                                              : checks_to_json(checks));
      int failures = 0;
      for (const auto& c : checks)
        if (!c.pass) {
          ++failures;
          std::cerr << "FAIL " << c.name << ": statistic " << c.statistic << " vs threshold "
                    << c.threshold << "\n";
        }
      return failures == 0 ? 0 : 1;
    }
    case ExperimentKind::convergence_sweep: {
      SweepResult result = run_convergence_sweep(config);
      write_report(config,
                   config.format == ReportFormat::csv ? sweep_to_csv(result) : sweep_to_json(result));
      std::cout << "slope " << num_to_string(result.slope) << " stderr "
                << num_to_string(result.slope_stderr) << (result.sandwich_ok ? "" : " (sandwich violated)")
                << "\n";
      return result.sandwich_ok ? 0 : 1;
    }
    case ExperimentKind::kmt_gap: {
      GapResult result = run_kmt_gap(config);
      write_report(config,
                   config.format == ReportFormat::csv ? gap_to_csv(result) : gap_to_jsonl(result));
      return result.exponent_dyadic < 0.5 && result.exponent_dyadic < result.exponent_quantile ? 0 : 1;
    }
    case ExperimentKind::bounds_table: {
      std::vector<BoundReport> rows = run_bounds_table(config);
      write_report(config,
                   config.format == ReportFormat::csv ? bounds_to_csv(rows) : bounds_to_json(rows));
      return 0;
    }
  }
  return 2;
}

}  // namespace telecoupler
