#include "telecoupler/telegraph.hpp"

#include <cmath>
#include <stdexcept>

#include "telecoupler/errors.hpp"

namespace telecoupler {

namespace {
constexpr long long kMaxJumps = 100000000;  // hard cap on gap generation
}

long long jump_count(double t, const WaitingTimes& d) {
  if (!(t >= 0.0)) throw std::invalid_argument("jump_count: t must be >= 0");
  long long n = 0;
  double partial = 0.0;
  for (double g : d.gaps) {
    if (partial + g > t) return n;
    partial += g;
    ++n;
  }
  // All stored gaps exhausted; the tail gap repeats.
  if (t >= partial + d.tail_gap)
    n += static_cast<long long>(std::floor((t - partial) / d.tail_gap));
  return n;
}

double path_eval(double t, const WaitingTimes& d, double v0) {
  if (!(t >= 0.0)) throw std::invalid_argument("path_eval: t must be >= 0");
  long long m = jump_count(t, d);
  double position = 0.0, t_m = 0.0, sign = 1.0;
  for (long long k = 0; k < m; ++k) {
    double g = k < static_cast<long long>(d.gaps.size()) ? d.gaps[static_cast<std::size_t>(k)] : d.tail_gap;
    position += sign * g;
    t_m += g;
    sign = -sign;
  }
  return v0 * (position + sign * (t - t_m));
}

PiecewisePath flip_path(const WaitingTimes& d, double v0, double horizon) {
  std::vector<double> bp{0.0}, vals{0.0}, slopes{v0};
  double t = 0.0, x = 0.0, velocity = v0;
  std::size_t k = 0;
  while (true) {
    double g = k < d.gaps.size() ? d.gaps[k] : d.tail_gap;
    if (t + g > horizon) break;
    t += g;
    x += velocity * g;
    velocity = -velocity;
    bp.push_back(t);
    vals.push_back(x);
    slopes.push_back(velocity);
    ++k;
  }
  return PiecewisePath(PathKind::linear, std::move(bp), std::move(vals), std::move(slopes), horizon);
}

PiecewisePath sample_telegraph(RngState& rng, const ScalingParams& params, bool random_initial_velocity) {
  double v0 = params.v0;
  if (random_initial_velocity && rng.uniform01() <= 0.5) v0 = -v0;
  std::vector<double> bp{0.0}, vals{0.0}, slopes{v0};
  double t = 0.0, x = 0.0, velocity = v0;
  long long jumps = 0;
  while (true) {
    double g = sample_exponential(rng, params.lambda);
    if (t + g > params.T) break;
    if (++jumps > kMaxJumps) throw resource_limit_error("sample_telegraph: jump cap exceeded");
    t += g;
    x += velocity * g;
    velocity = -velocity;
    bp.push_back(t);
    vals.push_back(x);
    slopes.push_back(velocity);
  }
  return PiecewisePath(PathKind::linear, std::move(bp), std::move(vals), std::move(slopes), params.T);
}

double telegraph_mean_exact(double t, const ScalingParams& params) {
  if (!(t >= 0.0)) throw std::invalid_argument("telegraph_mean_exact: t must be >= 0");
  return params.v0 / (2.0 * params.lambda) * (1.0 - std::exp(-2.0 * params.lambda * t));
}

double telegraph_second_moment_exact(double t, const ScalingParams& params) {
  if (!(t >= 0.0)) throw std::invalid_argument("telegraph_second_moment_exact: t must be >= 0");
  double lt = params.lambda * t;
  return params.v0 * params.v0 / (2.0 * params.lambda * params.lambda) *
         (2.0 * lt - (1.0 - std::exp(-2.0 * lt)));
}

double telegraph_variance_exact(double t, const ScalingParams& params) {
  if (!(t >= 0.0)) throw std::invalid_argument("telegraph_variance_exact: t must be >= 0");
  double lt = params.lambda * t;
  return params.v0 * params.v0 / (params.lambda * params.lambda) *
         (lt + std::exp(-2.0 * lt) - std::exp(-4.0 * lt) / 4.0 - 0.75);
}

double gaussian_abs_moment_coeff(double r) {
  if (!(r > 0.0)) throw std::invalid_argument("gaussian_abs_moment_coeff: r must be > 0");
  return std::pow(2.0, r / 2.0) * std::tgamma((r + 1.0) / 2.0) / std::sqrt(M_PI);
}

double abs_moment_bound(double t, double r, const ScalingParams& params, double C_r) {
  if (!(t > 0.0)) throw std::invalid_argument("abs_moment_bound: t must be > 0");
  if (!(r > 0.0)) throw std::invalid_argument("abs_moment_bound: r must be > 0");
  if (!(C_r >= 0.0)) throw std::invalid_argument("abs_moment_bound: C_r must be >= 0");
  double av = std::fabs(params.v0);
  double lam = params.lambda;
  double diffusive = std::pow(av, r) * (gaussian_abs_moment_coeff(r) * std::pow(lam, -r / 2.0) * std::pow(t, r / 2.0) +
                                        C_r * std::pow(lam, -r / 2.0 - 1.0) * std::pow(t, r / 2.0 - 1.0));
  double crude = std::pow(av * t, r);
  return std::min(diffusive, crude);
}

}  // namespace telecoupler
