#include "telecoupler/couplings.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <json.hpp>

#include "telecoupler/errors.hpp"
#include "telecoupler/telegraph.hpp"
#include "telecoupler/transport.hpp"

namespace telecoupler {

namespace {
constexpr long long kRejectionCap = 1000000;

// Stream tags for spawned child streams within one coupled draw.
constexpr std::uint64_t kTagFlip = 1;
constexpr std::uint64_t kTagBrownian = 2;
constexpr std::uint64_t kTagBridge = 3;
}  // namespace

std::string coupling_tag_name(CouplingTag tag) {
  switch (tag) {
    case CouplingTag::independent: return "independent";
    case CouplingTag::coinflip: return "coinflip";
    case CouplingTag::synchronous: return "synchronous";
    case CouplingTag::kmt: return "kmt";
    case CouplingTag::chain: return "chain";
  }
  return "unknown";
}

std::string CoupledPathPair::to_json() const {
  nlohmann::ordered_json j;
  j["coupling"] = coupling_tag_name(coupling_tag);
  j["branch"] = branch_tag == BranchTag::diagonal      ? "diagonal"
                : branch_tag == BranchTag::offdiagonal ? "offdiagonal"
                                                       : "n/a";
  j["left"] = nlohmann::json::parse(left.to_json());
  j["right"] = nlohmann::json::parse(right.to_json());
  return j.dump();
}

double coinflip_log_density_ratio(long long n, double r) {
  if (n < 1) throw std::invalid_argument("coinflip_log_density_ratio: n must be >= 1");
  if (r <= 0.0 || r > 1.0) return -std::numeric_limits<double>::infinity();
  double dn = static_cast<double>(n);
  return std::lgamma(dn + 1.0) - dn * std::log(dn) + dn * r;
}

double coinflip_threshold(long long n) {
  if (n < 1) throw std::invalid_argument("coinflip_threshold: n must be >= 1");
  double dn = static_cast<double>(n);
  return std::max(0.0, (dn * std::log(dn) - std::lgamma(dn + 1.0)) / dn);
}

CoinFlipScales coinflip_scale_pair(RngState& rng, long long n) {
  if (n < 1) throw std::invalid_argument("coinflip_scale_pair: n must be >= 1");
  double r = sample_gamma(rng, n, static_cast<double>(n));
  double ln_g = coinflip_log_density_ratio(n, r);
  if (std::log(rng.uniform01()) <= std::min(0.0, ln_g)) return CoinFlipScales{r, r, BranchTag::diagonal};

  // Off-diagonal: the rejected draw has exactly the nu2 (1-g)_+ law.
  CoinFlipScales out;
  out.branch = BranchTag::offdiagonal;
  out.r2 = r;
  double inv_n = 1.0 / static_cast<double>(n);
  for (long long it = 0; it < kRejectionCap; ++it) {
    double cand = std::pow(rng.uniform01(), inv_n);  // nu1 by inverse CDF
    double lg = coinflip_log_density_ratio(n, cand);
    if (lg > 0.0 && rng.uniform01() < 1.0 - std::exp(-lg)) {
      out.r1 = cand;
      return out;
    }
  }
  throw resource_limit_error("coinflip_scale_pair: rejection cap exceeded");
}

PiecewisePath sample_brownian(RngState& rng, double sigma2, const std::vector<double>& times,
                              double horizon) {
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("sample_brownian: sigma2 must be >= 0");
  if (times.empty() || times.front() != 0.0)
    throw std::invalid_argument("sample_brownian: times must start at 0");
  std::vector<double> values(times.size());
  values[0] = 0.0;
  for (std::size_t k = 1; k < times.size(); ++k) {
    double dt = times[k] - times[k - 1];
    if (!(dt > 0.0)) throw std::invalid_argument("sample_brownian: times must be strictly increasing");
    values[k] = values[k - 1] + std::sqrt(sigma2 * dt) * rng.normal01();
  }
  std::vector<double> slopes(times.size());
  for (std::size_t k = 0; k + 1 < times.size(); ++k)
    slopes[k] = (values[k + 1] - values[k]) / (times[k + 1] - times[k]);
  slopes.back() = 0.0;
  return PiecewisePath(PathKind::linear, times, std::move(values), std::move(slopes), horizon);
}

PiecewisePath brownian_fill(const std::vector<double>& grid_values, const std::vector<double>& grid_times,
                            double sigma2, const std::vector<double>& eval_times, RngState& rng) {
  if (grid_times.empty() || grid_times.front() != 0.0)
    throw std::invalid_argument("brownian_fill: grid_times must start at 0");
  if (grid_values.size() != grid_times.size())
    throw std::invalid_argument("brownian_fill: grid_values/grid_times size mismatch");
  if (grid_values.front() != 0.0) throw std::invalid_argument("brownian_fill: grid_values[0] must be 0");
  for (std::size_t k = 1; k < grid_times.size(); ++k)
    if (!(grid_times[k] > grid_times[k - 1]))
      throw std::invalid_argument("brownian_fill: grid_times must be strictly increasing");
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("brownian_fill: sigma2 must be >= 0");
  const double T = grid_times.back();
  for (double t : eval_times)
    if (t < 0.0 || t > T) throw std::invalid_argument("brownian_fill: eval time outside [0, T]");

  std::vector<double> times = eval_times;
  times.insert(times.end(), grid_times.begin(), grid_times.end());
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  std::vector<double> values(times.size());
  std::size_t gk = 0;  // index of the rightmost grid constraint at or before the anchor
  double t_left = 0.0, x_left = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    double t = times[k];
    while (gk + 1 < grid_times.size() && grid_times[gk + 1] <= t) ++gk;
    if (grid_times[gk] == t) {
      values[k] = grid_values[gk];
    } else {
      // Bridge between the last fixed point and the next grid constraint.
      double t_right = grid_times[gk + 1];
      double x_right = grid_values[gk + 1];
      double span = t_right - t_left;
      double mean = x_left + (x_right - x_left) * (t - t_left) / span;
      double var = sigma2 * (t - t_left) * (t_right - t) / span;
      values[k] = mean + std::sqrt(std::max(var, 0.0)) * rng.normal01();
    }
    t_left = t;
    x_left = values[k];
  }
  std::vector<double> slopes(times.size());
  for (std::size_t k = 0; k + 1 < times.size(); ++k)
    slopes[k] = (values[k + 1] - values[k]) / (times[k + 1] - times[k]);
  slopes.back() = 0.0;
  return PiecewisePath(PathKind::linear, std::move(times), std::move(values), std::move(slopes), T);
}

std::vector<double> cost_grid(const PiecewisePath& partner, double T, std::size_t n_uniform) {
  std::vector<double> times;
  times.reserve(n_uniform + 1 + partner.breakpoints().size());
  for (std::size_t k = 0; k <= n_uniform; ++k)
    times.push_back(T * static_cast<double>(k) / static_cast<double>(n_uniform));
  for (double b : partner.breakpoints())
    if (b > 0.0 && b < T) times.push_back(b);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  return times;
}

CoupledPathPair independent_pair(RngState& rng, const ScalingParams& params) {
  RngState flip_rng = rng.spawn(kTagFlip);
  RngState brownian_rng = rng.spawn(kTagBrownian);
  CoupledPathPair pair;
  pair.coupling_tag = CouplingTag::independent;
  pair.left = sample_telegraph(flip_rng, params).scaled(1.0 / params.L);
  pair.right = sample_brownian(brownian_rng, params.sigma2(), cost_grid(pair.left, params.T), params.T);
  return pair;
}

CoupledPathPair coinflip_pair(RngState& rng, const ScalingParams& params) {
  CoupledPathPair pair;
  pair.coupling_tag = CouplingTag::coinflip;
  long long k = sample_poisson(rng, params.t_star());
  if (k == 0) {
    pair.left = PiecewisePath::ray(params.v0 / params.L, params.T);
    pair.right = pair.left;
    pair.branch_tag = BranchTag::diagonal;
    return pair;
  }
  CoinFlipScales scales = coinflip_scale_pair(rng, k);
  SimplexSample simplex = sample_simplex(rng, k);
  auto scaled_flip = [&](double r) {
    std::vector<double> gaps(simplex.u.size());
    for (std::size_t i = 0; i < gaps.size(); ++i) gaps[i] = params.T * r * simplex.u[i];
    return flip_path(WaitingTimes(std::move(gaps), 2.0 * params.T), params.v0, params.T)
        .scaled(1.0 / params.L);
  };
  pair.branch_tag = scales.branch;
  pair.left = scaled_flip(scales.r1);
  pair.right = scales.branch == BranchTag::diagonal ? pair.left : scaled_flip(scales.r2);
  return pair;
}

CoupledPathPair synchronous_pair(RngState& rng, const ScalingParams& params, SynchronousKind which) {
  SurrogateInputs in = sample_surrogate_inputs(rng, params);
  CoupledPathPair pair;
  pair.coupling_tag = CouplingTag::synchronous;
  switch (which) {
    case SynchronousKind::flip_vs_rescaled_walk:
      pair.left = decoupled_flip_path(in);
      pair.right = rescaled_even_jump_walk_path(in);
      break;
    case SynchronousKind::rescaled_walk_vs_even_walk:
      pair.left = rescaled_even_jump_walk_path(in);
      pair.right = even_jump_walk_path(in);
      break;
    case SynchronousKind::flip_vs_even_walk:
      pair.left = decoupled_flip_path(in);
      pair.right = even_jump_walk_path(in);
      break;
  }
  return pair;
}

namespace {

// Brownian path whose skeleton on the uniform grid l*T/ntilde follows the
// Gaussian walk coupled to the given standard Laplace increments; bridges
// fill in the cost-evaluation grid.
PiecewisePath coupled_brownian_path(RngState& rng, const ScalingParams& params,
                                    const std::vector<double>& laplace_increments, KmtMode mode,
                                    const std::vector<double>& eval_times) {
  const std::size_t ntilde = laplace_increments.size();
  std::vector<double> gauss = coupled_gaussian_increments(laplace_increments, mode, shared_laplace_walk_tables());
  // Per-step variance 2 maps to Brownian increments of variance sigma^2 T/ntilde.
  double scale = params.v0 / (params.lambda * params.L) *
                 std::sqrt(params.t_star() / (2.0 * static_cast<double>(ntilde)));
  std::vector<double> grid_times(ntilde + 1), grid_values(ntilde + 1);
  grid_times[0] = 0.0;
  grid_values[0] = 0.0;
  for (std::size_t l = 1; l <= ntilde; ++l) {
    grid_times[l] = params.T * static_cast<double>(l) / static_cast<double>(ntilde);
    grid_values[l] = grid_values[l - 1] + scale * gauss[l - 1];
  }
  RngState bridge_rng = rng.spawn(kTagBridge);
  return brownian_fill(grid_values, grid_times, params.sigma2(), eval_times, bridge_rng);
}

}  // namespace

CoupledPathPair kmt_pair(RngState& rng, const ScalingParams& params, KmtMode mode) {
  SurrogateInputs in = sample_surrogate_inputs(rng, params);
  CoupledPathPair pair;
  pair.coupling_tag = CouplingTag::kmt;
  pair.left = even_jump_walk_path(in);
  if (in.n <= 1) {
    RngState brownian_rng = rng.spawn(kTagBrownian);
    pair.right = sample_brownian(brownian_rng, params.sigma2(), cost_grid(pair.left, params.T), params.T);
    return pair;
  }
  long long ntilde = in.n / 2;
  std::vector<double> laplace(static_cast<std::size_t>(ntilde));
  for (long long k = 0; k < ntilde; ++k)
    laplace[static_cast<std::size_t>(k)] = in.unit_gaps[static_cast<std::size_t>(2 * k)] -
                                           in.unit_gaps[static_cast<std::size_t>(2 * k + 1)];
  pair.right = coupled_brownian_path(rng, params, laplace, mode, cost_grid(pair.left, params.T));
  return pair;
}

CoupledPathPair chain_pair(RngState& rng, const ScalingParams& params, KmtMode mode) {
  CoupledPathPair pair;
  pair.coupling_tag = CouplingTag::chain;
  long long k = sample_poisson(rng, params.t_star());
  if (k == 0) {
    pair.left = PiecewisePath::ray(params.v0 / params.L, params.T);
    RngState brownian_rng = rng.spawn(kTagBrownian);
    pair.right = sample_brownian(brownian_rng, params.sigma2(), cost_grid(pair.left, params.T), params.T);
    return pair;
  }
  CoinFlipScales scales = coinflip_scale_pair(rng, k);
  SimplexSample simplex = sample_simplex(rng, k);
  pair.branch_tag = scales.branch;

  std::vector<double> gaps(simplex.u.size());
  for (std::size_t i = 0; i < gaps.size(); ++i) gaps[i] = params.T * scales.r1 * simplex.u[i];
  pair.left =
      flip_path(WaitingTimes(std::move(gaps), 2.0 * params.T), params.v0, params.T).scaled(1.0 / params.L);

  if (k == 1) {
    RngState brownian_rng = rng.spawn(kTagBrownian);
    pair.right = sample_brownian(brownian_rng, params.sigma2(), cost_grid(pair.left, params.T), params.T);
    return pair;
  }

  // Reconstruct the unit-rate gaps carried by the decoupled process: the
  // simplex coordinates times the gap-scale sum k * r2.
  long long ntilde = k / 2;
  double total = static_cast<double>(k) * scales.r2;
  std::vector<double> laplace(static_cast<std::size_t>(ntilde));
  for (long long j = 0; j < ntilde; ++j)
    laplace[static_cast<std::size_t>(j)] = total * (simplex.u[static_cast<std::size_t>(2 * j)] -
                                                    simplex.u[static_cast<std::size_t>(2 * j + 1)]);
  pair.right = coupled_brownian_path(rng, params, laplace, mode, cost_grid(pair.left, params.T));
  return pair;
}

double pair_cost(const CoupledPathPair& pair) {
  double T = pair.left.horizon();
  bool has_brownian = pair.coupling_tag == CouplingTag::independent ||
                      pair.coupling_tag == CouplingTag::kmt || pair.coupling_tag == CouplingTag::chain;
  return average_quadratic_cost(pair.left, pair.right, T,
                                has_brownian ? IntegrationRule::trapezoid : IntegrationRule::exact_closed_form);
}

}  // namespace telecoupler
