#pragma once

#include <string>
#include <vector>

#include "telecoupler/kmt_tables.hpp"
#include "telecoupler/path.hpp"
#include "telecoupler/random.hpp"
#include "telecoupler/surrogate.hpp"

namespace telecoupler {

enum class CouplingTag { independent, coinflip, synchronous, kmt, chain };
enum class BranchTag { diagonal, offdiagonal, not_applicable };

std::string coupling_tag_name(CouplingTag tag);

/// Two paths on a common horizon built from shared or coupled randomness.
struct CoupledPathPair {
  PiecewisePath left;
  PiecewisePath right;
  CouplingTag coupling_tag = CouplingTag::independent;
  BranchTag branch_tag = BranchTag::not_applicable;
  std::string to_json() const;
};

// --- coin-flip machinery -------------------------------------------------

/// log of the density ratio g(r) between the gap-scale laws
/// nu1(dr) = n r^{n-1} 1{0<r<=1} dr and nu2 = Gamma(n, n):
/// ln g(r) = ln n! - n ln n + n r on (0,1], -inf elsewhere.
double coinflip_log_density_ratio(long long n, double r);

/// The unique root r* in [0,1) of g(r) = 1; g < 1 exactly on (0, r*).
double coinflip_threshold(long long n);

/// Maximal-agreement draw of the pair of gap scales: r ~ nu2 is kept on the
/// diagonal with probability min{1, g(r)}; otherwise r2 keeps the rejected
/// draw (law nu2 (1-g)_+ / Z) and r1 is drawn from nu1 (1 - 1/g)_+ / Z by
/// rejection. Marginals: r1 ~ nu1, r2 ~ nu2.
struct CoinFlipScales {
  double r1 = 1.0;
  double r2 = 1.0;
  BranchTag branch = BranchTag::diagonal;
};
CoinFlipScales coinflip_scale_pair(RngState& rng, long long n);

// --- Brownian building blocks --------------------------------------------

/// Brownian path with diffusivity sigma2 sampled exactly at the given times
/// (sorted, starting at 0), stored as the linear interpolation through the
/// sampled points.
PiecewisePath sample_brownian(RngState& rng, double sigma2, const std::vector<double>& times,
                              double horizon);

/// Brownian bridge interpolation: given exact constraints (grid_times,
/// grid_values) with grid_times[0] = 0 and grid_values[0] = 0, sample the
/// path at eval_times conditionally on the constraints. Marginals at the
/// grid times are preserved exactly. Eval times outside [0, last grid time]
/// are invalid.
PiecewisePath brownian_fill(const std::vector<double>& grid_values, const std::vector<double>& grid_times,
                            double sigma2, const std::vector<double>& eval_times, RngState& rng);

/// Default cost-evaluation grid: n_uniform equally spaced points on [0,T]
/// plus all breakpoints of the partner path. Evaluating a Brownian partner
/// on this grid biases the cost integral by O(sigma^2 dt) per panel.
std::vector<double> cost_grid(const PiecewisePath& partner, double T, std::size_t n_uniform = 1024);

// --- coupled pair samplers -------------------------------------------------

/// Scaled flip path and Brownian path from disjoint streams.
CoupledPathPair independent_pair(RngState& rng, const ScalingParams& params);

/// Coin-flip coupling between the scaled flip path and the decoupled
/// process: K ~ Poisson(T*), shared simplex gaps, per-branch gap scales.
CoupledPathPair coinflip_pair(RngState& rng, const ScalingParams& params);

/// Both paths driven by one draw of (K, unit gaps).
enum class SynchronousKind { flip_vs_rescaled_walk, rescaled_walk_vs_even_walk, flip_vs_even_walk };
CoupledPathPair synchronous_pair(RngState& rng, const ScalingParams& params, SynchronousKind which);

/// Even-jump walk mixture coupled to a Brownian path through the strong
/// approximation of its increment walk on the uniform grid.
CoupledPathPair kmt_pair(RngState& rng, const ScalingParams& params, KmtMode mode);

/// The full constructed coupling between the scaled flip path and the
/// Brownian path: coin-flip gap scales, shared simplex gaps, and the strong
/// approximation of the even-jump walk, composed on one probability space.
/// Both endpoint marginals are the genuine process laws, so the empirical
/// cost is a valid transport upper estimate.
CoupledPathPair chain_pair(RngState& rng, const ScalingParams& params, KmtMode mode = KmtMode::dyadic);

/// Cost of one pair with the integration rule appropriate to its tag
/// (trapezoid whenever a sampled Brownian path is involved).
double pair_cost(const CoupledPathPair& pair);

}  // namespace telecoupler
