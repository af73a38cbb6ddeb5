#pragma once

#include "telecoupler/path.hpp"
#include "telecoupler/random.hpp"

namespace telecoupler {

/// Number of jumps by time t: the unique n with t_n <= t < t_{n+1}, where
/// t_n is the n-th partial sum of the waiting times (tail_gap repeats past
/// the stored gaps).
long long jump_count(double t, const WaitingTimes& d);

/// Position of the velocity flip path at time t: starts at 0 with velocity
/// v0, flips the sign of the velocity at every jump time of d.
double path_eval(double t, const WaitingTimes& d, double v0);

/// Velocity flip path with the given waiting times, built exactly as a
/// piecewise-linear path on [0, horizon] (alternating slopes +-v0).
/// Jumps beyond the horizon are dropped.
PiecewisePath flip_path(const WaitingTimes& d, double v0, double horizon);

/// Draw Exp(lambda) waiting times until the horizon T is passed and build
/// the path. With random_initial_velocity the sign of v0 is drawn uniformly,
/// which turns the free flip model into the symmetric telegraph process.
PiecewisePath sample_telegraph(RngState& rng, const ScalingParams& params,
                               bool random_initial_velocity = false);

/// E[X(t)] = v0/(2 lambda) (1 - e^{-2 lambda t}).
double telegraph_mean_exact(double t, const ScalingParams& params);

/// E[X(t)^2] = v0^2/(2 lambda^2) (2 lambda t - (1 - e^{-2 lambda t})).
double telegraph_second_moment_exact(double t, const ScalingParams& params);

/// Var[X(t)] = v0^2/lambda^2 (lambda t + e^{-2 lambda t} - e^{-4 lambda t}/4 - 3/4).
double telegraph_variance_exact(double t, const ScalingParams& params);

/// Gaussian absolute moment coefficient 2^{r/2} Gamma((r+1)/2)/sqrt(pi).
double gaussian_abs_moment_coeff(double r);

/// Upper bound for E[|X(t)|^r]: the minimum of
///   |v0|^r (Ctilde(r) lambda^{-r/2} t^{r/2} + C_r lambda^{-r/2-1} t^{r/2-1})
/// and the crude speed bound |v0|^r t^r. C_r is caller-supplied.
double abs_moment_bound(double t, double r, const ScalingParams& params, double C_r);

}  // namespace telecoupler
