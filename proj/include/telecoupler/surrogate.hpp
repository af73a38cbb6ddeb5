#pragma once

#include <vector>

#include "telecoupler/path.hpp"
#include "telecoupler/random.hpp"

namespace telecoupler {

/// Inputs shared by the decoupled processes: a fixed jump count n and the
/// n unit-rate exponential variates driving every construction below.
struct SurrogateInputs {
  long long n = 0;
  std::vector<double> unit_gaps;  // n i.i.d. Exp(1) draws
  ScalingParams params;
};

/// Draw n ~ Poisson(T*) and the matching exponential variates.
SurrogateInputs sample_surrogate_inputs(RngState& rng, const ScalingParams& params);

/// The decoupled flip path: the velocity flip path scaled by 1/L, driven by
/// waiting times (T/n) u_k for k <= n with tail gap 2T. For n = 0 this is
/// the ray t -> v0 t / L. All n jump breakpoints are materialized so the
/// path evaluates exactly at any jump time, also past the horizon.
PiecewisePath decoupled_flip_path(const SurrogateInputs& in);

/// Centered increments of the flip path at even jumps, together with the
/// even jump times of the Exp(lambda) gap sequence s = u/lambda:
///   increments[k-1]      = -v0 (s_{2k} - s_{2k-1}) / L
///   even_jump_times[k-1] = t_{2k}(s)
/// Each increment has mean 0 and variance 2/L*^2 (a Laplace law).
struct WalkIncrements {
  std::vector<double> increments;
  std::vector<double> even_jump_times;
};
WalkIncrements walk_increments(const SurrogateInputs& in);

/// Cadlag walk jumping by increments[k] at the even jump times t_{2k}(s).
/// The zero path for n <= 1.
PiecewisePath even_jump_walk_path(const SurrogateInputs& in);

/// Auxiliary walk with the same increments scaled by T*/n, placed at the
/// rescaled even jump times t_{2k}(w), w_j = (T/n) u_j. The zero path for
/// n <= 1. At every rescaled even jump time it coincides exactly with the
/// decoupled flip path built from the same inputs.
PiecewisePath rescaled_even_jump_walk_path(const SurrogateInputs& in);

/// The same increments placed on the uniform grid l*T/ntilde, ntilde = floor(n/2).
PiecewisePath grid_walk_path(const std::vector<double>& increments, long long n, double T);

enum class SurrogateKind { decoupled_flip, even_jump_walk, rescaled_walk, grid_walk };

/// Sample n ~ Poisson(T*) and dispatch to the requested builder.
PiecewisePath mix_over_poisson(RngState& rng, const ScalingParams& params, SurrogateKind kind);

}  // namespace telecoupler
