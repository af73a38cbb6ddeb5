#include "telecoupler/surrogate.hpp"

#include <cmath>
#include <stdexcept>

namespace telecoupler {

SurrogateInputs sample_surrogate_inputs(RngState& rng, const ScalingParams& params) {
  SurrogateInputs in;
  in.params = params;
  in.n = sample_poisson(rng, params.t_star());
  in.unit_gaps.resize(static_cast<std::size_t>(in.n));
  for (auto& u : in.unit_gaps) u = sample_exponential(rng, 1.0);
  return in;
}

PiecewisePath decoupled_flip_path(const SurrogateInputs& in) {
  if (in.n < 0) throw std::invalid_argument("decoupled_flip_path: n must be >= 0");
  if (static_cast<long long>(in.unit_gaps.size()) != in.n)
    throw std::invalid_argument("decoupled_flip_path: unit_gaps size must equal n");
  const ScalingParams& p = in.params;
  double slope0 = p.v0 / p.L;
  if (in.n == 0) return PiecewisePath::ray(slope0, p.T);

  double scale = p.T / static_cast<double>(in.n);
  std::vector<double> bp(static_cast<std::size_t>(in.n) + 1);
  std::vector<double> vals(bp.size());
  std::vector<double> slopes(bp.size());
  bp[0] = 0.0;
  vals[0] = 0.0;
  slopes[0] = slope0;
  double t = 0.0, x = 0.0, velocity = slope0;
  for (std::size_t k = 0; k < in.unit_gaps.size(); ++k) {
    double g = scale * in.unit_gaps[k];
    t += g;
    x += velocity * g;
    velocity = -velocity;
    bp[k + 1] = t;
    vals[k + 1] = x;
    slopes[k + 1] = velocity;
  }
  // Past the last stored jump the tail gap 2T applies; within the horizon no
  // further jump can fire, so the final slope segment is exact there.
  return PiecewisePath(PathKind::linear, std::move(bp), std::move(vals), std::move(slopes), p.T);
}

WalkIncrements walk_increments(const SurrogateInputs& in) {
  if (static_cast<long long>(in.unit_gaps.size()) != in.n)
    throw std::invalid_argument("walk_increments: unit_gaps size must equal n");
  const ScalingParams& p = in.params;
  long long pairs = in.n / 2;
  WalkIncrements out;
  out.increments.resize(static_cast<std::size_t>(pairs));
  out.even_jump_times.resize(static_cast<std::size_t>(pairs));
  double t = 0.0;
  for (long long k = 0; k < pairs; ++k) {
    double s_odd = in.unit_gaps[static_cast<std::size_t>(2 * k)] / p.lambda;
    double s_even = in.unit_gaps[static_cast<std::size_t>(2 * k + 1)] / p.lambda;
    out.increments[static_cast<std::size_t>(k)] = -p.v0 * (s_even - s_odd) / p.L;
    t += s_odd + s_even;
    out.even_jump_times[static_cast<std::size_t>(k)] = t;
  }
  return out;
}

PiecewisePath even_jump_walk_path(const SurrogateInputs& in) {
  if (in.n <= 1) return PiecewisePath::step_path({}, {}, in.params.T);
  WalkIncrements w = walk_increments(in);
  return PiecewisePath::step_path(std::move(w.even_jump_times), w.increments, in.params.T);
}

PiecewisePath rescaled_even_jump_walk_path(const SurrogateInputs& in) {
  if (in.n <= 1) return PiecewisePath::step_path({}, {}, in.params.T);
  const ScalingParams& p = in.params;
  WalkIncrements w = walk_increments(in);
  double amp = p.t_star() / static_cast<double>(in.n);
  // Rescaled even jump times t_{2k}(w) = (T/n) sum u_j = (T*/n) t_{2k}(s).
  std::vector<double> times(w.even_jump_times.size());
  std::vector<double> sizes(w.increments.size());
  for (std::size_t k = 0; k < times.size(); ++k) {
    times[k] = amp * w.even_jump_times[k];
    sizes[k] = amp * w.increments[k];
  }
  return PiecewisePath::step_path(std::move(times), sizes, p.T);
}

PiecewisePath grid_walk_path(const std::vector<double>& increments, long long n, double T) {
  if (n < 2) throw std::invalid_argument("grid_walk_path: n must be >= 2");
  if (!(T > 0.0)) throw std::invalid_argument("grid_walk_path: T must be > 0");
  long long ntilde = n / 2;
  if (static_cast<long long>(increments.size()) != ntilde)
    throw std::invalid_argument("grid_walk_path: increments size must equal floor(n/2)");
  std::vector<double> times(static_cast<std::size_t>(ntilde));
  for (long long l = 1; l <= ntilde; ++l)
    times[static_cast<std::size_t>(l - 1)] = static_cast<double>(l) * T / static_cast<double>(ntilde);
  return PiecewisePath::step_path(std::move(times), increments, T);
}

PiecewisePath mix_over_poisson(RngState& rng, const ScalingParams& params, SurrogateKind kind) {
  SurrogateInputs in = sample_surrogate_inputs(rng, params);
  switch (kind) {
    case SurrogateKind::decoupled_flip:
      return decoupled_flip_path(in);
    case SurrogateKind::even_jump_walk:
      return even_jump_walk_path(in);
    case SurrogateKind::rescaled_walk:
      return rescaled_even_jump_walk_path(in);
    case SurrogateKind::grid_walk: {
      if (in.n < 2) return PiecewisePath::step_path({}, {}, params.T);
      WalkIncrements w = walk_increments(in);
      return grid_walk_path(w.increments, in.n, params.T);
    }
  }
  throw std::invalid_argument("mix_over_poisson: unknown kind");
}

}  // namespace telecoupler
