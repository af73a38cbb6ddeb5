#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace telecoupler {

/// Model scales (v0, lambda, L, T) with the derived dimensionless quantities
/// T* = lambda T (mean jump count up to the horizon), L* = lambda L / |v0|
/// (horizon in mean-free-path units) and sigma^2 = v0^2/(lambda L^2), the
/// diffusivity of the limiting Brownian motion.
struct ScalingParams {
  double v0 = 1.0;
  double lambda = 1.0;
  double L = 1.0;
  double T = 1.0;

  ScalingParams() = default;
  ScalingParams(double v0_, double lambda_, double L_, double T_);

  double t_star() const { return lambda * T; }
  double l_star() const;
  double sigma2() const { return v0 * v0 / (lambda * L * L); }

  /// Gauge fix (lambda = 1, v0 = 1): T = T*, L = L*.
  static ScalingParams from_dimensionless(double t_star, double l_star);
};

/// One realization of inter-jump waiting times: a finite vector of gaps plus
/// a tail gap assigned to every index beyond the stored ones.
struct WaitingTimes {
  std::vector<double> gaps;
  double tail_gap = 1.0;

  WaitingTimes() = default;
  WaitingTimes(std::vector<double> gaps_, double tail_gap_);
};

enum class PathKind { linear, step };

/// Exact piecewise-linear or piecewise-constant path on [0, horizon].
///
/// breakpoints[0] == 0; values[k] is the path value at breakpoints[k];
/// slopes[k] applies on [breakpoints[k], breakpoints[k+1]) and slopes.back()
/// extends past the last breakpoint. Step paths have all slopes zero and are
/// right-continuous; linear paths are continuous.
class PiecewisePath {
 public:
  PiecewisePath() = default;
  PiecewisePath(PathKind kind, std::vector<double> breakpoints, std::vector<double> values,
                std::vector<double> slopes, double horizon);

  /// Step path from jump times/sizes, starting at 0.
  static PiecewisePath step_path(std::vector<double> jump_times, const std::vector<double>& jump_sizes,
                                 double horizon);
  /// Ray t -> slope * t.
  static PiecewisePath ray(double slope, double horizon);

  PathKind kind() const { return kind_; }
  double horizon() const { return horizon_; }
  const std::vector<double>& breakpoints() const { return breakpoints_; }
  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& slopes() const { return slopes_; }
  std::size_t segment_count() const { return breakpoints_.size(); }

  /// Value at time t >= 0 (right-continuous for step paths).
  double eval(double t) const;
  /// Index of the segment containing t: largest k with breakpoints[k] <= t.
  std::size_t segment_index(double t) const;

  /// Multiply all values and slopes by a.
  PiecewisePath scaled(double a) const;
  /// Rescale time by the given factor (breakpoints and horizon multiply by
  /// factor, slopes divide by it); the path traverses the same values.
  PiecewisePath time_rescaled(double factor) const;

  /// Compact JSON record {kind, breakpoints, values, slopes, horizon}.
  std::string to_json() const;
  static PiecewisePath from_json(const std::string& text);

 private:
  PathKind kind_ = PathKind::linear;
  std::vector<double> breakpoints_{0.0};
  std::vector<double> values_{0.0};
  std::vector<double> slopes_{0.0};
  double horizon_ = 0.0;
};

}  // namespace telecoupler
