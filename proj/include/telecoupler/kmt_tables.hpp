#pragma once

#include <cstddef>
#include <vector>

#include "telecoupler/random.hpp"

namespace telecoupler {

/// Tabulated densities and conditional CDFs for sums of standard Laplace
/// increments (density e^{-|x|}/2, variance 2), used to couple the Laplace
/// random walk to a Gaussian walk with the same per-step variance.
///
/// Level j covers blocks of 2^j increments. Densities are built by FFT
/// self-convolution doubling on a fixed-size grid; conditional CDFs of a
/// half-block sum given the block sum are tabulated over a grid of block
/// sums. Tables are immutable after construction and shared read-only.
class LaplaceWalkTables {
 public:
  explicit LaplaceWalkTables(int max_level, double range_sds = 12.0, std::size_t grid_size = 1 << 14);

  int max_level() const { return max_level_; }

  /// CDF of the sum of 2^level increments.
  double marginal_cdf(int level, double x) const;
  /// Quantile of the same law.
  double marginal_quantile(int level, double u) const;

  /// CDF of the first-half sum of a block of 2^level increments given the
  /// block sum s (level >= 1).
  double conditional_cdf(int level, double s, double x) const;
  double conditional_quantile(int level, double s, double u) const;

 private:
  struct MarginalTable {
    double x_lo = 0.0, dx = 0.0;
    std::vector<double> cdf;
  };
  struct ConditionalTable {
    double s_lo = 0.0, ds = 0.0;
    std::vector<double> row_x_lo, row_dx;  // per s-node window
    std::vector<std::vector<double>> rows;  // per s-node CDF on its window
  };

  int max_level_;
  std::vector<MarginalTable> marginals_;       // index = level
  std::vector<ConditionalTable> conditionals_;  // index = level (entry 0 unused)
};

/// Shared instance with blocks up to 2^12, built on first use.
const LaplaceWalkTables& shared_laplace_walk_tables();

enum class KmtMode { quantile, dyadic };

/// Gaussian walk increments (per-step variance 2) coupled to the given
/// standard Laplace increments.
///
/// quantile: each increment is mapped comonotonically through its CDF.
/// dyadic:   block sums are matched coarse-to-fine through conditional
///           quantile transforms, starting from the binary decomposition of
///           the walk length; partial-sum gaps then stay order-one per scale
///           instead of accumulating like a random walk.
std::vector<double> coupled_gaussian_increments(const std::vector<double>& laplace_increments,
                                                KmtMode mode, const LaplaceWalkTables& tables);

/// One replicate of the skeleton gap diagnostic: draw n standard Laplace
/// increments, couple them, and return max_m |S_m - G_m| over prefixes.
double kmt_gap_statistic(RngState& rng, long long n, KmtMode mode);

}  // namespace telecoupler
