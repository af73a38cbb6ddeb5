#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "telecoupler/path.hpp"
#include "telecoupler/random.hpp"

namespace telecoupler {

/// Quadratic cost of one coupled draw.
struct CostSample {
  std::uint64_t replicate_id = 0;
  std::string coupling_tag;
  double value = 0.0;
};

struct EstimateWithCI {
  double point = 0.0;
  double half_width_95 = 0.0;
  long long n_replicates = 0;
};

enum class IntegrationRule {
  exact_closed_form,  // piecewise-quadratic segments integrated in closed form
  trapezoid           // trapezoid on the merged grid (for sampled Brownian partners)
};

/// Average quadratic cost (1/T) int_0^T (X(s) - Y(s))^2 ds for two paths on
/// the same horizon. Exact for linear/step pairs; the trapezoid rule is the
/// estimator of record when one path interpolates sampled Brownian points.
double average_quadratic_cost(const PiecewisePath& left, const PiecewisePath& right, double T,
                              IntegrationRule rule = IntegrationRule::exact_closed_form);

/// Trapezoid quadrature of the squared difference on the union of both
/// paths' breakpoints and n_uniform equally spaced points.
double average_quadratic_cost_trapezoid(const PiecewisePath& left, const PiecewisePath& right, double T,
                                        std::size_t n_uniform);

/// Cost raised to p/2, the per-pair summand of the order-p estimate.
double wp_cost(const PiecewisePath& left, const PiecewisePath& right, double T, double p,
               IntegrationRule rule = IntegrationRule::exact_closed_form);

/// sqrt of the mean cost over independent replicate streams, with a
/// delta-method 95% confidence half-width. Upper estimate of the transport
/// distance realized by whatever coupling replicate_cost draws from.
EstimateWithCI empirical_w2_upper(const std::function<double(RngState&)>& replicate_cost,
                                  std::uint64_t seed, std::uint64_t stream_offset, long long n_replicates);

/// Order-p variant: (mean of c^{p/2})^{1/p}; coincides with empirical_w2_upper
/// at p = 2.
EstimateWithCI empirical_wp_upper(const std::function<double(RngState&)>& replicate_cost,
                                  std::uint64_t seed, std::uint64_t stream_offset, long long n_replicates,
                                  double p);

/// Lower estimate from time-marginal one-dimensional optimal transport:
/// at each grid time the two equally sized sample sets are sorted and the
/// squared differences of order statistics averaged; the result is the
/// sqrt of the time average. samples_a[i][k] is path i evaluated at grid[k].
EstimateWithCI empirical_w2_lower(const std::vector<std::vector<double>>& samples_a,
                                  const std::vector<std::vector<double>>& samples_b,
                                  const std::vector<double>& grid);

/// Serialize cost samples as CSV rows (replicate_id, coupling_tag, cost).
void write_cost_samples_csv(const std::string& filename, const std::vector<CostSample>& samples);

/// JSON object {point, half_width_95, n_replicates}.
std::string estimate_to_json(const EstimateWithCI& estimate);

}  // namespace telecoupler
