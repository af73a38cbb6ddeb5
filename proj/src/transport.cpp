#include "telecoupler/transport.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "telecoupler/errors.hpp"
#include "telecoupler/fmtutil.hpp"
#include "telecoupler/parallel.hpp"

namespace telecoupler {

namespace {

void check_horizons(const PiecewisePath& left, const PiecewisePath& right, double T) {
  if (!(T > 0.0)) throw std::invalid_argument("cost: T must be > 0");
  double slack = 1e-9 * std::max(1.0, T);
  if (left.horizon() < T - slack || right.horizon() < T - slack ||
      std::fabs(left.horizon() - right.horizon()) > slack)
    throw std::invalid_argument("cost: mismatched path horizons");
}

// Walk the merged panels of both paths (plus an optional uniform grid) over
// [0, T]. On each panel the difference is affine: d(t) = d_a + slope (t - a).
template <class PanelFn>
void for_each_panel(const PiecewisePath& l, const PiecewisePath& r, double T, std::size_t n_uniform,
                    PanelFn&& fn) {
  const auto& lb = l.breakpoints();
  const auto& rb = r.breakpoints();
  std::size_t il = 1, ir = 1, iu = 1;
  std::size_t sl = 0, sr = 0;
  double a = 0.0;
  while (a < T) {
    double b = T;
    if (il < lb.size()) b = std::min(b, lb[il]);
    if (ir < rb.size()) b = std::min(b, rb[ir]);
    if (n_uniform > 0 && iu <= n_uniform)
      b = std::min(b, T * static_cast<double>(iu) / static_cast<double>(n_uniform));
    if (b > a) {
      double da = (l.values()[sl] + l.slopes()[sl] * (a - lb[sl])) -
                  (r.values()[sr] + r.slopes()[sr] * (a - rb[sr]));
      double slope = l.slopes()[sl] - r.slopes()[sr];
      fn(a, b, da, slope);
    }
    a = b;
    while (il < lb.size() && lb[il] <= a) sl = il++;
    while (ir < rb.size() && rb[ir] <= a) sr = ir++;
    while (n_uniform > 0 && iu <= n_uniform &&
           T * static_cast<double>(iu) / static_cast<double>(n_uniform) <= a)
      ++iu;
  }
}

}  // namespace

double average_quadratic_cost(const PiecewisePath& left, const PiecewisePath& right, double T,
                              IntegrationRule rule) {
  check_horizons(left, right, T);
  double total = 0.0;
  if (rule == IntegrationRule::exact_closed_form) {
    for_each_panel(left, right, T, 0, [&](double a, double b, double da, double slope) {
      double h = b - a;
      double db = da + slope * h;
      total += h * (da * da + da * db + db * db) / 3.0;
    });
  } else {
    for_each_panel(left, right, T, 0, [&](double a, double b, double da, double slope) {
      double h = b - a;
      double db = da + slope * h;
      total += h * (da * da + db * db) / 2.0;
    });
  }
  return total / T;
}

double average_quadratic_cost_trapezoid(const PiecewisePath& left, const PiecewisePath& right, double T,
                                        std::size_t n_uniform) {
  check_horizons(left, right, T);
  double total = 0.0;
  for_each_panel(left, right, T, n_uniform, [&](double a, double b, double da, double slope) {
    double h = b - a;
    double db = da + slope * h;
    total += h * (da * da + db * db) / 2.0;
  });
  return total / T;
}

double wp_cost(const PiecewisePath& left, const PiecewisePath& right, double T, double p,
               IntegrationRule rule) {
  if (!(p >= 1.0 && p <= 2.0)) throw std::invalid_argument("wp_cost: p must lie in [1,2]");
  return std::pow(average_quadratic_cost(left, right, T, rule), p / 2.0);
}

namespace {

EstimateWithCI reduce_power_mean(const std::vector<double>& values, double p) {
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= (n - 1.0);
  double se = std::sqrt(var / n);
  EstimateWithCI out;
  out.n_replicates = static_cast<long long>(values.size());
  if (mean <= 0.0) {
    out.point = 0.0;
    out.half_width_95 = 1.96 * se;
    return out;
  }
  out.point = std::pow(mean, 1.0 / p);
  out.half_width_95 = 1.96 * se * out.point / (p * mean);  // delta method
  return out;
}

}  // namespace

EstimateWithCI empirical_w2_upper(const std::function<double(RngState&)>& replicate_cost,
                                  std::uint64_t seed, std::uint64_t stream_offset, long long n_replicates) {
  return empirical_wp_upper(replicate_cost, seed, stream_offset, n_replicates, 2.0);
}

EstimateWithCI empirical_wp_upper(const std::function<double(RngState&)>& replicate_cost,
                                  std::uint64_t seed, std::uint64_t stream_offset, long long n_replicates,
                                  double p) {
  if (n_replicates < 100) throw std::invalid_argument("empirical_wp_upper: need at least 100 replicates");
  if (!(p >= 1.0 && p <= 2.0)) throw std::invalid_argument("empirical_wp_upper: p must lie in [1,2]");
  std::vector<double> values(static_cast<std::size_t>(n_replicates));
  parallel_for_index(values.size(), [&](std::size_t i) {
    RngState rng(seed, stream_offset + i);
    double c = replicate_cost(rng);
    values[i] = p == 2.0 ? c : std::pow(c, p / 2.0);
  });
  for (double v : values)
    if (!std::isfinite(v)) throw experiment_failure("empirical_wp_upper: non-finite cost sample");
  return reduce_power_mean(values, p);
}

EstimateWithCI empirical_w2_lower(const std::vector<std::vector<double>>& samples_a,
                                  const std::vector<std::vector<double>>& samples_b,
                                  const std::vector<double>& grid) {
  if (samples_a.size() != samples_b.size())
    throw std::invalid_argument("empirical_w2_lower: sample counts must match");
  if (samples_a.size() < 2) throw std::invalid_argument("empirical_w2_lower: need at least 2 samples");
  if (grid.empty()) throw std::invalid_argument("empirical_w2_lower: empty grid");
  const std::size_t n = samples_a.size();
  for (const auto& row : samples_a)
    if (row.size() != grid.size()) throw std::invalid_argument("empirical_w2_lower: row/grid size mismatch");
  for (const auto& row : samples_b)
    if (row.size() != grid.size()) throw std::invalid_argument("empirical_w2_lower: row/grid size mismatch");

  auto mean_w2sq = [&](std::size_t row_begin, std::size_t row_end) {
    std::vector<double> col_a(row_end - row_begin), col_b(row_end - row_begin);
    double acc = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      for (std::size_t i = row_begin; i < row_end; ++i) {
        col_a[i - row_begin] = samples_a[i][k];
        col_b[i - row_begin] = samples_b[i][k];
      }
      std::sort(col_a.begin(), col_a.end());
      std::sort(col_b.begin(), col_b.end());
      double s = 0.0;
      for (std::size_t i = 0; i < col_a.size(); ++i) {
        double d = col_a[i] - col_b[i];
        s += d * d;
      }
      acc += s / static_cast<double>(col_a.size());
    }
    return acc / static_cast<double>(grid.size());
  };

  EstimateWithCI out;
  out.n_replicates = static_cast<long long>(n);
  out.point = std::sqrt(mean_w2sq(0, n));

  // Confidence width from disjoint batches of the sample set.
  const std::size_t batches = n >= 16 ? 8 : 2;
  std::vector<double> batch_points(batches);
  for (std::size_t b = 0; b < batches; ++b)
    batch_points[b] = std::sqrt(mean_w2sq(b * n / batches, (b + 1) * n / batches));
  double bm = 0.0;
  for (double v : batch_points) bm += v;
  bm /= static_cast<double>(batches);
  double bv = 0.0;
  for (double v : batch_points) bv += (v - bm) * (v - bm);
  bv /= static_cast<double>(batches - 1);
  out.half_width_95 = 1.96 * std::sqrt(bv / static_cast<double>(batches));
  return out;
}

void write_cost_samples_csv(const std::string& filename, const std::vector<CostSample>& samples) {
  std::ofstream out(filename, std::ios::binary);
  if (!out) throw io_error("cannot open " + filename);
  out << "replicate_id,coupling_tag,cost\n";
  for (const auto& s : samples)
    out << s.replicate_id << ',' << s.coupling_tag << ',' << num_to_string(s.value) << '\n';
  if (!out) throw io_error("write failed: " + filename);
}

std::string estimate_to_json(const EstimateWithCI& estimate) {
  nlohmann::ordered_json j;
  j["point"] = estimate.point;
  j["half_width_95"] = estimate.half_width_95;
  j["n_replicates"] = estimate.n_replicates;
  return j.dump();
}

}  // namespace telecoupler
