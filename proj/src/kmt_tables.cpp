#include "telecoupler/kmt_tables.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

#include <fftw3.h>

#include "telecoupler/errors.hpp"

namespace telecoupler {

namespace {

constexpr double kMassDefectTolerance = 1e-6;
constexpr std::size_t kConditionalSNodes = 257;
constexpr std::size_t kConditionalRowPoints = 1025;
constexpr double kConditionalSRangeSds = 10.0;
constexpr double kUClamp = 1e-12;

double block_sd(int level) { return std::sqrt(2.0 * std::pow(2.0, level)); }

double trapezoid_mass(const std::vector<double>& f, double dx) {
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < f.size(); ++i) m += 0.5 * (f[i] + f[i + 1]);
  return m * dx;
}

// Linear interpolation on a uniform grid; clamps outside the range.
double lerp_uniform(const std::vector<double>& y, double x_lo, double dx, double x) {
  double pos = (x - x_lo) / dx;
  if (pos <= 0.0) return y.front();
  double last = static_cast<double>(y.size() - 1);
  if (pos >= last) return y.back();
  std::size_t i = static_cast<std::size_t>(pos);
  double t = pos - static_cast<double>(i);
  return y[i] + t * (y[i + 1] - y[i]);
}

// Inverse of a non-decreasing tabulated function on a uniform x grid.
double invert_monotone(const std::vector<double>& y, double x_lo, double dx, double target) {
  if (target <= y.front()) return x_lo;
  if (target >= y.back()) return x_lo + dx * static_cast<double>(y.size() - 1);
  auto it = std::lower_bound(y.begin(), y.end(), target);
  std::size_t hi = static_cast<std::size_t>(it - y.begin());
  std::size_t lo = hi - 1;
  double span = y[hi] - y[lo];
  double t = span > 0.0 ? (target - y[lo]) / span : 0.5;
  return x_lo + dx * (static_cast<double>(lo) + t);
}

std::vector<double> cumulative_cdf(const std::vector<double>& f, double dx) {
  std::vector<double> cdf(f.size());
  cdf[0] = 0.0;
  for (std::size_t i = 1; i < f.size(); ++i) cdf[i] = cdf[i - 1] + 0.5 * dx * (f[i - 1] + f[i]);
  double total = cdf.back();
  if (!(total > 0.0)) throw numeric_resolution_error("kmt tables: degenerate density row");
  for (auto& v : cdf) v /= total;
  return cdf;
}

// The split of a block of two increments has a closed form: given the block
// sum s >= 0, the first increment has density
//   (e^{2x} 1{x<0} + 1{0<=x<=s} + e^{-2(x-s)} 1{x>s}) / (1+s),
// i.e. exponential tails around a flat plateau. Negative s follows from the
// symmetry F(x|s) = 1 - F(-x|-s).
double pair_conditional_cdf(double s, double x) {
  if (s < 0.0) return 1.0 - pair_conditional_cdf(-s, -x);
  if (x < 0.0) return 0.5 * std::exp(2.0 * x) / (1.0 + s);
  if (x <= s) return (0.5 + x) / (1.0 + s);
  return 1.0 - 0.5 * std::exp(-2.0 * (x - s)) / (1.0 + s);
}

double pair_conditional_quantile(double s, double u) {
  if (s < 0.0) return -pair_conditional_quantile(-s, 1.0 - u);
  double q = u * (1.0 + s);
  if (q < 0.5) return 0.5 * std::log(std::max(2.0 * q, 1e-300));
  if (q <= 0.5 + s) return q - 0.5;
  return s - 0.5 * std::log(std::max(2.0 * (1.0 + s) * (1.0 - u), 1e-300));
}

}  // namespace

LaplaceWalkTables::LaplaceWalkTables(int max_level, double range_sds, std::size_t grid_size)
    : max_level_(max_level) {
  if (max_level < 1) throw std::invalid_argument("LaplaceWalkTables: max_level must be >= 1");
  if (!(range_sds > 0.0) || grid_size < 64)
    throw std::invalid_argument("LaplaceWalkTables: bad grid parameters");

  const std::size_t G = grid_size;
  std::size_t fft_size = 1;
  while (fft_size < 2 * G) fft_size <<= 1;

  std::vector<std::complex<double>> buf(fft_size);
  fftw_plan forward = fftw_plan_dft_1d(static_cast<int>(fft_size), reinterpret_cast<fftw_complex*>(buf.data()),
                                       reinterpret_cast<fftw_complex*>(buf.data()), FFTW_FORWARD, FFTW_ESTIMATE);
  fftw_plan backward = fftw_plan_dft_1d(static_cast<int>(fft_size), reinterpret_cast<fftw_complex*>(buf.data()),
                                        reinterpret_cast<fftw_complex*>(buf.data()), FFTW_BACKWARD, FFTW_ESTIMATE);

  // Densities per level, each on its own grid of G points over +-range.
  std::vector<std::vector<double>> density(static_cast<std::size_t>(max_level) + 1);
  std::vector<double> range(static_cast<std::size_t>(max_level) + 1);
  std::vector<double> step(static_cast<std::size_t>(max_level) + 1);

  range[0] = range_sds * block_sd(0);
  step[0] = 2.0 * range[0] / static_cast<double>(G - 1);
  density[0].resize(G);
  for (std::size_t i = 0; i < G; ++i) {
    double x = -range[0] + step[0] * static_cast<double>(i);
    density[0][i] = 0.5 * std::exp(-std::fabs(x));
  }

  for (int level = 1; level <= max_level; ++level) {
    const auto& f = density[static_cast<std::size_t>(level - 1)];
    double dx = step[static_cast<std::size_t>(level - 1)];
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    for (std::size_t i = 0; i < G; ++i) buf[i] = f[i];
    fftw_execute(forward);
    for (auto& z : buf) z *= z;
    fftw_execute(backward);
    // buf[k] now holds (f*f) at offset k on the dx grid starting at -2*range,
    // up to the 1/fft_size normalization and the dx quadrature weight.
    double scale = dx / static_cast<double>(fft_size);

    range[static_cast<std::size_t>(level)] = range_sds * block_sd(level);
    step[static_cast<std::size_t>(level)] =
        2.0 * range[static_cast<std::size_t>(level)] / static_cast<double>(G - 1);
    auto& g = density[static_cast<std::size_t>(level)];
    g.resize(G);
    double conv_lo = -2.0 * range[static_cast<std::size_t>(level - 1)];
    for (std::size_t i = 0; i < G; ++i) {
      double x = -range[static_cast<std::size_t>(level)] +
                 step[static_cast<std::size_t>(level)] * static_cast<double>(i);
      double pos = (x - conv_lo) / dx;
      double v = 0.0;
      if (pos >= 0.0 && pos <= static_cast<double>(2 * G - 2)) {
        std::size_t k = static_cast<std::size_t>(pos);
        double t = pos - static_cast<double>(k);
        double a = buf[k].real();
        double b = k + 1 < fft_size ? buf[k + 1].real() : a;
        v = (a + t * (b - a)) * scale;
      }
      g[i] = std::max(v, 0.0);
    }
    double mass = trapezoid_mass(g, step[static_cast<std::size_t>(level)]);
    if (std::fabs(mass - 1.0) > kMassDefectTolerance) {
      fftw_destroy_plan(forward);
      fftw_destroy_plan(backward);
      throw numeric_resolution_error("LaplaceWalkTables: density mass defect exceeds tolerance");
    }
    for (auto& v : g) v /= mass;
  }

  fftw_destroy_plan(forward);
  fftw_destroy_plan(backward);

  // Marginal CDF tables.
  marginals_.resize(static_cast<std::size_t>(max_level) + 1);
  for (int level = 0; level <= max_level; ++level) {
    auto& m = marginals_[static_cast<std::size_t>(level)];
    m.x_lo = -range[static_cast<std::size_t>(level)];
    m.dx = step[static_cast<std::size_t>(level)];
    m.cdf = cumulative_cdf(density[static_cast<std::size_t>(level)], m.dx);
  }

  // Conditional CDF tables for levels >= 2; the level-1 split is analytic.
  conditionals_.resize(static_cast<std::size_t>(max_level) + 1);
  for (int level = 2; level <= max_level; ++level) {
    const auto& f = density[static_cast<std::size_t>(level - 1)];
    double half_range = range[static_cast<std::size_t>(level - 1)];
    double dx = step[static_cast<std::size_t>(level - 1)];
    auto& table = conditionals_[static_cast<std::size_t>(level)];
    double s_max = kConditionalSRangeSds * block_sd(level);
    table.s_lo = -s_max;
    table.ds = 2.0 * s_max / static_cast<double>(kConditionalSNodes - 1);
    table.row_x_lo.resize(kConditionalSNodes);
    table.row_dx.resize(kConditionalSNodes);
    table.rows.resize(kConditionalSNodes);
    std::vector<double> h;
    for (std::size_t js = 0; js < kConditionalSNodes; ++js) {
      double s = table.s_lo + table.ds * static_cast<double>(js);
      double lo = std::max(-half_range, s - half_range);
      double hi = std::min(half_range, s + half_range);
      double row_dx = (hi - lo) / static_cast<double>(kConditionalRowPoints - 1);
      h.assign(kConditionalRowPoints, 0.0);
      for (std::size_t i = 0; i < kConditionalRowPoints; ++i) {
        double x = lo + row_dx * static_cast<double>(i);
        double fx = lerp_uniform(f, -half_range, dx, x);
        double fy = lerp_uniform(f, -half_range, dx, s - x);
        h[i] = fx * fy;
      }
      table.row_x_lo[js] = lo;
      table.row_dx[js] = row_dx;
      table.rows[js] = cumulative_cdf(h, row_dx);
    }
  }
}

double LaplaceWalkTables::marginal_cdf(int level, double x) const {
  const auto& m = marginals_.at(static_cast<std::size_t>(level));
  return lerp_uniform(m.cdf, m.x_lo, m.dx, x);
}

double LaplaceWalkTables::marginal_quantile(int level, double u) const {
  const auto& m = marginals_.at(static_cast<std::size_t>(level));
  return invert_monotone(m.cdf, m.x_lo, m.dx, std::clamp(u, 0.0, 1.0));
}

namespace {

// Interpolate between adjacent conditioning nodes.
struct SCell {
  std::size_t lo;
  std::size_t hi;
  double t;
};

SCell locate_s(double s, double s_lo, double ds, std::size_t nodes) {
  double pos = (s - s_lo) / ds;
  if (pos <= 0.0) return {0, 0, 0.0};
  double last = static_cast<double>(nodes - 1);
  if (pos >= last) return {nodes - 1, nodes - 1, 0.0};
  std::size_t i = static_cast<std::size_t>(pos);
  return {i, i + 1, pos - static_cast<double>(i)};
}

}  // namespace

double LaplaceWalkTables::conditional_cdf(int level, double s, double x) const {
  if (level < 1 || level > max_level_) throw std::invalid_argument("conditional_cdf: level out of range");
  if (level == 1) return pair_conditional_cdf(s, x);
  const auto& tb = conditionals_[static_cast<std::size_t>(level)];
  SCell c = locate_s(s, tb.s_lo, tb.ds, kConditionalSNodes);
  double u_lo = lerp_uniform(tb.rows[c.lo], tb.row_x_lo[c.lo], tb.row_dx[c.lo], x);
  if (c.lo == c.hi) return u_lo;
  double u_hi = lerp_uniform(tb.rows[c.hi], tb.row_x_lo[c.hi], tb.row_dx[c.hi], x);
  return u_lo + c.t * (u_hi - u_lo);
}

double LaplaceWalkTables::conditional_quantile(int level, double s, double u) const {
  if (level < 1 || level > max_level_) throw std::invalid_argument("conditional_quantile: level out of range");
  if (level == 1) return pair_conditional_quantile(s, std::clamp(u, 0.0, 1.0));
  const auto& tb = conditionals_[static_cast<std::size_t>(level)];
  SCell c = locate_s(s, tb.s_lo, tb.ds, kConditionalSNodes);
  double uu = std::clamp(u, 0.0, 1.0);
  double x_lo = invert_monotone(tb.rows[c.lo], tb.row_x_lo[c.lo], tb.row_dx[c.lo], uu);
  if (c.lo == c.hi) return x_lo;
  double x_hi = invert_monotone(tb.rows[c.hi], tb.row_x_lo[c.hi], tb.row_dx[c.hi], uu);
  return x_lo + c.t * (x_hi - x_lo);
}

const LaplaceWalkTables& shared_laplace_walk_tables() {
  static const LaplaceWalkTables tables(12);
  return tables;
}

namespace {

double clamp_u(double u) { return std::clamp(u, kUClamp, 1.0 - kUClamp); }

// Match half-block sums recursively: at each split the Gaussian half-sum is
// placed at the same conditional quantile as the realized Laplace half-sum.
void split_block(const LaplaceWalkTables& tables, const std::vector<double>& prefix, std::size_t begin,
                 int level, double s_lap, double s_gauss, std::vector<double>& gauss_out) {
  if (level == 0) {
    gauss_out[begin] = s_gauss;
    return;
  }
  std::size_t half = static_cast<std::size_t>(1) << (level - 1);
  double x_left = prefix[begin + half] - prefix[begin];
  double u = clamp_u(tables.conditional_cdf(level, s_lap, x_left));
  double cond_sd = std::sqrt(static_cast<double>(half));  // halves of var-2 steps
  double g_left = 0.5 * s_gauss + cond_sd * normal_quantile(u);
  split_block(tables, prefix, begin, level - 1, x_left, g_left, gauss_out);
  split_block(tables, prefix, begin + half, level - 1, s_lap - x_left, s_gauss - g_left, gauss_out);
}

}  // namespace

std::vector<double> coupled_gaussian_increments(const std::vector<double>& laplace_increments, KmtMode mode,
                                                const LaplaceWalkTables& tables) {
  const std::size_t n = laplace_increments.size();
  std::vector<double> gauss(n);
  if (mode == KmtMode::quantile) {
    for (std::size_t k = 0; k < n; ++k)
      gauss[k] = std::sqrt(2.0) * normal_quantile(clamp_u(laplace_cdf(laplace_increments[k])));
    return gauss;
  }

  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t k = 0; k < n; ++k) prefix[k + 1] = prefix[k] + laplace_increments[k];

  // Binary decomposition of the walk into power-of-two segments; each
  // segment sum is matched through its marginal CDF, then refined.
  std::size_t begin = 0;
  std::size_t remaining = n;
  while (remaining > 0) {
    int level = 0;
    while ((static_cast<std::size_t>(2) << level) <= remaining && level + 1 <= tables.max_level()) ++level;
    std::size_t m = static_cast<std::size_t>(1) << level;
    double s_lap = prefix[begin + m] - prefix[begin];
    double u = clamp_u(tables.marginal_cdf(level, s_lap));
    double s_gauss = std::sqrt(2.0 * static_cast<double>(m)) * normal_quantile(u);
    split_block(tables, prefix, begin, level, s_lap, s_gauss, gauss);
    begin += m;
    remaining -= m;
  }
  return gauss;
}

double kmt_gap_statistic(RngState& rng, long long n, KmtMode mode) {
  if (n < 1) throw std::invalid_argument("kmt_gap_statistic: n must be >= 1");
  std::vector<double> laplace(static_cast<std::size_t>(n));
  for (auto& v : laplace) v = laplace_quantile(rng.uniform01());
  std::vector<double> gauss = coupled_gaussian_increments(laplace, mode, shared_laplace_walk_tables());
  double s = 0.0, g = 0.0, gap = 0.0;
  for (std::size_t k = 0; k < laplace.size(); ++k) {
    s += laplace[k];
    g += gauss[k];
    gap = std::max(gap, std::fabs(s - g));
  }
  return gap;
}

}  // namespace telecoupler
