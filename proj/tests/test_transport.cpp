#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <cmath>
#include <vector>

#include "telecoupler/couplings.hpp"
#include "telecoupler/telegraph.hpp"
#include "telecoupler/transport.hpp"

using namespace telecoupler;

namespace {

PiecewisePath random_linear_or_step(RngState& rng, double T) {
  int jumps = 1 + static_cast<int>(rng.next_u64() % 12);
  std::vector<double> times(static_cast<std::size_t>(jumps));
  for (auto& t : times) t = rng.uniform(0.0, T);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  if (rng.next_u64() % 2 == 0) {
    std::vector<double> sizes(times.size());
    for (auto& s : sizes) s = rng.uniform(-1.0, 1.0);
    return PiecewisePath::step_path(times, sizes, T);
  }
  std::vector<double> bp{0.0}, vals{0.0}, slopes{rng.uniform(-2.0, 2.0)};
  for (double t : times) {
    vals.push_back(vals.back() + slopes.back() * (t - bp.back()));
    bp.push_back(t);
    slopes.push_back(rng.uniform(-2.0, 2.0));
  }
  return PiecewisePath(PathKind::linear, bp, vals, slopes, T);
}

}  // namespace

TEST_SUITE_BEGIN("transport");

TEST_CASE("closed-form cost values") {
  PiecewisePath ray = PiecewisePath::ray(1.0, 1.0);
  PiecewisePath zero = PiecewisePath::ray(0.0, 1.0);
  CHECK(average_quadratic_cost(ray, ray, 1.0) == 0.0);
  CHECK(average_quadratic_cost(ray, zero, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  // X(t) = t against a step to 1 at t = 0.5: 1/24 + 1/24 = 1/12
  PiecewisePath step = PiecewisePath::step_path({0.5}, {1.0}, 1.0);
  CHECK(average_quadratic_cost(ray, step, 1.0) == doctest::Approx(1.0 / 12.0).epsilon(1e-14));
}

TEST_CASE("exact integrator agrees with fine trapezoid quadrature") {
  RngState rng(31, 0);
  const double T = 1.0;
  for (int rep = 0; rep < 1000; ++rep) {
    PiecewisePath a = random_linear_or_step(rng, T);
    PiecewisePath b = random_linear_or_step(rng, T);
    double exact = average_quadratic_cost(a, b, T);
    double quad = average_quadratic_cost_trapezoid(a, b, T, 1 << 16);
    if (exact > 1e-12) CHECK(std::fabs(quad - exact) / exact < 1e-6);
  }
}

TEST_CASE("scale equivariance") {
  RngState rng(32, 0);
  for (int rep = 0; rep < 200; ++rep) {
    PiecewisePath a = random_linear_or_step(rng, 2.0);
    PiecewisePath b = random_linear_or_step(rng, 2.0);
    double c = average_quadratic_cost(a, b, 2.0);
    double scale = rng.uniform(0.1, 5.0);
    double cs = average_quadratic_cost(a.scaled(scale), b.scaled(scale), 2.0);
    CHECK(cs == doctest::Approx(scale * scale * c).epsilon(1e-12));
  }
}

TEST_CASE("time change identity") {
  // the average cost on [0,T] equals the unnormalized cost of the
  // time-rescaled paths on [0,1]
  RngState rng(33, 0);
  const double T = 3.7;
  for (int rep = 0; rep < 200; ++rep) {
    PiecewisePath a = random_linear_or_step(rng, T);
    PiecewisePath b = random_linear_or_step(rng, T);
    double c = average_quadratic_cost(a, b, T);
    double ct = average_quadratic_cost(a.time_rescaled(1.0 / T), b.time_rescaled(1.0 / T), 1.0);
    CHECK(ct == doctest::Approx(c).epsilon(1e-12));
  }
}

TEST_CASE("order-p costs") {
  PiecewisePath ray = PiecewisePath::ray(1.0, 1.0);
  PiecewisePath zero = PiecewisePath::ray(0.0, 1.0);
  CHECK(wp_cost(ray, zero, 1.0, 2.0) == average_quadratic_cost(ray, zero, 1.0));
  CHECK(wp_cost(ray, ray, 1.0, 1.0) == 0.0);
  CHECK_THROWS_AS(wp_cost(ray, zero, 1.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(wp_cost(ray, zero, 1.0, 2.5), std::invalid_argument);

  // Hoelder ordering of the replicate estimators on the same samples
  ScalingParams params = ScalingParams::from_dimensionless(2.0, 2.0);
  auto cost = [&params](RngState& rng) { return pair_cost(independent_pair(rng, params)); };
  EstimateWithCI p1 = empirical_wp_upper(cost, 99, 0, 400, 1.0);
  EstimateWithCI p2 = empirical_wp_upper(cost, 99, 0, 400, 2.0);
  CHECK(p1.point <= p2.point + 1e-12);
}

TEST_CASE("upper estimator") {
  PiecewisePath ray = PiecewisePath::ray(1.0, 1.0);
  auto zero_cost = [&](RngState&) { return 0.0; };
  EstimateWithCI z = empirical_w2_upper(zero_cost, 1, 0, 100);
  CHECK(z.point == 0.0);
  CHECK(z.half_width_95 == 0.0);
  CHECK_THROWS_AS(empirical_w2_upper(zero_cost, 1, 0, 99), std::invalid_argument);

  // point = sqrt(mean cost), and the half width shrinks like n^{-1/2}
  auto unit_cost = [&](RngState& rng) { return rng.uniform01(); };
  EstimateWithCI small = empirical_w2_upper(unit_cost, 2, 0, 1000);
  EstimateWithCI large = empirical_w2_upper(unit_cost, 2, 0, 16000);
  CHECK(small.point == doctest::Approx(std::sqrt(0.5)).epsilon(0.05));
  CHECK(large.half_width_95 < small.half_width_95);
  (void)ray;
}

TEST_CASE("lower estimator") {
  RngState rng(34, 0);
  const std::size_t n = 4000;
  std::vector<std::vector<double>> a(n, std::vector<double>(2)), b(n, std::vector<double>(2));
  for (std::size_t i = 0; i < n; ++i) {
    a[i][0] = rng.normal01();
    a[i][1] = rng.normal01();
    b[i] = a[i];
  }
  EstimateWithCI same = empirical_w2_lower(a, b, {0.5, 1.0});
  CHECK(same.point == 0.0);

  for (std::size_t i = 0; i < n; ++i) {
    b[i][0] = 2.0 * rng.normal01();
    b[i][1] = 2.0 * rng.normal01();
  }
  EstimateWithCI est = empirical_w2_lower(a, b, {0.5, 1.0});
  CHECK(std::fabs(est.point - 1.0) < 0.1);  // W2(N(0,1), N(0,4)) = 1 per coordinate

  b.pop_back();
  CHECK_THROWS_AS(empirical_w2_lower(a, b, {0.5, 1.0}), std::invalid_argument);
}

TEST_CASE("lower estimate stays below the coupled upper estimate") {
  ScalingParams params = ScalingParams::from_dimensionless(4.0, 2.0);
  EstimateWithCI upper = empirical_w2_upper(
      [&params](RngState& rng) { return pair_cost(independent_pair(rng, params)); }, 55, 0, 500);
  RngState rng(55, 1 << 20);
  const std::size_t n = 500;
  std::vector<double> grid{1.0, 2.0, 3.0, 4.0};
  std::vector<std::vector<double>> a(n), b(n);
  for (std::size_t i = 0; i < n; ++i) {
    RngState flip_rng(55, (1 << 20) + i);
    PiecewisePath x = sample_telegraph(flip_rng, params).scaled(1.0 / params.L);
    a[i].resize(grid.size());
    b[i].resize(grid.size());
    double bm = 0.0, prev = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      a[i][k] = x.eval(grid[k]);
      bm += std::sqrt(params.sigma2() * (grid[k] - prev)) * rng.normal01();
      b[i][k] = bm;
      prev = grid[k];
    }
  }
  EstimateWithCI lower = empirical_w2_lower(a, b, grid);
  CHECK(lower.point <= upper.point + lower.half_width_95 + upper.half_width_95);
}

TEST_CASE("horizon validation") {
  PiecewisePath a = PiecewisePath::ray(1.0, 1.0);
  PiecewisePath b = PiecewisePath::ray(0.0, 2.0);
  CHECK_THROWS_AS(average_quadratic_cost(a, b, 2.0), std::invalid_argument);
}

TEST_CASE("cost sample serialization") {
  std::vector<CostSample> samples{{0, "chain", 0.125}, {1, "independent", 2.0}};
  const std::string file = "cost_samples_test.csv";
  write_cost_samples_csv(file, samples);
  std::ifstream in(file);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  CHECK(line == "replicate_id,coupling_tag,cost");
  std::getline(in, line);
  CHECK(line == "0,chain,0.125");
  in.close();
  std::remove(file.c_str());

  EstimateWithCI est{1.5, 0.25, 400};
  CHECK(estimate_to_json(est) == "{\"point\":1.5,\"half_width_95\":0.25,\"n_replicates\":400}");
}

TEST_SUITE_END();
