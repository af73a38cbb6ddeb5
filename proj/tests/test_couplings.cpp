#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>
#include <vector>

#include "telecoupler/couplings.hpp"
#include "telecoupler/errors.hpp"
#include "telecoupler/telegraph.hpp"
#include "telecoupler/transport.hpp"

using namespace telecoupler;

namespace {

struct Stats {
  double mean, var, se_mean;
};

Stats stats(const std::vector<double>& v) {
  double n = static_cast<double>(v.size());
  double m = 0.0;
  for (double x : v) m += x;
  m /= n;
  double s2 = 0.0;
  for (double x : v) s2 += (x - m) * (x - m);
  s2 /= n - 1.0;
  return {m, s2, std::sqrt(s2 / n)};
}

}  // namespace

TEST_SUITE_BEGIN("couplings");

TEST_CASE("coin-flip density ratio and threshold") {
  CHECK(coinflip_threshold(2) == doctest::Approx(0.34657359027997264).epsilon(1e-14));
  CHECK(coinflip_threshold(1) == 0.0);
  // g is increasing on (0,1], crosses 1 exactly at the threshold
  for (long long n : {2LL, 5LL, 40LL}) {
    double r_star = coinflip_threshold(n);
    CHECK(coinflip_log_density_ratio(n, r_star) == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(coinflip_log_density_ratio(n, r_star - 0.01) < 0.0);
    CHECK(coinflip_log_density_ratio(n, std::min(1.0, r_star + 0.01)) > 0.0);
    CHECK(std::isinf(coinflip_log_density_ratio(n, 1.5)));
    CHECK(std::isinf(coinflip_log_density_ratio(n, 0.0)));
  }
}

TEST_CASE("coin-flip scale pair marginals") {
  const long long n = 8;
  RngState rng(51, 0);
  const std::size_t draws = 200000;
  std::vector<double> r1(draws), r2(draws);
  double r_star = coinflip_threshold(n);
  for (std::size_t i = 0; i < draws; ++i) {
    CoinFlipScales s = coinflip_scale_pair(rng, n);
    r1[i] = s.r1;
    r2[i] = s.r2;
    if (s.branch == BranchTag::diagonal) {
      CHECK(s.r1 == s.r2);
    } else {
      // off-diagonal: g(r1) > 1 >= g(r2)
      CHECK(s.r1 > r_star);
      CHECK(s.r1 <= 1.0);
      CHECK((s.r2 < r_star || s.r2 > 1.0));
    }
  }
  Stats m1 = stats(r1);
  CHECK(std::fabs(m1.mean - 8.0 / 9.0) < 4.0 * m1.se_mean);
  Stats m2 = stats(r2);
  CHECK(std::fabs(m2.mean - 1.0) < 4.0 * m2.se_mean);
  CHECK(std::fabs(m2.var - 0.125) < 0.01);
  CHECK_THROWS_AS(coinflip_scale_pair(rng, 0), std::invalid_argument);
}

TEST_CASE("sampled brownian path") {
  RngState rng(52, 0);
  const std::size_t draws = 100000;
  std::vector<double> end(draws);
  std::vector<double> times{0.0, 0.25, 0.5, 0.75, 1.0};
  for (auto& x : end) {
    RngState sub = rng.spawn(rng.next_u64());
    x = sample_brownian(sub, 2.0, times, 1.0).eval(1.0);
  }
  Stats m = stats(end);
  CHECK(std::fabs(m.mean) < 4.0 * m.se_mean);
  CHECK(std::fabs(m.var - 2.0) < 0.05);
  CHECK_THROWS_AS(sample_brownian(rng, 1.0, {0.5, 1.0}, 1.0), std::invalid_argument);
}

TEST_CASE("brownian bridge fill") {
  RngState rng(53, 0);
  const double sigma2 = 0.7, span = 0.8, v = 0.3;
  const std::size_t draws = 200000;
  std::vector<double> mid(draws);
  for (auto& x : mid) x = brownian_fill({0.0, v}, {0.0, span}, sigma2, {span / 2.0}, rng).eval(span / 2.0);
  Stats m = stats(mid);
  CHECK(std::fabs(m.mean - v / 2.0) < 4.0 * m.se_mean);
  CHECK(std::fabs(m.var - sigma2 * span / 4.0) < 0.005);

  // equal endpoint values: midpoint mean is the common value
  std::vector<double> flat(draws);
  for (auto& x : flat) x = brownian_fill({0.0, 0.0}, {0.0, span}, sigma2, {span / 2.0}, rng).eval(span / 2.0);
  m = stats(flat);
  CHECK(std::fabs(m.mean) < 4.0 * m.se_mean);

  // zero-noise limit reproduces linear interpolation
  PiecewisePath lin = brownian_fill({0.0, 1.0}, {0.0, 1.0}, 0.0, {0.25, 0.5, 0.75}, rng);
  CHECK(lin.eval(0.5) == doctest::Approx(0.5).epsilon(1e-14));

  // bridge marginals at the grid constraints are preserved exactly
  PiecewisePath pinned = brownian_fill({0.0, 0.4, -0.2}, {0.0, 1.0, 2.0}, 1.0, {0.3, 1.7}, rng);
  CHECK(pinned.eval(1.0) == 0.4);
  CHECK(pinned.eval(2.0) == -0.2);

  CHECK_THROWS_AS(brownian_fill({0.0, 1.0}, {0.0, 1.0}, 1.0, {1.5}, rng), std::invalid_argument);
  CHECK_THROWS_AS(brownian_fill({0.1, 1.0}, {0.0, 1.0}, 1.0, {0.5}, rng), std::invalid_argument);
}

TEST_CASE("independent pair matches the closed-form cost") {
  ScalingParams params = ScalingParams::from_dimensionless(1.0, 1.0);
  EstimateWithCI est = empirical_w2_upper(
      [&params](RngState& rng) { return pair_cost(independent_pair(rng, params)); }, 54, 0, 5000);
  CHECK(std::fabs(est.point - 0.8462660215268286) < 2.0 * est.half_width_95);

  // disjoint streams: the two paths decorrelate at the horizon
  RngState rng(54, 1 << 20);
  const std::size_t draws = 50000;
  std::vector<double> cross(draws);
  for (std::size_t i = 0; i < draws; ++i) {
    RngState sub(54, (1 << 20) + i);
    CoupledPathPair pair = independent_pair(sub, params);
    cross[i] = pair.left.eval(params.T) * pair.right.eval(params.T);
  }
  Stats m = stats(cross);
  CHECK(std::fabs(m.mean) < 4.0 * m.se_mean);
}

TEST_CASE("coin-flip pair") {
  ScalingParams params = ScalingParams::from_dimensionless(2.0, 2.0);
  const std::size_t draws = 50000;
  std::vector<double> leftT(draws);
  for (std::size_t i = 0; i < draws; ++i) {
    RngState rng(56, i);
    CoupledPathPair pair = coinflip_pair(rng, params);
    leftT[i] = pair.left.eval(params.T);
    if (pair.branch_tag == BranchTag::diagonal && i % 500 == 0)
      CHECK(pair_cost(pair) == 0.0);  // identical paths on the diagonal
  }
  Stats m = stats(leftT);
  double target = telegraph_variance_exact(params.T, params) / (params.L * params.L);
  CHECK(std::fabs(m.var - target) < 0.02);
}

TEST_CASE("synchronous pair identities") {
  ScalingParams params = ScalingParams::from_dimensionless(6.0, 3.0);
  RngState rng(57, 0);
  double worst = 0.0;
  for (int rep = 0; rep < 300; ++rep) {
    CoupledPathPair pair = synchronous_pair(rng, params, SynchronousKind::flip_vs_rescaled_walk);
    for (std::size_t k = 1; k < pair.right.breakpoints().size(); ++k) {
      double t = pair.right.breakpoints()[k];
      worst = std::max(worst, std::fabs(pair.left.eval(t) - pair.right.eval(t)));
    }
  }
  CHECK(worst < 1e-12);

  // mean cost decreases along the diffusive scaling (fixed zeta)
  auto mean_cost = [](double t_star) {
    ScalingParams p = ScalingParams::from_dimensionless(t_star, std::sqrt(t_star));
    double acc = 0.0;
    const int reps = 2000;
    for (int i = 0; i < reps; ++i) {
      RngState r(58, static_cast<std::uint64_t>(i));
      acc += pair_cost(synchronous_pair(r, p, SynchronousKind::flip_vs_even_walk));
    }
    return acc / reps;
  };
  CHECK(mean_cost(64.0) < mean_cost(4.0));
}

TEST_CASE("laplace walk tables") {
  const LaplaceWalkTables& tables = shared_laplace_walk_tables();
  CHECK(tables.marginal_cdf(0, 0.0) == doctest::Approx(0.5).epsilon(1e-6));
  // level-0 CDF reproduces the analytic Laplace CDF
  for (double x : {-3.0, -0.5, 0.7, 2.5})
    CHECK(tables.marginal_cdf(0, x) == doctest::Approx(laplace_cdf(x)).epsilon(1e-5));
  // symmetry of the conditional: Q(u|s) + Q(1-u|s) = s
  for (double s : {-2.0, 0.0, 3.0}) {
    for (double u : {0.1, 0.25, 0.5}) {
      double a = tables.conditional_quantile(4, s, u);
      double b = tables.conditional_quantile(4, s, 1.0 - u);
      CHECK(a + b == doctest::Approx(s).epsilon(1e-6));
    }
  }
  // marginal quantile inverts the marginal CDF
  for (double u : {0.05, 0.3, 0.9})
    CHECK(tables.marginal_cdf(5, tables.marginal_quantile(5, u)) == doctest::Approx(u).epsilon(1e-6));
  // an under-resolved grid range loses mass and must be rejected
  CHECK_THROWS_AS(LaplaceWalkTables(3, 1.0), numeric_resolution_error);
}

TEST_CASE("coupled gaussian increments") {
  // quantile mode couples each increment comonotonically
  RngState rng(59, 0);
  std::vector<double> lap(2000);
  for (auto& v : lap) v = laplace_quantile(rng.uniform01());
  std::vector<double> gauss = coupled_gaussian_increments(lap, KmtMode::quantile, shared_laplace_walk_tables());
  for (std::size_t i = 1; i < lap.size(); ++i) {
    double prod = (lap[i] - lap[i - 1]) * (gauss[i] - gauss[i - 1]);
    CHECK(prod >= 0.0);
  }
  Stats m = stats(gauss);
  CHECK(std::fabs(m.mean) < 4.0 * m.se_mean);
  CHECK(std::fabs(m.var - 2.0) < 0.15);

  // dyadic mode preserves the Gaussian law of the coupled walk
  std::vector<double> all;
  all.reserve(64000);
  for (int rep = 0; rep < 500; ++rep) {
    std::vector<double> block(128);
    for (auto& v : block) v = laplace_quantile(rng.uniform01());
    std::vector<double> g = coupled_gaussian_increments(block, KmtMode::dyadic, shared_laplace_walk_tables());
    all.insert(all.end(), g.begin(), g.end());
  }
  m = stats(all);
  CHECK(std::fabs(m.mean) < 4.0 * m.se_mean);
  CHECK(std::fabs(m.var - 2.0) < 0.05);
}

TEST_CASE("gap statistic separates the modes") {
  std::vector<double> gq(101), gd(101);
  for (std::size_t i = 0; i < gq.size(); ++i) {
    RngState r1(60, 2 * i);
    RngState r2(60, 2 * i + 1);
    gq[i] = kmt_gap_statistic(r1, 1024, KmtMode::quantile);
    gd[i] = kmt_gap_statistic(r2, 1024, KmtMode::dyadic);
  }
  std::sort(gq.begin(), gq.end());
  std::sort(gd.begin(), gd.end());
  CHECK(gd[50] < gq[50]);
}

TEST_CASE("kmt pair skeleton") {
  ScalingParams params = ScalingParams::from_dimensionless(32.0, std::sqrt(32.0));
  RngState rng(61, 0);
  for (int rep = 0; rep < 20; ++rep) {
    RngState sub(61, static_cast<std::uint64_t>(rep) + 1000);
    CoupledPathPair pair = kmt_pair(sub, params, KmtMode::dyadic);
    long long ntilde = static_cast<long long>(pair.left.segment_count()) - 1;
    if (ntilde == 0) continue;
    // the Brownian path carries a skeleton point at every grid time l T/ntilde
    const auto& bp = pair.right.breakpoints();
    for (long long l = 1; l <= ntilde; ++l) {
      double t = params.T * static_cast<double>(l) / static_cast<double>(ntilde);
      bool found = std::binary_search(bp.begin(), bp.end(), t);
      if (!found) {
        auto it = std::lower_bound(bp.begin(), bp.end(), t - 1e-12);
        found = it != bp.end() && std::fabs(*it - t) < 1e-9;
      }
      CHECK(found);
    }
  }
  (void)rng;
}

TEST_CASE("chain pair") {
  ScalingParams params = ScalingParams::from_dimensionless(16.0, 4.0);
  // left marginal keeps the flip-path law
  const std::size_t draws = 30000;
  std::vector<double> leftT(draws);
  for (std::size_t i = 0; i < draws; ++i) {
    RngState rng(62, i);
    leftT[i] = chain_pair(rng, params).left.eval(params.T);
  }
  Stats m = stats(leftT);
  double target = telegraph_variance_exact(params.T, params) / (params.L * params.L);
  CHECK(std::fabs(m.var - target) < 0.05);

  // the constructed coupling beats the independent one
  auto mean_cost = [&params](CoupledPathPair (*sampler)(RngState&, const ScalingParams&, KmtMode),
                             bool chain) {
    double acc = 0.0;
    const int reps = 500;
    for (int i = 0; i < reps; ++i) {
      RngState rng(63, static_cast<std::uint64_t>(i) + (chain ? 0 : 1000000));
      acc += pair_cost(chain ? sampler(rng, params, KmtMode::dyadic) : independent_pair(rng, params));
    }
    return acc / reps;
  };
  CHECK(mean_cost(&chain_pair, true) < 0.5 * mean_cost(&chain_pair, false));
}

TEST_CASE("pair serialization") {
  ScalingParams params = ScalingParams::from_dimensionless(2.0, 2.0);
  RngState rng(64, 0);
  CoupledPathPair pair = coinflip_pair(rng, params);
  std::string text = pair.to_json();
  CHECK(text.find("coinflip") != std::string::npos);
  CHECK(text.find("breakpoints") != std::string::npos);
}

TEST_SUITE_END();
