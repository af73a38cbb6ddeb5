#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <vector>

#include "telecoupler/bounds.hpp"
#include "telecoupler/random.hpp"

using namespace telecoupler;

TEST_SUITE_BEGIN("bounds");

TEST_CASE("main bound values") {
  // C=1, T*=16, L*=4: 0.5 (sqrt(ln 19) + 1/8) + 1/4
  CHECK(main_bound_rhs(16.0, 4.0, 1.0) == doctest::Approx(1.170468382163125).epsilon(1e-12));
  // decay along the diffusive scaling zeta = 1
  CHECK(main_bound_rhs(256.0, 16.0, 1.0) < main_bound_rhs(16.0, 4.0, 1.0));
  CHECK(main_bound_rhs(1e10, 1e5, 1.0) < 0.02);
  // linear in C
  CHECK(main_bound_rhs(16.0, 4.0, 3.0) == doctest::Approx(3.0 * main_bound_rhs(16.0, 4.0, 1.0)).epsilon(1e-13));
  CHECK_THROWS_AS(main_bound_rhs(0.0, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(main_bound_rhs(1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("independent coupling closed form") {
  CrudeExact ce = crude_and_exact_independent(1.0, 1.0);
  CHECK(ce.crude == doctest::Approx(0.8462660215268286).epsilon(1e-12));
  CHECK(ce.exact == ce.crude);
  // the zeta = 1 diffusive limit tends to 1
  CHECK(crude_and_exact_independent(1e6, 1e3).crude == doctest::Approx(1.0).epsilon(1e-5));
  // both processes start at zero, so the value vanishes as T* -> 0
  CHECK(crude_and_exact_independent(1e-8, 1.0).crude < 1e-3);
}

TEST_CASE("component bounds") {
  ComponentBounds cb = component_bounds(1.0, 1.0, 1.0, 1.0, 1.0);
  CHECK(cb.synchronous == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(cb.kmt == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(cb.coinflip == doctest::Approx(std::sqrt(std::log(4.0)) + 1.0).epsilon(1e-13));
  // all components vanish along the diffusive scaling
  ComponentBounds far = component_bounds(1e10, 1e5, 1.0, 1.0, 1.0);
  CHECK(far.coinflip < 0.02);
  CHECK(far.synchronous < 0.01);
  CHECK(far.kmt < 0.01);
}

TEST_CASE("component sum tracks the main bound shape") {
  std::vector<double> lx, ly_sum, ly_main;
  for (double t_star = 16.0; t_star <= 4096.0; t_star *= 2.0) {
    double l_star = std::sqrt(t_star);
    ComponentBounds cb = component_bounds(t_star, l_star, 1.0, 1.0, 1.0);
    double sum = cb.coinflip + cb.synchronous + cb.kmt;
    CHECK(sum >= cb.coinflip);
    CHECK(sum >= cb.synchronous);
    CHECK(sum >= cb.kmt);
    lx.push_back(std::log(t_star));
    ly_sum.push_back(std::log(sum));
    ly_main.push_back(std::log(main_bound_rhs(t_star, l_star, 1.0)));
  }
  auto slope = [&](const std::vector<double>& y) {
    double n = static_cast<double>(lx.size()), mx = 0.0, my = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      mx += lx[i];
      my += y[i];
    }
    mx /= n;
    my /= n;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      sxx += (lx[i] - mx) * (lx[i] - mx);
      sxy += (lx[i] - mx) * (y[i] - my);
    }
    return sxy / sxx;
  };
  double s_sum = slope(ly_sum), s_main = slope(ly_main);
  CHECK(s_sum > -0.35);
  CHECK(s_sum < -0.15);
  CHECK(std::fabs(s_sum - s_main) < 0.05);
}

TEST_CASE("moment gap bound") {
  // p = 1: exactly twice the supplied transport value
  CHECK(moment_gap_bound(1.0, 7.0, 3.0, std::nullopt, 0.25) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(moment_gap_bound(1.0, 7.0, 3.0, 2.0, 0.3) == doctest::Approx(0.6).epsilon(1e-15));
  // p = 2 at T* = L*^2 = 1 with C' = 0: C1^2 = C2^2 = 1/2, bound 4 sqrt(1/2) w2
  CHECK(moment_gap_bound(2.0, 1.0, 1.0, 0.0, 1.0) == doctest::Approx(2.8284271247461903).epsilon(1e-12));
  // monotone in the transport value
  CHECK(moment_gap_bound(3.0, 4.0, 2.0, 1.0, 2.0) ==
        doctest::Approx(2.0 * moment_gap_bound(3.0, 4.0, 2.0, 1.0, 1.0)).epsilon(1e-13));
  CHECK_THROWS_AS(moment_gap_bound(0.0, 1.0, 1.0, std::nullopt, 1.0), std::invalid_argument);
}

TEST_CASE("w-lipschitz inequality with K = 2p") {
  RngState rng(41, 0);
  for (double p : {0.5, 1.0, 2.0, 3.0}) {
    long long violations = 0;
    for (int i = 0; i < 10000; ++i) {
      double x = 3.0 * rng.normal01();
      double y = 3.0 * rng.normal01();
      double lhs = std::fabs(std::pow(std::fabs(x), p) - std::pow(std::fabs(y), p));
      double rhs = p * (std::pow(std::fabs(x), p - 1.0) + std::pow(std::fabs(y), p - 1.0)) *
                   std::fabs(x - y);
      if (lhs > rhs + 1e-12 * std::max(1.0, rhs)) ++violations;
    }
    CHECK(violations == 0);
  }
}

TEST_CASE("bound report") {
  BoundReport r = evaluate_bounds(16.0, 4.0, 1.0, 1.0, 1.0, 1.0);
  CHECK(r.main_rhs > 0.0);
  CHECK(r.crude_rhs > 0.0);
  CHECK(r.coinflip_rhs > 0.0);
  CHECK(r.synchronous_rhs == r.kmt_rhs);
  CHECK(r.constants_used.at("C") == 1.0);
}

TEST_SUITE_END();
