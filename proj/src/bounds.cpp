#include "telecoupler/bounds.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

#include "telecoupler/errors.hpp"
#include "telecoupler/telegraph.hpp"

namespace telecoupler {

namespace {
void check_scales(double T_star, double L_star) {
  if (!(T_star > 0.0) || !(L_star > 0.0))
    throw std::invalid_argument("bounds: T* and L* must be > 0");
}
}  // namespace

double main_bound_rhs(double T_star, double L_star, double C) {
  check_scales(T_star, L_star);
  if (!(C > 0.0)) throw std::invalid_argument("main_bound_rhs: C must be > 0");
  double root = std::sqrt(T_star / (L_star * L_star));
  return C * root * std::pow(T_star, -0.25) * (std::sqrt(std::log(T_star + 3.0)) + std::pow(T_star, -0.75)) +
         C / L_star;
}

CrudeExact crude_and_exact_independent(double T_star, double L_star) {
  check_scales(T_star, L_star);
  double L2 = L_star * L_star;
  double inside = (1.0 - std::exp(-2.0 * T_star)) / (4.0 * T_star * L2) - 1.0 / (2.0 * L2) + T_star / L2;
  if (inside < 0.0) {
    if (inside < -1e-14)
      throw numeric_resolution_error("crude_and_exact_independent: negative value under sqrt");
    inside = 0.0;
  }
  double v = std::sqrt(inside);
  return CrudeExact{v, v};
}

ComponentBounds component_bounds(double T_star, double L_star, double k1, double k2, double k3) {
  check_scales(T_star, L_star);
  if (!(k1 > 0.0) || !(k2 > 0.0) || !(k3 > 0.0))
    throw std::invalid_argument("component_bounds: constants must be > 0");
  double root = std::sqrt(T_star / (L_star * L_star)) * std::pow(T_star, -0.25);
  ComponentBounds out;
  out.coinflip = k1 * root * std::sqrt(std::log(T_star + 3.0)) + k1 / L_star;
  out.synchronous = k2 * root * (1.0 + std::pow(T_star, -0.75));
  out.kmt = k3 * root * (1.0 + std::pow(T_star, -0.75));
  return out;
}

double moment_gap_bound(double p, double T_star, double L_star, std::optional<double> C_prime,
                        double w2_value) {
  if (!(p > 0.0)) throw std::invalid_argument("moment_gap_bound: p must be > 0");
  check_scales(T_star, L_star);
  if (!(w2_value >= 0.0)) throw std::invalid_argument("moment_gap_bound: w2_value must be >= 0");
  double c1sq, c2sq;
  if (p == 1.0) {
    if (C_prime.has_value())
      std::clog << "moment_gap_bound: C' ignored for p = 1\n";
    c1sq = c2sq = 1.0;
  } else {
    double cp = C_prime.value_or(1.0);
    double scale = std::pow(T_star, p - 1.0) / std::pow(L_star, 2.0 * (p - 1.0));
    // Ctilde at r = 2(p-1) equals 2^{p-1} Gamma((2p-1)/2)/sqrt(pi).
    double ctilde = std::pow(2.0, p - 1.0) * std::tgamma((2.0 * p - 1.0) / 2.0) / std::sqrt(M_PI);
    c2sq = ctilde / p * scale;
    c1sq = c2sq + cp * std::pow(T_star, p - 2.0) / ((p - 1.0) * std::pow(L_star, 2.0 * (p - 1.0)));
  }
  double out = 2.0 * p * std::sqrt(std::max(c1sq, c2sq)) * w2_value;
  if (!std::isfinite(out))
    throw std::invalid_argument("moment_gap_bound: formula undefined at this p");
  return out;
}

BoundReport evaluate_bounds(double T_star, double L_star, double C, double k1, double k2, double k3) {
  BoundReport r;
  r.T_star = T_star;
  r.L_star = L_star;
  r.main_rhs = main_bound_rhs(T_star, L_star, C);
  r.crude_rhs = crude_and_exact_independent(T_star, L_star).crude;
  ComponentBounds comp = component_bounds(T_star, L_star, k1, k2, k3);
  r.coinflip_rhs = comp.coinflip;
  r.synchronous_rhs = comp.synchronous;
  r.kmt_rhs = comp.kmt;
  r.constants_used = {{"C", C}, {"k1", k1}, {"k2", k2}, {"k3", k3}};
  return r;
}

}  // namespace telecoupler
