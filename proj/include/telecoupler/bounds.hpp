#pragma once

#include <map>
#include <optional>
#include <string>

namespace telecoupler {

/// Evaluated analytic bounds for one (T*, L*) point, with the constants the
/// caller supplied. All functional forms are exact; the multiplicative
/// constants are free parameters with default 1.
struct BoundReport {
  double T_star = 0.0;
  double L_star = 0.0;
  double main_rhs = 0.0;
  double crude_rhs = 0.0;
  double coinflip_rhs = 0.0;
  double synchronous_rhs = 0.0;
  double kmt_rhs = 0.0;
  std::map<std::string, double> constants_used;
};

/// C sqrt(T*/L*^2) T*^{-1/4} (sqrt(ln(T*+3)) + T*^{-3/4}) + C/L*.
double main_bound_rhs(double T_star, double L_star, double C);

/// Independent-coupling value: sqrt((1-e^{-2T*})/(4 T* L*^2) - 1/(2L*^2) + T*/L*^2).
/// The crude bound and the exact independent-coupling cost coincide.
struct CrudeExact {
  double crude = 0.0;
  double exact = 0.0;
};
CrudeExact crude_and_exact_independent(double T_star, double L_star);

/// Per-coupling component bounds with constants (kappa1, kappa2, kappa3):
///   coinflip:    k1 sqrt(T*/L*^2) T*^{-1/4} sqrt(ln(T*+3)) + k1/L*
///   synchronous: k2 sqrt(T*/L*^2) T*^{-1/4} (1 + T*^{-3/4})
///   kmt:         k3 sqrt(T*/L*^2) T*^{-1/4} (1 + T*^{-3/4})
struct ComponentBounds {
  double coinflip = 0.0;
  double synchronous = 0.0;
  double kmt = 0.0;
};
ComponentBounds component_bounds(double T_star, double L_star, double k1, double k2, double k3);

/// Bound on the gap of time-averaged p-th moments: 2p max{C1, C2} w2_value,
/// where for p != 1
///   C1^2 = Ctilde T*^{p-1}/(p L*^{2(p-1)}) + C' T*^{p-2}/((p-1) L*^{2(p-1)})
///   C2^2 = 2^{p-1} Gamma((2p-1)/2)/(p sqrt(pi)) T*^{p-1}/L*^{2(p-1)}
/// and C1 = C2 = 1 for p = 1 (then a supplied C' is ignored with a warning).
double moment_gap_bound(double p, double T_star, double L_star, std::optional<double> C_prime,
                        double w2_value);

/// Full report row for one scaling point.
BoundReport evaluate_bounds(double T_star, double L_star, double C, double k1, double k2, double k3);

}  // namespace telecoupler
