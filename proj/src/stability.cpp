#include "platoon/stability.hpp"

#include <cmath>

#include "platoon/errors.hpp"

namespace platoon {

namespace {
constexpr double kHalfPi = 1.57079632679489661923;
}

double solve_a(double s1) {
  if (!(s1 > 0.0) || !(s1 < kHalfPi))
    fail(errc::out_of_domain, "a*sin(a) = s1 is solvable in (0, pi/2) only for s1 in (0, pi/2)");

  auto residual = [s1](double a) { return a * std::sin(a) - s1; };

  // a*sin(a) is strictly increasing on (0, pi/2): bracket, then polish.
  double lo = 0.0, hi = kHalfPi;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    (residual(mid) < 0.0 ? lo : hi) = mid;
  }
  double a = 0.5 * (lo + hi);
  for (int it = 0; it < 4; ++it) {
    const double slope = std::sin(a) + a * std::cos(a);
    const double next = a - residual(a) / slope;
    if (next > lo && next < hi) a = next;
  }
  return a;
}

double s2_limit(double s1) {
  const double a = solve_a(s1);
  return a / std::tan(a);
}

bool in_stability_region(const StabilityQuery& q) {
  if (!(q.s1 > 0.0) || !(q.s1 < kHalfPi)) return false;
  if (!(q.s2 > 0.0)) return false;
  return q.s2 < s2_limit(q.s1);
}

bool platoon_stable(const SpectralData& spec, double tau, double beta) {
  if (!(tau > 0.0) || !(beta > 0.0))
    fail(errc::invalid_parameter, "tau and beta must be positive");
  const int n = static_cast<int>(spec.eigenvalues.size());
  // k = 1 (eigenvalue 0) is the translation-invariant consensus mode: skipped.
  for (int k = 1; k < n; ++k)
    if (!in_stability_region({spec.eigenvalues(k) * tau, beta * tau})) return false;
  return true;
}

}  // namespace platoon
