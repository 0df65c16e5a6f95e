#pragma once

#include "platoon/graph.hpp"

namespace platoon {

struct StabilityQuery {
  double s1 = 0;  // lambda * tau
  double s2 = 0;  // beta * tau
};

// Unique a in (0, pi/2) with a*sin(a) == s1; residual <= 1e-12.
double solve_a(double s1);

// Upper s2 boundary of the stability region: a/tan(a) at a = solve_a(s1).
double s2_limit(double s1);

// Open-region membership; boundary points classify as unstable.
bool in_stability_region(const StabilityQuery& q);

// True iff every non-consensus mode (k >= 2) lies in the region. The zero
// eigenvalue is the translation-invariant consensus direction and is skipped.
bool platoon_stable(const SpectralData& spec, double tau, double beta);

}  // namespace platoon
