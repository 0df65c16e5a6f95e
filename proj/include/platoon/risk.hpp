#pragma once

#include <vector>

#include "platoon/statistics.hpp"

namespace platoon {

struct SystemicLevelSet {
  double delta = 0;  // severity, >= 0
  double c = 1;      // offset, > 0
};

// d / (delta + c): the gap level below which pair i is in soft failure.
double systemic_threshold(double d, double delta, double c);

struct AmbiguitySet {
  enum class Kind { scalar, matrix };
  Kind kind = Kind::scalar;
  double eps = 0;          // radius, in [0, 1); 0 is the singleton set
  double g0 = 1;           // scalar variant: reference diffusion
  Eigen::MatrixXd gamma0;  // matrix variant: reference input covariance, SPD

  static AmbiguitySet scalar_set(double g0, double eps);
  static AmbiguitySet matrix_set(const Eigen::MatrixXd& gamma0, double eps);
};

// E[gap_j | gap_i < d_star] for jointly normal gaps with mean d:
//   d - sqrt(2/pi) rho sigma_j exp(-(d*-d)^2/(2 sigma_i^2)) / (1 + erf((d*-d)/(sqrt(2) sigma_i)))
double conditional_expectation(double d, double sigma_i, double sigma_j,
                               double rho_ji, double d_star);

// Same expectation with both sigmas scaled by sqrt(1+eps); written as its own
// expression rather than delegating, so the identity with
// conditional_expectation acts as an implementation cross-check.
double h_eps(double eps, double d, double sigma_i0, double sigma_j0,
             double rho_ji, double d_star);

struct RiskEntry {
  int j = 0;
  double rho_ji = 0;
  double worst_case_expectation = 0;  // h at the adversarial eps sign
  double risk = 0;                    // d / worst_case_expectation - 1
  bool degenerate = false;            // worst case <= 0: risk reported as +inf
};

struct RiskResult {
  int i = 0;
  std::vector<RiskEntry> entries;  // ascending j, excluding i
};

RiskEntry dr_cascading_risk(const DistanceStatistics& stats, int i, int j,
                            const SystemicLevelSet& level, const AmbiguitySet& amb);
RiskResult risk_profile(const DistanceStatistics& stats, int i,
                        const SystemicLevelSet& level, const AmbiguitySet& amb);

// True iff (1+eps)sigma0 - sigma and sigma - (1-eps)sigma0 both have minimum
// eigenvalue >= -tol.
bool loewner_within(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& sigma0,
                    double eps, double tol = 1e-9);

// Spectral lower bound on the cascading risk, implemented exactly as printed:
//   d / f - 1,  f = sqrt(mu_max (1+eps)) / sqrt(0.5 (1 + erf((d*-d)/(2 sqrt(mu_min (1-eps))))))
// with mu_min/mu_max the extreme eigenvalues of sigma0. See README for the
// known limitation of this bound.
double risk_lower_bound(const Eigen::MatrixXd& sigma0, double eps, double d,
                        double d_star);

namespace detail {

// exp(x^2) erfc(x) for x >= 5 via the Laplace continued fraction.
double erfcx_large(double x);

// exp(-a^2/2) / (1 + erf(a/sqrt(2))), evaluated as exp(-a^2/2)/erfc(-a/sqrt(2))
// and switched to 1/erfcx(-a/sqrt(2)) for a < -8 where the direct form loses
// all precision to cancellation.
double tail_ratio(double alpha);

}  // namespace detail

}  // namespace platoon
