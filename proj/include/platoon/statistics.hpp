#pragma once

#include "platoon/graph.hpp"

namespace platoon {

struct PlatoonParams {
  double tau = 0;   // feedback delay [s]
  double beta = 0;  // position gain [1/s]
  double d = 0;     // target inter-vehicle gap [m]
  double g = 0;     // diffusion coefficient [m s^-3/2]
};

// All fields strictly positive and (spec, tau, beta) stable.
void validate_params(const SpectralData& spec, const PlatoonParams& p);

struct DistanceStatistics {
  Eigen::MatrixXd sigma;  // (n-1)x(n-1) steady-state gap covariance [m^2]
  Eigen::VectorXd mean;   // d * ones [m]
  Eigen::MatrixXd rho;    // correlations, unit diagonal
};

// integral over R of dr / [(s1*s2 - r^2 cos r)^2 + r^2 (s1 - r sin r)^2],
// computed as 2x the half-line value; relative error <= tol.
double f_integral(double s1, double s2, double tol = 1e-10);

// Per-mode stationary variances for k = 2..n (size n-1):
// sigma_z_k^2 = g^2 tau^3 / (2 pi) * f(lambda_k tau, beta tau).
Eigen::VectorXd modal_variances(const SpectralData& spec, const PlatoonParams& p,
                                double tol = 1e-10);

DistanceStatistics distance_covariance(const SpectralData& spec, const PlatoonParams& p,
                                       double tol = 1e-10);

}  // namespace platoon
