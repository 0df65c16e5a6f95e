#pragma once

#include <cstdint>

#include "platoon/graph.hpp"
#include "platoon/statistics.hpp"

namespace platoon {

struct SimConfig {
  double dt = 0;        // step [s]; tau/dt must be an integer and dt <= tau/10
  double burn_in = 0;   // [s]
  double horizon = 0;   // [s], > burn_in; terminal snapshot is taken here
  std::int64_t replicates = 1;
  std::uint64_t seed = 0;
  double g = 0;         // scalar diffusion; >= 0 (0 gives the deterministic system)
  Eigen::MatrixXd E;    // optional full diffusion matrix (n x n); overrides g

  bool has_matrix_diffusion() const { return E.size() > 0; }
};

// dt = tau/20, burn_in = max(50 tau, 20/(beta lambda_2)), a margin on top for
// the horizon, diffusion from the params. Heuristic only; callers override.
SimConfig default_sim_config(const SpectralData& spec, const PlatoonParams& p);

void validate_sim_config(const SimConfig& cfg, double tau, int n);

struct SnapshotEnsemble {
  Eigen::MatrixXd samples;  // replicates x (n-1); terminal gap vectors
};

// Euler-Maruyama integration of the delayed platoon dynamics with a ring
// buffer of exactly tau/dt past states; history on [-tau, 0] is pinned at the
// formation fixed point (positions at target, velocities zero). One terminal
// gap vector per independent replicate.
SnapshotEnsemble simulate_platoon(const Graph& g, const PlatoonParams& p,
                                  const SimConfig& cfg);

struct CovarianceEstimate {
  Eigen::MatrixXd sigma;  // unbiased sample covariance
  Eigen::MatrixXd se;     // per-entry jackknife standard error
};
CovarianceEstimate empirical_covariance(const SnapshotEnsemble& ens);

struct ConditionalEstimate {
  double estimate = 0;
  double se = 0;           // delta-method standard error of the ratio estimator
  double acceptance = 0;   // fraction of replicates with gap_i < d_star
};
// Requires at least 100 accepted samples. Pair labels are 1-based.
ConditionalEstimate empirical_conditional_expectation(const SnapshotEnsemble& ens,
                                                      int i, int j, double d_star);

struct OracleEstimate {
  double estimate = 0;
  double se = 0;
};
// Direct sampling oracle for the truncated bivariate normal, bypassing the
// SDE: correlated pairs via the two-factor construction, rejection on
// gap_i >= d_star. When the conditioning mass is below 1e-4 the rejection
// step switches to an exact tail sampler so deep thresholds stay reachable.
OracleEstimate truncated_bivariate_oracle(double d, double sigma_i, double sigma_j,
                                          double rho, double d_star,
                                          std::int64_t n_samples, std::uint64_t seed);

}  // namespace platoon
