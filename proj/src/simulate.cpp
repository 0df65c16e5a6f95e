#include "platoon/simulate.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "platoon/errors.hpp"
#include "platoon/rng.hpp"
#include "platoon/stability.hpp"

namespace platoon {

namespace {
constexpr double kSqrt2 = 1.41421356237309504880;
}

SimConfig default_sim_config(const SpectralData& spec, const PlatoonParams& p) {
  validate_params(spec, p);
  const double lam2 = spec.eigenvalues(1);
  SimConfig cfg;
  cfg.dt = p.tau / 20.0;
  cfg.burn_in = std::max(50.0 * p.tau, 20.0 / (p.beta * lam2));
  cfg.horizon = cfg.burn_in + std::max(25.0 * p.tau, 10.0 / (p.beta * lam2));
  cfg.replicates = 10000;
  cfg.seed = 1;
  cfg.g = p.g;
  return cfg;
}

void validate_sim_config(const SimConfig& cfg, double tau, int n) {
  if (!(tau > 0)) fail(errc::invalid_parameter, "delay must be positive");
  if (!(cfg.dt > 0)) fail(errc::invalid_parameter, "step must be positive");
  if (cfg.dt > tau / 10.0 * (1.0 + 1e-12))
    fail(errc::invalid_parameter, "step must not exceed tau/10");
  const double steps = tau / cfg.dt;
  if (std::abs(steps - std::round(steps)) > 1e-9 * steps)
    fail(errc::invalid_parameter, "tau/dt must be an integer number of steps");
  if (!(cfg.burn_in >= 0)) fail(errc::invalid_parameter, "burn-in must be nonnegative");
  if (!(cfg.horizon > cfg.burn_in))
    fail(errc::invalid_parameter, "horizon must exceed the burn-in");
  if (cfg.replicates < 1) fail(errc::invalid_parameter, "need at least one replicate");
  if (cfg.has_matrix_diffusion()) {
    if (cfg.E.rows() != n || cfg.E.cols() != n)
      fail(errc::invalid_parameter, "diffusion matrix must be n x n");
    if (!cfg.E.allFinite()) fail(errc::invalid_parameter, "diffusion matrix must be finite");
  } else if (!(cfg.g >= 0) || !std::isfinite(cfg.g)) {
    fail(errc::invalid_parameter, "diffusion must be finite and nonnegative");
  }
}

SnapshotEnsemble simulate_platoon(const Graph& graph, const PlatoonParams& p,
                                  const SimConfig& cfg) {
  if (!(p.tau > 0) || !(p.beta > 0) || !(p.d > 0))
    fail(errc::invalid_parameter, "tau, beta, d must all be positive");
  const SpectralData spec = spectral(graph);
  if (!platoon_stable(spec, p.tau, p.beta))
    fail(errc::unstable_parameters,
         "refusing to integrate an unstable configuration: trajectories diverge");
  validate_sim_config(cfg, p.tau, graph.n);

  const int n = graph.n;
  const int m = static_cast<int>(std::llround(p.tau / cfg.dt));  // delay steps
  const int slots = m + 1;
  const std::int64_t total_steps = std::llround(cfg.horizon / cfg.dt);
  const double dt = cfg.dt;
  const double sqrt_dt = std::sqrt(dt);
  const bool matrix_noise = cfg.has_matrix_diffusion();

  // row-major copies keep the inner loops contiguous
  std::vector<double> L(static_cast<size_t>(n) * n);
  {
    const Eigen::MatrixXd Lm = laplacian(graph);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) L[static_cast<size_t>(i) * n + j] = Lm(i, j);
  }
  std::vector<double> E;
  if (matrix_noise) {
    E.resize(static_cast<size_t>(n) * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) E[static_cast<size_t>(i) * n + j] = cfg.E(i, j);
  }

  std::vector<double> target(n);
  for (int i = 0; i < n; ++i) target[i] = p.d * i;

  SnapshotEnsemble ens;
  ens.samples.resize(cfg.replicates, n - 1);

  std::vector<double> xs(static_cast<size_t>(slots) * n);
  std::vector<double> vs(static_cast<size_t>(slots) * n);
  std::vector<double> drive(n), noise(n), normals(n);

  for (std::int64_t rep = 0; rep < cfg.replicates; ++rep) {
    Rng64 rng(cfg.seed, static_cast<std::uint64_t>(rep));

    // history on [-tau, 0] pinned at the formation fixed point
    for (int s = 0; s < slots; ++s)
      for (int i = 0; i < n; ++i) {
        xs[static_cast<size_t>(s) * n + i] = target[i];
        vs[static_cast<size_t>(s) * n + i] = 0.0;
      }

    for (std::int64_t t = 0; t < total_steps; ++t) {
      const double* xc = &xs[static_cast<size_t>(t % slots) * n];
      const double* vc = &vs[static_cast<size_t>(t % slots) * n];
      // time t - m lives in the slot about to be overwritten by t + 1
      const size_t next_slot = static_cast<size_t>((t + 1) % slots) * n;
      const double* xd = &xs[next_slot];
      const double* vd = &vs[next_slot];

      // one combined feedback product: L (v_delayed + beta (x_delayed - y))
      for (int j = 0; j < n; ++j) drive[j] = vd[j] + p.beta * (xd[j] - target[j]);
      for (int i = 0; i < n; ++i) {
        const double* row = &L[static_cast<size_t>(i) * n];
        double acc = 0.0;
        for (int j = 0; j < n; ++j) acc += row[j] * drive[j];
        noise[i] = acc;  // reuse as drift scratch until the noise fill below
      }

      for (int j = 0; j < n; ++j) normals[j] = rng.normal();
      double* xn = &xs[next_slot];
      double* vn = &vs[next_slot];
      if (matrix_noise) {
        for (int i = 0; i < n; ++i) {
          const double* row = &E[static_cast<size_t>(i) * n];
          double w = 0.0;
          for (int j = 0; j < n; ++j) w += row[j] * normals[j];
          const double v_new = vc[i] - noise[i] * dt + sqrt_dt * w;
          xn[i] = xc[i] + vc[i] * dt;
          vn[i] = v_new;
        }
      } else {
        for (int i = 0; i < n; ++i) {
          const double w = cfg.g * normals[i];
          const double v_new = vc[i] - noise[i] * dt + sqrt_dt * w;
          xn[i] = xc[i] + vc[i] * dt;
          vn[i] = v_new;
        }
      }
    }

    const double* xt = &xs[static_cast<size_t>(total_steps % slots) * n];
    for (int i = 0; i < n - 1; ++i) ens.samples(rep, i) = xt[i + 1] - xt[i];
  }
  return ens;
}

CovarianceEstimate empirical_covariance(const SnapshotEnsemble& ens) {
  const std::int64_t R = ens.samples.rows();
  if (R < 2) fail(errc::insufficient_samples, "covariance needs at least 2 replicates");
  const int m = static_cast<int>(ens.samples.cols());

  const Eigen::RowVectorXd mean = ens.samples.colwise().mean();
  const Eigen::MatrixXd centered = ens.samples.rowwise() - mean;

  CovarianceEstimate est;
  est.sigma = (centered.transpose() * centered) / static_cast<double>(R - 1);
  est.sigma = (0.5 * (est.sigma + est.sigma.transpose())).eval();
  est.se.resize(m, m);
  if (R == 2) {
    est.se.setConstant(std::numeric_limits<double>::infinity());
    return est;
  }

  // Jackknife variance of each covariance entry in closed form: deleting
  // replicate r shifts sigma_ab by an affine function of c_r = ca_r * cb_r,
  // which collapses the leave-one-out sum to R/((R-1)(R-2)^2) sum (c_r - cbar)^2.
  const double factor = static_cast<double>(R) /
                        (static_cast<double>(R - 1) * static_cast<double>(R - 2) *
                         static_cast<double>(R - 2));
  for (int a = 0; a < m; ++a) {
    for (int b = a; b < m; ++b) {
      const double cbar = est.sigma(a, b) * static_cast<double>(R - 1) / R;
      double s = 0.0;
      for (std::int64_t r = 0; r < R; ++r) {
        const double dev = centered(r, a) * centered(r, b) - cbar;
        s += dev * dev;
      }
      const double se = std::sqrt(std::max(factor * s, 0.0));
      est.se(a, b) = se;
      est.se(b, a) = se;
    }
  }
  return est;
}

ConditionalEstimate empirical_conditional_expectation(const SnapshotEnsemble& ens,
                                                      int i, int j, double d_star) {
  const std::int64_t R = ens.samples.rows();
  const int m = static_cast<int>(ens.samples.cols());
  if (i < 1 || i > m || j < 1 || j > m)
    fail(errc::invalid_parameter, "pair label out of range");
  if (std::isnan(d_star)) fail(errc::invalid_parameter, "threshold must not be NaN");

  std::int64_t accepted = 0;
  double sum = 0.0;
  for (std::int64_t r = 0; r < R; ++r)
    if (ens.samples(r, i - 1) < d_star) {
      sum += ens.samples(r, j - 1);
      ++accepted;
    }

  ConditionalEstimate est;
  est.acceptance = static_cast<double>(accepted) / static_cast<double>(R);
  if (accepted < 100)
    fail(errc::insufficient_conditioning_mass,
         "only " + std::to_string(accepted) + " of " + std::to_string(R) +
             " replicates satisfy the conditioning event (acceptance fraction " +
             std::to_string(est.acceptance) + ")");
  est.estimate = sum / static_cast<double>(accepted);

  // delta-method standard error of the ratio estimator
  double resid = 0.0;
  for (std::int64_t r = 0; r < R; ++r)
    if (ens.samples(r, i - 1) < d_star) {
      const double e = ens.samples(r, j - 1) - est.estimate;
      resid += e * e;
    }
  est.se = std::sqrt(resid / (static_cast<double>(R) * static_cast<double>(R - 1))) /
           est.acceptance;
  return est;
}

OracleEstimate truncated_bivariate_oracle(double d, double sigma_i, double sigma_j,
                                          double rho, double d_star,
                                          std::int64_t n_samples, std::uint64_t seed) {
  if (n_samples < 10000)
    fail(errc::invalid_parameter, "oracle needs at least 10000 samples");
  if (!(sigma_i > 0) || !(sigma_j > 0))
    fail(errc::invalid_parameter, "standard deviations must be positive");
  if (!(std::abs(rho) < 1))
    fail(errc::invalid_parameter, "correlation must lie strictly inside (-1, 1)");
  if (!std::isfinite(d_star)) fail(errc::invalid_parameter, "threshold must be finite");

  const double alpha = (d_star - d) / sigma_i;
  const double mass = 0.5 * std::erfc(-alpha / kSqrt2);
  const double cross = std::sqrt(1.0 - rho * rho);
  Rng64 rng(seed, 0);

  double sum = 0.0, sumsq = 0.0;
  std::int64_t accepted = 0;
  if (mass >= 1e-4) {
    // plain rejection on the conditioning coordinate; the second factor is
    // only drawn for accepted samples
    for (std::int64_t s = 0; s < n_samples; ++s) {
      const double z1 = rng.normal();
      if (z1 >= alpha) continue;
      const double y = d + sigma_j * (rho * z1 + cross * rng.normal());
      sum += y;
      sumsq += y * y;
      ++accepted;
    }
    if (static_cast<double>(accepted) / static_cast<double>(n_samples) < 1e-4 ||
        accepted < 2)
      fail(errc::insufficient_conditioning_mass,
           "acceptance fraction below 1e-4; the conditioning event is too deep");
  } else {
    // Deep threshold: the event {z1 < alpha} is too rare to hit by rejection,
    // so draw z1 from the tail directly (exponential-majorant tail sampler);
    // every draw is then a conditional sample.
    const double a = -alpha;
    for (std::int64_t s = 0; s < n_samples; ++s) {
      double t;
      for (;;) {
        t = std::sqrt(a * a - 2.0 * std::log(rng.uniform()));
        if (rng.uniform() * t <= a) break;
      }
      const double y = d + sigma_j * (rho * (-t) + cross * rng.normal());
      sum += y;
      sumsq += y * y;
    }
    accepted = n_samples;
  }

  OracleEstimate est;
  est.estimate = sum / static_cast<double>(accepted);
  const double var =
      (sumsq - static_cast<double>(accepted) * est.estimate * est.estimate) /
      static_cast<double>(accepted - 1);
  est.se = std::sqrt(std::max(var, 0.0) / static_cast<double>(accepted));
  return est;
}

}  // namespace platoon
