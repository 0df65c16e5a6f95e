#include "platoon/risk.hpp"

#include <cmath>
#include <limits>

#include "platoon/errors.hpp"

namespace platoon {

namespace {
constexpr double kSqrtPi = 1.77245385090551602730;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kSqrt2OverPi = 0.79788456080286535588;
constexpr double kRhoZeroTol = 1e-12;

void check_moments(double sigma_i, double sigma_j, double rho_ji, double d_star) {
  if (!(sigma_i > 0) || !(sigma_j > 0))
    fail(errc::invalid_parameter, "standard deviations must be positive");
  if (!(std::abs(rho_ji) < 1))
    fail(errc::invalid_parameter, "correlation must lie strictly inside (-1, 1)");
  if (!std::isfinite(d_star)) fail(errc::invalid_parameter, "threshold must be finite");
}
}  // namespace

namespace detail {

double erfcx_large(double x) {
  // Laplace continued fraction evaluated backward; ample depth for x >= 5.
  double t = 0.0;
  for (int k = 48; k >= 1; --k) t = (0.5 * k) / (x + t);
  return 1.0 / (kSqrtPi * (x + t));
}

double tail_ratio(double alpha) {
  // exp(-a^2/2) / (1 + erf(a/sqrt(2))) with 1 + erf rewritten as erfc(-a/sqrt(2));
  // past a = -8 both factors underflow coherently, so cancel them analytically.
  if (alpha < -8.0) return 1.0 / erfcx_large(-alpha * kInvSqrt2);
  return std::exp(-0.5 * alpha * alpha) / std::erfc(-alpha * kInvSqrt2);
}

}  // namespace detail

double systemic_threshold(double d, double delta, double c) {
  if (!(d > 0)) fail(errc::invalid_parameter, "target gap must be positive");
  if (!(delta >= 0)) fail(errc::invalid_parameter, "severity must be nonnegative");
  if (!(c > 0)) fail(errc::invalid_parameter, "offset must be positive");
  return d / (delta + c);
}

AmbiguitySet AmbiguitySet::scalar_set(double g0, double eps) {
  if (!(g0 > 0)) fail(errc::invalid_parameter, "reference diffusion must be positive");
  if (!(eps >= 0) || !(eps < 1))
    fail(errc::invalid_parameter, "ambiguity radius must lie in [0, 1)");
  AmbiguitySet a;
  a.kind = Kind::scalar;
  a.eps = eps;
  a.g0 = g0;
  return a;
}

AmbiguitySet AmbiguitySet::matrix_set(const Eigen::MatrixXd& gamma0, double eps) {
  if (!(eps >= 0) || !(eps < 1))
    fail(errc::invalid_parameter, "ambiguity radius must lie in [0, 1)");
  if (gamma0.rows() != gamma0.cols() || gamma0.rows() < 1)
    fail(errc::invalid_parameter, "reference input covariance must be square");
  const double scale = std::max(1.0, gamma0.cwiseAbs().maxCoeff());
  if ((gamma0 - gamma0.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    fail(errc::invalid_parameter, "reference input covariance must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gamma0, Eigen::EigenvaluesOnly);
  if (!(es.eigenvalues()(0) > 0))
    fail(errc::invalid_parameter, "reference input covariance must be positive definite");
  AmbiguitySet a;
  a.kind = Kind::matrix;
  a.eps = eps;
  a.gamma0 = gamma0;
  return a;
}

double conditional_expectation(double d, double sigma_i, double sigma_j,
                               double rho_ji, double d_star) {
  check_moments(sigma_i, sigma_j, rho_ji, d_star);
  const double alpha = (d_star - d) / sigma_i;
  return d - kSqrt2OverPi * rho_ji * sigma_j * detail::tail_ratio(alpha);
}

double h_eps(double eps, double d, double sigma_i0, double sigma_j0,
             double rho_ji, double d_star) {
  if (!(1.0 + eps > 0)) fail(errc::invalid_parameter, "1 + eps must be positive");
  check_moments(sigma_i0, sigma_j0, rho_ji, d_star);
  const double scale = std::sqrt(1.0 + eps);
  const double alpha = (d_star - d) / (scale * sigma_i0);
  return d - kSqrt2OverPi * rho_ji * (scale * sigma_j0) * detail::tail_ratio(alpha);
}

RiskEntry dr_cascading_risk(const DistanceStatistics& stats, int i, int j,
                            const SystemicLevelSet& level, const AmbiguitySet& amb) {
  if (amb.kind != AmbiguitySet::Kind::scalar)
    fail(errc::invalid_parameter, "cascading risk requires the scalar ambiguity variant");
  const int m = static_cast<int>(stats.sigma.rows());
  if (i < 1 || i > m || j < 1 || j > m)
    fail(errc::invalid_parameter, "pair label out of range");
  if (i == j) fail(errc::invalid_parameter, "conditioning pair must differ from target pair");

  const double d = stats.mean(i - 1);
  const double d_star = systemic_threshold(d, level.delta, level.c);
  const double sigma_i = std::sqrt(stats.sigma(i - 1, i - 1));
  const double sigma_j = std::sqrt(stats.sigma(j - 1, j - 1));
  const double rho = stats.rho(j - 1, i - 1);

  RiskEntry entry;
  entry.j = j;
  entry.rho_ji = rho;
  if (std::abs(rho) < kRhoZeroTol) {
    entry.worst_case_expectation = d;
    entry.risk = 0.0;
    return entry;
  }
  const double eps_signed = rho < 0 ? -amb.eps : amb.eps;
  const double h = h_eps(eps_signed, d, sigma_i, sigma_j, rho, d_star);
  entry.worst_case_expectation = h;
  if (h <= 0) {
    entry.degenerate = true;
    entry.risk = std::numeric_limits<double>::infinity();
  } else {
    entry.risk = d / h - 1.0;
  }
  return entry;
}

RiskResult risk_profile(const DistanceStatistics& stats, int i,
                        const SystemicLevelSet& level, const AmbiguitySet& amb) {
  const int m = static_cast<int>(stats.sigma.rows());
  if (i < 1 || i > m) fail(errc::invalid_parameter, "pair label out of range");
  RiskResult res;
  res.i = i;
  res.entries.reserve(m - 1);
  for (int j = 1; j <= m; ++j)
    if (j != i) res.entries.push_back(dr_cascading_risk(stats, i, j, level, amb));
  return res;
}

bool loewner_within(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& sigma0,
                    double eps, double tol) {
  if (sigma.rows() != sigma.cols() || sigma0.rows() != sigma0.cols() ||
      sigma.rows() != sigma0.rows())
    fail(errc::invalid_parameter, "covariance shapes do not match");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> upper(
      ((1.0 + eps) * sigma0 - sigma).eval(), Eigen::EigenvaluesOnly);
  if (upper.eigenvalues()(0) < -tol) return false;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> lower(
      (sigma - (1.0 - eps) * sigma0).eval(), Eigen::EigenvaluesOnly);
  return lower.eigenvalues()(0) >= -tol;
}

double risk_lower_bound(const Eigen::MatrixXd& sigma0, double eps, double d,
                        double d_star) {
  if (!(d > 0)) fail(errc::invalid_parameter, "target gap must be positive");
  if (!(eps >= 0) || !(eps < 1))
    fail(errc::invalid_parameter, "ambiguity radius must lie in [0, 1)");
  if (sigma0.rows() != sigma0.cols() || sigma0.rows() < 1)
    fail(errc::invalid_parameter, "covariance must be square");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma0, Eigen::EigenvaluesOnly);
  const double mu_min = es.eigenvalues()(0);
  const double mu_max = es.eigenvalues()(sigma0.rows() - 1);
  if (!(mu_min > 0))
    fail(errc::invalid_parameter, "covariance must be positive definite");

  // Evaluated exactly as printed (see README on its empirical behavior):
  //   f = sqrt(mu_max (1+eps)) / sqrt(0.5 erfc((d - d*)/(2 sqrt(mu_min (1-eps)))))
  const double fnum = std::sqrt(mu_max * (1.0 + eps));
  const double fden =
      std::sqrt(0.5 * std::erfc((d - d_star) / (2.0 * std::sqrt(mu_min * (1.0 - eps)))));
  if (fden == 0.0) return -1.0;  // denominator underflow: f diverges, bound collapses
  return d * fden / fnum - 1.0;
}

}  // namespace platoon
