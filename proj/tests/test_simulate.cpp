#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <functional>
#include <limits>

#include "platoon/errors.hpp"
#include "platoon/graph.hpp"
#include "platoon/risk.hpp"
#include "platoon/rng.hpp"
#include "platoon/simulate.hpp"
#include "platoon/statistics.hpp"
#include "oracles.hpp"

using namespace platoon;

namespace {

errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const error& e) {
    return e.code();
  }
  FAIL("expected a platoon::error");
  return errc::invalid_parameter;
}

PlatoonParams params(double tau, double beta, double d, double g) {
  PlatoonParams p;
  p.tau = tau;
  p.beta = beta;
  p.d = d;
  p.g = g;
  return p;
}

SimConfig config(double dt, double burn, double horizon, std::int64_t reps,
                 std::uint64_t seed, double g) {
  SimConfig c;
  c.dt = dt;
  c.burn_in = burn;
  c.horizon = horizon;
  c.replicates = reps;
  c.seed = seed;
  c.g = g;
  return c;
}

}  // namespace

TEST_CASE("generator base boundary matches the 256-strip normal constant") {
  CHECK(detail::ziggurat_r() == doctest::Approx(3.65415288536100877).epsilon(1e-12));
}

TEST_CASE("uniform stays strictly inside the unit interval with flat moments") {
  Rng64 rng(11, 0);
  const long N = 2000000;
  double lo = 1.0, hi = 0.0, s = 0.0, s2 = 0.0;
  for (long i = 0; i < N; ++i) {
    const double u = rng.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    s += u;
    s2 += u * u;
  }
  CHECK(lo > 0.0);
  CHECK(hi < 1.0);
  const double mean = s / N;
  const double var = s2 / N - mean * mean;
  CHECK(std::abs(mean - 0.5) < 4.0 * 0.2887 / std::sqrt(double(N)));
  CHECK(std::abs(var - 1.0 / 12.0) < 4.0 * 0.0745 / std::sqrt(double(N)));
}

TEST_CASE("normal moments and tail mass") {
  Rng64 rng(5, 0);
  const long N = 4000000;
  double s = 0, s2 = 0, s3 = 0, s4 = 0;
  long beyond3 = 0;
  for (long i = 0; i < N; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
    s3 += z * z * z;
    s4 += z * z * z * z;
    if (std::abs(z) > 3.0) ++beyond3;
  }
  const double rootN = std::sqrt(double(N));
  CHECK(std::abs(s / N) < 4.0 / rootN);
  CHECK(std::abs(s2 / N - 1.0) < 4.0 * std::sqrt(2.0) / rootN);
  CHECK(std::abs(s3 / N) < 4.0 * std::sqrt(15.0) / rootN);
  CHECK(std::abs(s4 / N - 3.0) < 4.0 * std::sqrt(96.0) / rootN);
  // P(|Z| > 3) = 0.0026998
  const double p = double(beyond3) / N;
  CHECK(std::abs(p - 0.0026998) < 4.0 * std::sqrt(0.0027 * 0.9973 / double(N)));
}

TEST_CASE("streams are reproducible and mutually distinct") {
  Rng64 a(7, 3), b(7, 3), c(7, 4), d(8, 3);
  bool same_bc = true, same_bd = true;
  for (int i = 0; i < 64; ++i) {
    const std::uint64_t va = a.next();
    same_bc = same_bc && (va == c.next());
    same_bd = same_bd && (va == d.next());
    CHECK(va == b.next());
    if (!same_bc && !same_bd) break;
  }
  CHECK_FALSE(same_bc);
  CHECK_FALSE(same_bd);
}

TEST_CASE("default configuration derives from the spectrum") {
  const SpectralData sd = spectral(build_complete(5, 1.0));
  const PlatoonParams p = params(0.02, 1.0, 2.0, 10.0);
  const SimConfig cfg = default_sim_config(sd, p);
  CHECK(cfg.dt == doctest::Approx(0.001).epsilon(1e-15));
  CHECK(cfg.burn_in == doctest::Approx(4.0).epsilon(1e-12));   // 20/(beta lambda_2)
  CHECK(cfg.horizon == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(cfg.replicates == 10000);
  CHECK(cfg.g == 10.0);
  CHECK_FALSE(cfg.has_matrix_diffusion());
}

TEST_CASE("simulation configuration validation") {
  const double tau = 0.02;
  CHECK_NOTHROW(validate_sim_config(config(tau / 10, 1, 2, 10, 0, 1.0), tau, 5));
  CHECK_NOTHROW(validate_sim_config(config(tau / 15, 1, 2, 10, 0, 1.0), tau, 5));
  CHECK(code_of([&] { validate_sim_config(config(tau / 9, 1, 2, 10, 0, 1), tau, 5); }) ==
        errc::invalid_parameter);
  CHECK(code_of([&] { validate_sim_config(config(tau / 10.5, 1, 2, 10, 0, 1), tau, 5); }) ==
        errc::invalid_parameter);
  CHECK(code_of([&] { validate_sim_config(config(0, 1, 2, 10, 0, 1), tau, 5); }) ==
        errc::invalid_parameter);
  CHECK(code_of([&] { validate_sim_config(config(0.001, 2, 2, 10, 0, 1), tau, 5); }) ==
        errc::invalid_parameter);
  CHECK(code_of([&] { validate_sim_config(config(0.001, -1, 2, 10, 0, 1), tau, 5); }) ==
        errc::invalid_parameter);
  CHECK(code_of([&] { validate_sim_config(config(0.001, 1, 2, 0, 0, 1), tau, 5); }) ==
        errc::invalid_parameter);
  CHECK(code_of([&] { validate_sim_config(config(0.001, 1, 2, 10, 0, -1), tau, 5); }) ==
        errc::invalid_parameter);

  SimConfig bad_e = config(0.001, 1, 2, 10, 0, 1.0);
  bad_e.E = Eigen::MatrixXd::Identity(4, 4);
  CHECK(code_of([&] { validate_sim_config(bad_e, tau, 5); }) == errc::invalid_parameter);
  bad_e.E = Eigen::MatrixXd::Identity(5, 5);
  bad_e.E(2, 2) = std::nan("");
  CHECK(code_of([&] { validate_sim_config(bad_e, tau, 5); }) == errc::invalid_parameter);
}

TEST_CASE("simulator refuses unstable or malformed systems") {
  const Graph g = build_complete(5, 1.0);
  const SimConfig cfg = config(0.01, 0.5, 1.0, 3, 1, 1.0);
  CHECK(code_of([&] {
          SimConfig c = cfg;
          c.dt = 0.2;  // tau would be scaled below; dt > tau/10
          simulate_platoon(g, params(2.0, 1.0, 2.0, 1.0), c);
        }) == errc::unstable_parameters);
  CHECK(code_of([&] { simulate_platoon(g, params(0.0, 1, 2, 1), cfg); }) ==
        errc::invalid_parameter);
  const Graph split = build_from_edges(4, {{1, 2, 1.0}, {3, 4, 1.0}});
  CHECK(code_of([&] { simulate_platoon(split, params(0.1, 1, 2, 1), cfg); }) ==
        errc::not_connected);
}

TEST_CASE("zero diffusion preserves the formation fixed point exactly") {
  const Graph g = build_path(4, 1.0);
  const SnapshotEnsemble ens =
      simulate_platoon(g, params(0.02, 2.0, 1.5, 1.0), config(0.002, 0.1, 0.5, 6, 3, 0.0));
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 3; ++c) CHECK(ens.samples(r, c) == 1.5);
}

TEST_CASE("runs are deterministic and replicate-prefix stable") {
  const Graph g = build_path(4, 1.0);
  const PlatoonParams p = params(0.02, 2.0, 2.0, 0.5);
  const SimConfig small = config(0.001, 0.5, 1.0, 40, 17, 0.5);
  const SnapshotEnsemble a = simulate_platoon(g, p, small);
  const SnapshotEnsemble b = simulate_platoon(g, p, small);
  CHECK((a.samples - b.samples).cwiseAbs().maxCoeff() == 0.0);

  SimConfig larger = small;
  larger.replicates = 100;
  const SnapshotEnsemble c = simulate_platoon(g, p, larger);
  CHECK((c.samples.topRows(40) - a.samples).cwiseAbs().maxCoeff() == 0.0);

  SimConfig reseeded = small;
  reseeded.seed = 18;
  const SnapshotEnsemble d = simulate_platoon(g, p, reseeded);
  CHECK((d.samples - a.samples).cwiseAbs().maxCoeff() != 0.0);
}

TEST_CASE("identity matrix diffusion reproduces the scalar path bitwise") {
  const Graph g = build_p_cycle(5, 1, 1.0);
  const PlatoonParams p = params(0.02, 2.0, 2.0, 4.0);
  const SimConfig scalar = config(0.001, 0.5, 1.5, 50, 23, 4.0);
  SimConfig matrix = scalar;
  matrix.E = 4.0 * Eigen::MatrixXd::Identity(5, 5);
  const SnapshotEnsemble a = simulate_platoon(g, p, scalar);
  const SnapshotEnsemble b = simulate_platoon(g, p, matrix);
  CHECK((a.samples - b.samples).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gap deviations are linear in the diffusion amplitude") {
  const Graph g = build_path(4, 1.0);
  const PlatoonParams p1 = params(0.02, 2.0, 2.0, 0.5);
  const PlatoonParams p2 = params(0.02, 2.0, 2.0, 1.0);
  const SimConfig c1 = config(0.001, 0.5, 1.5, 30, 29, 0.5);
  SimConfig c2 = c1;
  c2.g = 1.0;
  const Eigen::MatrixXd dev1 = simulate_platoon(g, p1, c1).samples.array() - 2.0;
  const Eigen::MatrixXd dev2 = simulate_platoon(g, p2, c2).samples.array() - 2.0;
  CHECK((dev2 - 2.0 * dev1).cwiseAbs().maxCoeff() <= 1e-10 * dev2.cwiseAbs().maxCoeff());
}

TEST_CASE("sample covariance and jackknife errors on synthetic data") {
  // brute-force leave-one-out comparison on a small synthetic ensemble
  std::mt19937_64 eng(99);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const int R = 300, m = 3;
  SnapshotEnsemble ens;
  ens.samples.resize(R, m);
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < m; ++c) ens.samples(r, c) = unif(eng) + 0.3 * unif(eng);

  const CovarianceEstimate est = empirical_covariance(ens);

  auto sample_cov = [&](int skip) {
    Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(m);
    int count = 0;
    for (int r = 0; r < R; ++r)
      if (r != skip) {
        mean += ens.samples.row(r);
        ++count;
      }
    mean /= double(count);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(m, m);
    for (int r = 0; r < R; ++r)
      if (r != skip) {
        const Eigen::RowVectorXd cr = ens.samples.row(r) - mean;
        cov += cr.transpose() * cr;
      }
    return Eigen::MatrixXd(cov / double(count - 1));
  };

  const Eigen::MatrixXd full = sample_cov(-1);
  CHECK((est.sigma - full).cwiseAbs().maxCoeff() <= 1e-12);

  std::vector<Eigen::MatrixXd> loo;
  Eigen::MatrixXd loo_mean = Eigen::MatrixXd::Zero(m, m);
  for (int r = 0; r < R; ++r) {
    loo.push_back(sample_cov(r));
    loo_mean += loo.back();
  }
  loo_mean /= double(R);
  Eigen::MatrixXd jack = Eigen::MatrixXd::Zero(m, m);
  for (int r = 0; r < R; ++r) {
    const Eigen::MatrixXd dev = loo[r] - loo_mean;
    jack += dev.cwiseProduct(dev);
  }
  jack = (jack * (double(R - 1) / double(R))).cwiseSqrt();
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      CHECK(est.se(a, b) == doctest::Approx(jack(a, b)).epsilon(1e-10));
}

TEST_CASE("covariance estimate recovers a known multivariate normal") {
  Eigen::MatrixXd truth(3, 3);
  truth << 0.04, 0.018, 0.0, 0.018, 0.09, -0.03, 0.0, -0.03, 0.0625;
  oracles::MvnSampler mvn(Eigen::VectorXd::Constant(3, 2.0), truth, 4242);
  const int R = 20000;
  SnapshotEnsemble ens;
  ens.samples.resize(R, 3);
  for (int r = 0; r < R; ++r) ens.samples.row(r) = mvn.draw().transpose();

  const CovarianceEstimate est = empirical_covariance(ens);
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      CHECK(std::abs(est.sigma(a, b) - truth(a, b)) <= 4.0 * est.se(a, b));
      if (a == b) {
        // diagonal standard error is near sigma_aa sqrt(2/R) for a normal
        const double ref = truth(a, a) * std::sqrt(2.0 / double(R));
        CHECK(est.se(a, a) > 0.5 * ref);
        CHECK(est.se(a, a) < 2.0 * ref);
      }
    }
}

TEST_CASE("covariance estimate degenerate inputs") {
  SnapshotEnsemble ens;
  ens.samples = Eigen::MatrixXd::Constant(50, 2, 1.75);
  const CovarianceEstimate est = empirical_covariance(ens);
  CHECK(est.sigma.cwiseAbs().maxCoeff() == 0.0);
  CHECK(est.se.cwiseAbs().maxCoeff() == 0.0);

  ens.samples.resize(1, 2);
  CHECK(code_of([&] { empirical_covariance(ens); }) == errc::insufficient_samples);

  ens.samples = Eigen::MatrixXd::Random(2, 2);
  CHECK(std::isinf(empirical_covariance(ens).se(0, 0)));
}

TEST_CASE("conditional estimator with a vacuous threshold is the plain mean") {
  SnapshotEnsemble ens;
  ens.samples.resize(6, 2);
  ens.samples << 1.0, 2.0, 1.5, 2.5, 0.5, 1.5, 2.0, 3.0, 1.25, 2.25, 0.75, 1.75;
  // 99 tiles: the smallest row (0.5) appears 99 times, one short of the
  // conditioning-mass floor
  SnapshotEnsemble big;
  big.samples.resize(594, 2);
  for (int r = 0; r < 594; ++r) big.samples.row(r) = ens.samples.row(r % 6);

  const double inf = std::numeric_limits<double>::infinity();
  const ConditionalEstimate ce = empirical_conditional_expectation(big, 1, 2, inf);
  CHECK(ce.acceptance == 1.0);
  CHECK(ce.estimate == doctest::Approx(big.samples.col(1).mean()).epsilon(1e-14));

  // the quoted error must match the plain delta-method expression
  double resid = 0.0;
  for (int r = 0; r < 594; ++r) {
    const double e = big.samples(r, 1) - ce.estimate;
    resid += e * e;
  }
  CHECK(ce.se == doctest::Approx(std::sqrt(resid / (594.0 * 593.0))).epsilon(1e-12));

  CHECK(code_of([&] { empirical_conditional_expectation(big, 0, 2, 1.0); }) ==
        errc::invalid_parameter);
  CHECK(code_of([&] { empirical_conditional_expectation(big, 1, 3, 1.0); }) ==
        errc::invalid_parameter);
  CHECK(code_of([&] { empirical_conditional_expectation(big, 1, 2, std::nan("")); }) ==
        errc::invalid_parameter);
  CHECK(code_of([&] { empirical_conditional_expectation(big, 1, 2, -inf); }) ==
        errc::insufficient_conditioning_mass);
  CHECK(code_of([&] { empirical_conditional_expectation(big, 1, 2, 0.6); }) ==
        errc::insufficient_conditioning_mass);
}

TEST_CASE("conditional estimator agrees with the closed form on synthetic gaps") {
  const double d = 2.0, s1 = 0.2, s2 = 0.25, rho = -0.5;
  Eigen::MatrixXd cov(2, 2);
  cov << s1 * s1, rho * s1 * s2, rho * s1 * s2, s2 * s2;
  oracles::MvnSampler mvn(Eigen::VectorXd::Constant(2, d), cov, 777);
  SnapshotEnsemble ens;
  const int R = 40000;
  ens.samples.resize(R, 2);
  for (int r = 0; r < R; ++r) ens.samples.row(r) = mvn.draw().transpose();

  const ConditionalEstimate ce = empirical_conditional_expectation(ens, 1, 2, d);
  const double expected = conditional_expectation(d, s1, s2, rho, d);
  CHECK(std::abs(ce.estimate - expected) <= 4.0 * ce.se);
  CHECK(std::abs(ce.acceptance - 0.5) < 0.02);
  CHECK(ce.se > 0.0);
}

TEST_CASE("truncated bivariate oracle in both sampling regimes") {
  CHECK(code_of([] { truncated_bivariate_oracle(2, 0.3, 0.4, 0.5, 1.0, 9999, 1); }) ==
        errc::invalid_parameter);
  CHECK(code_of([] { truncated_bivariate_oracle(2, 0.0, 0.4, 0.5, 1.0, 10000, 1); }) ==
        errc::invalid_parameter);
  CHECK(code_of([] { truncated_bivariate_oracle(2, 0.3, 0.4, 1.0, 1.0, 10000, 1); }) ==
        errc::invalid_parameter);

  // moderate threshold: rejection path
  OracleEstimate est = truncated_bivariate_oracle(2.0, 0.3, 0.4, 0.5, 2.0, 2000000, 51);
  double expected = conditional_expectation(2.0, 0.3, 0.4, 0.5, 2.0);
  CHECK(std::abs(est.estimate - expected) <= 4.0 * est.se);

  est = truncated_bivariate_oracle(2.0, 0.3, 0.4, -0.6, 1.7, 2000000, 52);
  expected = conditional_expectation(2.0, 0.3, 0.4, -0.6, 1.7);
  CHECK(std::abs(est.estimate - expected) <= 4.0 * est.se);

  // five-sigma threshold: conditioning mass 2.9e-7 forces the tail sampler
  est = truncated_bivariate_oracle(2.0, 0.3, 0.4, 0.5, 0.5, 1000000, 53);
  CHECK(std::abs(est.estimate - 0.962699206574831576877) <= 4.0 * est.se);
  CHECK(est.se < 1e-3);

  // mass 1.08e-4 keeps the rejection path but 1e4 draws expect ~1 acceptance:
  // the empirical-acceptance guard fires
  CHECK(code_of([] {
          truncated_bivariate_oracle(2.0, 0.3, 0.4, 0.5, 2.0 - 0.3 * 3.70, 10000, 54);
        }) == errc::insufficient_conditioning_mass);
}

TEST_CASE("simulated gap covariance matches the analytic solution") {
  const Graph g = build_path(5, 1.0);
  const PlatoonParams p = params(0.02, 4.0, 2.0, 0.25);
  const DistanceStatistics st = distance_covariance(spectral(g), p);

  const SnapshotEnsemble ens = simulate_platoon(g, p, config(0.001, 13, 16, 5000, 7001, 0.25));
  const CovarianceEstimate emp = empirical_covariance(ens);
  double max_z = 0.0;
  for (int a = 0; a < 4; ++a)
    for (int b = a; b < 4; ++b)
      max_z = std::max(max_z, std::abs(emp.sigma(a, b) - st.sigma(a, b)) / emp.se(a, b));
  CHECK(max_z <= 4.0);

  // conditional expectation through the dynamics vs the direct-sampling oracle
  const double si = std::sqrt(st.sigma(1, 1)), sj = std::sqrt(st.sigma(2, 2));
  const ConditionalEstimate sde = empirical_conditional_expectation(ens, 2, 3, 2.0);
  const OracleEstimate direct =
      truncated_bivariate_oracle(2.0, si, sj, st.rho(2, 1), 2.0, 2000000, 61);
  const double gap = std::abs(sde.estimate - direct.estimate);
  CHECK(gap <= 4.0 * std::sqrt(sde.se * sde.se + direct.se * direct.se));
}

TEST_CASE("terminal snapshot is stationary in the horizon") {
  const Graph g = build_path(5, 1.0);
  const PlatoonParams p = params(0.02, 4.0, 2.0, 0.25);
  const SnapshotEnsemble a = simulate_platoon(g, p, config(0.001, 13, 16, 3000, 7002, 0.25));
  const SnapshotEnsemble b = simulate_platoon(g, p, config(0.001, 13, 20, 3000, 7003, 0.25));
  const CovarianceEstimate ea = empirical_covariance(a);
  const CovarianceEstimate eb = empirical_covariance(b);
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) {
      const double se = std::hypot(ea.se(i, j), eb.se(i, j));
      CHECK(std::abs(ea.sigma(i, j) - eb.sigma(i, j)) <= 4.0 * se);
    }
}

TEST_CASE("halving the step leaves the covariance within combined errors") {
  const Graph g = build_path(5, 1.0);
  const PlatoonParams p = params(0.02, 4.0, 2.0, 0.25);
  const SnapshotEnsemble a = simulate_platoon(g, p, config(0.001, 13, 16, 3000, 7004, 0.25));
  const SnapshotEnsemble b = simulate_platoon(g, p, config(0.0005, 13, 16, 3000, 7005, 0.25));
  const CovarianceEstimate ea = empirical_covariance(a);
  const CovarianceEstimate eb = empirical_covariance(b);
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) {
      const double se = std::hypot(ea.se(i, j), eb.se(i, j));
      CHECK(std::abs(ea.sigma(i, j) - eb.sigma(i, j)) <= 4.0 * se);
    }
}
