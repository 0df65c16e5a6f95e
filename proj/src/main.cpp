#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "platoon/errors.hpp"
#include "platoon/graph.hpp"
#include "platoon/risk.hpp"
#include "platoon/scenario.hpp"
#include "platoon/simulate.hpp"
#include "platoon/stability.hpp"
#include "platoon/statistics.hpp"

namespace {

using namespace platoon;

constexpr double kHalfPi = 1.57079632679489661923;

struct Options {
  std::string scenario_path;
  std::string out;
  std::string sweep;
  std::optional<std::uint64_t> seed;
  std::optional<std::int64_t> replicates;
  double tol = 1e-10;
  double perturb_sigma = 0.0;
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void emit(const std::string& out_path, const std::string& content) {
  if (out_path.empty()) {
    std::cout << content;
    return;
  }
  std::ofstream f(out_path);
  if (!f) fail(errc::invalid_parameter, "cannot open output file: " + out_path);
  f << content;
}

Scenario load(const Options& o) { return load_scenario(o.scenario_path); }

SimConfig sim_config(const Scenario& sc, const SpectralData& spec, const Options& o) {
  SimConfig cfg = make_sim_config(sc, spec);
  if (o.seed) cfg.seed = *o.seed;
  if (o.replicates) cfg.replicates = *o.replicates;
  validate_sim_config(cfg, sc.params.tau, sc.topology.n);
  return cfg;
}

int run_stability(const Options& o) {
  const Scenario sc = load(o);
  const Graph g = build_topology(sc.topology);
  const SpectralData spec = spectral(g);
  const double tau = sc.params.tau, beta = sc.params.beta;
  if (!(tau > 0) || !(beta > 0))
    fail(errc::invalid_parameter, "tau and beta must be positive");

  std::ostringstream csv;
  csv << "k,lambda,s1,s2,a,s2_limit,stable\n";
  std::printf("%4s %16s %16s %12s %12s %12s  %s\n", "k", "lambda", "s1", "s2", "a",
              "s2_limit", "verdict");
  bool all_stable = true;
  for (int k = 1; k < g.n; ++k) {
    const double lam = spec.eigenvalues(k);
    const double s1 = lam * tau, s2 = beta * tau;
    double a = std::numeric_limits<double>::quiet_NaN();
    double lim = std::numeric_limits<double>::quiet_NaN();
    if (s1 > 0 && s1 < kHalfPi) {
      a = solve_a(s1);
      lim = a / std::tan(a);
    }
    const bool ok = in_stability_region({s1, s2});
    all_stable = all_stable && ok;
    csv << (k + 1) << ',' << fmt(lam) << ',' << fmt(s1) << ',' << fmt(s2) << ','
        << fmt(a) << ',' << fmt(lim) << ',' << (ok ? 1 : 0) << '\n';
    std::printf("%4d %16.9g %16.9g %12.9g %12.9g %12.9g  %s\n", k + 1, lam, s1, s2, a,
                lim, ok ? "stable" : "unstable");
  }
  std::printf("overall: %s\n", all_stable ? "stable" : "unstable");
  if (!o.out.empty()) emit(o.out, csv.str());
  return all_stable ? 0 : 1;
}

int run_covariance(const Options& o) {
  const Scenario sc = load(o);
  const Graph g = build_topology(sc.topology);
  const SpectralData spec = spectral(g);
  const DistanceStatistics stats = distance_covariance(spec, sc.params, o.tol);
  const int m = static_cast<int>(stats.sigma.rows());

  std::ostringstream csv;
  auto block = [&](const char* name, const Eigen::MatrixXd& mat) {
    csv << name;
    for (int j = 1; j <= m; ++j) csv << ',' << j;
    csv << '\n';
    for (int i = 0; i < m; ++i) {
      csv << (i + 1);
      for (int j = 0; j < m; ++j) csv << ',' << fmt(mat(i, j));
      csv << '\n';
    }
  };
  block("sigma", stats.sigma);
  block("rho", stats.rho);
  emit(o.out, csv.str());
  return 0;
}

std::string profile_csv(const DistanceStatistics& stats, int i,
                        const SystemicLevelSet& level, const AmbiguitySet& amb) {
  const RiskResult res = risk_profile(stats, i, level, amb);
  const double d = stats.mean(i - 1);
  const double d_star = systemic_threshold(d, level.delta, level.c);
  const double lb = risk_lower_bound(stats.sigma, amb.eps, d, d_star);
  std::ostringstream csv;
  csv << "j,rho_ji,worst_case_expectation,risk,lower_bound\n";
  for (const RiskEntry& e : res.entries)
    csv << e.j << ',' << fmt(e.rho_ji) << ',' << fmt(e.worst_case_expectation) << ','
        << fmt(e.risk) << ',' << fmt(lb) << '\n';
  return csv.str();
}

bool profile_degenerate(const DistanceStatistics& stats, int i,
                        const SystemicLevelSet& level, const AmbiguitySet& amb) {
  for (const RiskEntry& e : risk_profile(stats, i, level, amb).entries)
    if (e.degenerate) return true;
  return false;
}

struct SweepSpec {
  std::string field;
  std::vector<std::string> tokens;
};

SweepSpec parse_sweep(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos)
    fail(errc::invalid_parameter, "--sweep expects field=value,value,...");
  SweepSpec sw;
  sw.field = text.substr(0, eq);
  if (sw.field != "delta_i" && sw.field != "i" && sw.field != "eps")
    fail(errc::invalid_parameter, "--sweep field must be one of delta_i|i|eps");
  std::string rest = text.substr(eq + 1);
  size_t pos = 0;
  while (pos <= rest.size()) {
    const auto comma = rest.find(',', pos);
    const std::string tok =
        rest.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (tok.empty()) fail(errc::invalid_parameter, "--sweep has an empty value");
    sw.tokens.push_back(tok);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (sw.tokens.empty()) fail(errc::invalid_parameter, "--sweep has no values");
  return sw;
}

std::string sweep_filename(const std::string& out, const std::string& field,
                           const std::string& token) {
  const auto slash = out.find_last_of('/');
  const auto dot = out.find_last_of('.');
  std::string stem = out, ext;
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
    stem = out.substr(0, dot);
    ext = out.substr(dot);
  }
  return stem + "_" + field + "_" + token + ext;
}

int run_risk_profile(const Options& o) {
  const Scenario sc = load(o);
  const Graph g = build_topology(sc.topology);
  const SpectralData spec = spectral(g);
  const DistanceStatistics stats = distance_covariance(spec, sc.params, o.tol);

  bool degenerate = false;
  if (o.sweep.empty()) {
    const SystemicLevelSet level{sc.risk.delta, sc.risk.c};
    const AmbiguitySet amb = AmbiguitySet::scalar_set(sc.params.g, sc.risk.eps);
    emit(o.out, profile_csv(stats, sc.risk.i, level, amb));
    degenerate = profile_degenerate(stats, sc.risk.i, level, amb);
  } else {
    if (o.out.empty())
      fail(errc::invalid_parameter, "--sweep writes one file per value and needs --out");
    const SweepSpec sw = parse_sweep(o.sweep);
    for (const std::string& tok : sw.tokens) {
      SystemicLevelSet level{sc.risk.delta, sc.risk.c};
      AmbiguitySet amb = AmbiguitySet::scalar_set(sc.params.g, sc.risk.eps);
      int i = sc.risk.i;
      try {
        if (sw.field == "delta_i")
          level.delta = std::stod(tok);
        else if (sw.field == "eps")
          amb = AmbiguitySet::scalar_set(sc.params.g, std::stod(tok));
        else
          i = std::stoi(tok);
      } catch (const std::exception&) {
        fail(errc::invalid_parameter, "--sweep value is not a number: " + tok);
      }
      if (i < 1 || i > static_cast<int>(stats.sigma.rows()))
        fail(errc::invalid_parameter, "--sweep pair label out of range: " + tok);
      emit(sweep_filename(o.out, sw.field, tok), profile_csv(stats, i, level, amb));
      degenerate = degenerate || profile_degenerate(stats, i, level, amb);
    }
  }
  return degenerate ? 1 : 0;
}

int run_validate(const Options& o) {
  const Scenario sc = load(o);
  if (sc.topology.n > 10)
    fail(errc::invalid_parameter,
         "validate runs the Monte Carlo oracle suite and is limited to n <= 10");
  const Graph g = build_topology(sc.topology);
  const SpectralData spec = spectral(g);
  DistanceStatistics stats = distance_covariance(spec, sc.params, o.tol);
  if (o.perturb_sigma != 0.0)
    stats.sigma.diagonal() *= 1.0 + o.perturb_sigma;  // self-test hook

  const SimConfig cfg = sim_config(sc, spec, o);
  const SnapshotEnsemble ens = simulate_platoon(g, sc.params, cfg);
  const CovarianceEstimate emp = empirical_covariance(ens);
  const int m = static_cast<int>(stats.sigma.rows());

  struct Row {
    std::string name;
    double analytic, empirical, se, z;
    bool mass_failure = false;
  };
  std::vector<Row> rows;
  for (int a = 0; a < m; ++a)
    for (int b = a; b < m; ++b) {
      Row r;
      r.name = "sigma[" + std::to_string(a + 1) + "][" + std::to_string(b + 1) + "]";
      r.analytic = stats.sigma(a, b);
      r.empirical = emp.sigma(a, b);
      r.se = emp.se(a, b);
      r.z = (r.empirical - r.analytic) / r.se;
      rows.push_back(r);
    }

  const int i = sc.risk.i;
  const double d = sc.params.d;
  const double sigma_i = std::sqrt(stats.sigma(i - 1, i - 1));
  for (int j : {i - 1, i + 1}) {
    if (j < 1 || j > m) continue;
    const double sigma_j = std::sqrt(stats.sigma(j - 1, j - 1));
    const double rho = stats.rho(j - 1, i - 1);
    for (const double d_star : {d, d - sigma_i}) {
      Row r;
      r.name = "E[d" + std::to_string(j) + "|d" + std::to_string(i) + "<" + fmt(d_star) + "]";
      r.analytic = conditional_expectation(d, sigma_i, sigma_j, rho, d_star);
      try {
        const ConditionalEstimate ce = empirical_conditional_expectation(ens, i, j, d_star);
        r.empirical = ce.estimate;
        r.se = ce.se;
        r.z = (r.empirical - r.analytic) / r.se;
      } catch (const error& e) {
        if (e.code() != errc::insufficient_conditioning_mass) throw;
        r.empirical = r.se = r.z = std::numeric_limits<double>::quiet_NaN();
        r.mass_failure = true;
      }
      rows.push_back(r);
    }
  }

  std::ostringstream csv;
  csv << "name,analytic,empirical,se,z\n";
  std::printf("%-28s %16s %16s %12s %8s\n", "entry", "analytic", "empirical", "se", "z");
  bool mass_failed = false;
  double max_abs_z = 0.0;
  for (const Row& r : rows) {
    csv << r.name << ',' << fmt(r.analytic) << ',' << fmt(r.empirical) << ',' << fmt(r.se)
        << ',' << fmt(r.z) << '\n';
    if (r.mass_failure) {
      mass_failed = true;
      std::printf("%-28s %16.9g %16s %12s %8s\n", r.name.c_str(), r.analytic,
                  "insufficient", "mass", "-");
    } else {
      max_abs_z = std::max(max_abs_z, std::abs(r.z));
      std::printf("%-28s %16.9g %16.9g %12.3g %8.2f\n", r.name.c_str(), r.analytic,
                  r.empirical, r.se, r.z);
    }
  }
  if (!o.out.empty()) emit(o.out, csv.str());
  const bool pass = !mass_failed && max_abs_z <= 3.0;
  std::printf("overall: %s (max |z| = %.2f, replicates = %lld)\n",
              pass ? "PASS" : "FAIL", max_abs_z,
              static_cast<long long>(cfg.replicates));
  return pass ? 0 : 3;
}

int run_simulate(const Options& o) {
  const Scenario sc = load(o);
  const Graph g = build_topology(sc.topology);
  const SpectralData spec = spectral(g);
  const SimConfig cfg = sim_config(sc, spec, o);
  const SnapshotEnsemble ens = simulate_platoon(g, sc.params, cfg);

  std::ostringstream csv;
  const int m = static_cast<int>(ens.samples.cols());
  for (int j = 0; j < m; ++j) csv << (j ? "," : "") << (j + 1);
  csv << '\n';
  for (Eigen::Index r = 0; r < ens.samples.rows(); ++r) {
    for (int j = 0; j < m; ++j) csv << (j ? "," : "") << fmt(ens.samples(r, j));
    csv << '\n';
  }
  emit(o.out, csv.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distributionally robust cascading-risk analysis for noisy delayed platoons"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--scenario", o.scenario_path, "scenario JSON file")->required();
    sub->add_option("--out", o.out, "output CSV path (default: stdout)");
    sub->add_option("--seed", o.seed, "override the scenario RNG seed");
    sub->add_option("--replicates", o.replicates, "override the replicate count");
    sub->add_option("--tol", o.tol, "quadrature relative tolerance");
  };

  CLI::App* cmd_stability = app.add_subcommand("stability", "per-mode stability table");
  CLI::App* cmd_covariance =
      app.add_subcommand("covariance", "steady-state gap covariance and correlations");
  CLI::App* cmd_risk =
      app.add_subcommand("risk-profile", "distributionally robust cascading risk profile");
  CLI::App* cmd_validate =
      app.add_subcommand("validate", "analytic vs Monte Carlo oracle suite");
  CLI::App* cmd_simulate =
      app.add_subcommand("simulate", "export a terminal-snapshot ensemble as CSV");
  for (CLI::App* sub :
       {cmd_stability, cmd_covariance, cmd_risk, cmd_validate, cmd_simulate})
    add_common(sub);
  cmd_risk->add_option("--sweep", o.sweep,
                       "sweep one field (delta_i|i|eps), e.g. --sweep delta_i=1,3,5");
  cmd_validate->add_option("--perturb-sigma", o.perturb_sigma,
                           "inflate analytic variances by this fraction (self-test)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (cmd_stability->parsed()) return run_stability(o);
    if (cmd_covariance->parsed()) return run_covariance(o);
    if (cmd_risk->parsed()) return run_risk_profile(o);
    if (cmd_validate->parsed()) return run_validate(o);
    return run_simulate(o);
  } catch (const platoon::error& e) {
    std::cerr << e.what() << '\n';
    switch (e.code()) {
      case errc::unstable_parameters:
        return 1;
      case errc::insufficient_samples:
      case errc::insufficient_conditioning_mass:
        return 3;
      default:
        return 2;
    }
  } catch (const std::exception& e) {
    std::cerr << e.what() << '\n';
    return 2;
  }
}
