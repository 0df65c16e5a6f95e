#include "platoon/statistics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <vector>

#include "platoon/errors.hpp"
#include "platoon/stability.hpp"

namespace platoon {

namespace {

constexpr double kPi = 3.14159265358979323846;

// 7-point Gauss / 15-point Kronrod pair (positive abscissae; index 7 is 0).
constexpr double kXgk[8] = {
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327};

double integrand(double s1, double s2, double r) {
  const double t1 = s1 * s2 - r * r * std::cos(r);
  const double t2 = r * (s1 - r * std::sin(r));
  return 1.0 / (t1 * t1 + t2 * t2);
}

struct Panel {
  double a = 0, b = 0;
  double value = 0;  // Kronrod estimate
  double err = 0;    // |Kronrod - Gauss|
};

Panel eval_panel(double s1, double s2, double a, double b) {
  const double h = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  const double f0 = integrand(s1, s2, mid);
  double fk = kWgk[7] * f0;
  double fg = kWg[3] * f0;
  for (int i = 0; i < 7; ++i) {
    const double fl = integrand(s1, s2, mid - h * kXgk[i]);
    const double fr = integrand(s1, s2, mid + h * kXgk[i]);
    fk += kWgk[i] * (fl + fr);
    if (i % 2 == 1) fg += kWg[i / 2] * (fl + fr);
  }
  Panel p;
  p.a = a;
  p.b = b;
  p.value = h * fk;
  p.err = std::abs(h * (fk - fg));
  return p;
}

struct WorstFirst {
  bool operator()(const Panel& x, const Panel& y) const {
    if (x.err != y.err) return x.err < y.err;
    return x.a > y.a;  // ties: refine the leftmost interval first
  }
};

}  // namespace

double f_integral(double s1, double s2, double tol) {
  if (!(tol > 0)) fail(errc::invalid_parameter, "quadrature tolerance must be positive");
  if (!in_stability_region({s1, s2}))
    fail(errc::unstable_parameters,
         "the distance-variance integral exists only inside the stability region");

  // The denominator grows like r^4 once r dominates s1, s2, so the integrand
  // is below 3/r^4 for r >= 13 and the half-line tail beyond R is below 1/R^3.
  std::priority_queue<Panel, std::vector<Panel>, WorstFirst> queue;
  double total = 0, total_err = 0;
  auto push_segments = [&](double from, double to) {
    const int segs = std::max(1, static_cast<int>(std::llround((to - from) / kPi)));
    const double w = (to - from) / segs;
    for (int i = 0; i < segs; ++i) {
      Panel p = eval_panel(s1, s2, from + i * w, from + (i + 1) * w);
      total += p.value;
      total_err += p.err;
      queue.push(p);
    }
  };

  double R = 64.0 * kPi;
  push_segments(0.0, R);

  const int max_panels = 400000;
  int panels = static_cast<int>(queue.size());
  for (;;) {
    // refine until the quadrature error is well under the tolerance
    while (total_err > 0.4 * tol * std::abs(total) && panels < max_panels) {
      Panel worst = queue.top();
      queue.pop();
      total -= worst.value;
      total_err -= worst.err;
      const double mid = 0.5 * (worst.a + worst.b);
      for (const Panel& half :
           {eval_panel(s1, s2, worst.a, mid), eval_panel(s1, s2, mid, worst.b)}) {
        total += half.value;
        total_err += half.err;
        queue.push(half);
      }
      ++panels;
    }
    if (total_err > 0.4 * tol * std::abs(total))
      fail(errc::invalid_parameter, "quadrature did not converge within the panel budget");
    // extend the domain until the analytic tail bound is negligible
    if (1.0 / (R * R * R) <= 0.1 * tol * total) break;
    push_segments(R, 2.0 * R);
    panels = static_cast<int>(queue.size());
    R *= 2.0;
  }

  // Deterministic final reduction: drain, order by position, compensated sum.
  std::vector<Panel> parts;
  parts.reserve(queue.size());
  while (!queue.empty()) {
    parts.push_back(queue.top());
    queue.pop();
  }
  std::sort(parts.begin(), parts.end(),
            [](const Panel& x, const Panel& y) { return x.a < y.a; });
  double sum = 0, comp = 0;
  for (const Panel& p : parts) {
    const double t = p.value - comp;
    const double next = sum + t;
    comp = (next - sum) - t;
    sum = next;
  }
  return 2.0 * sum;  // even integrand: full-line value
}

void validate_params(const SpectralData& spec, const PlatoonParams& p) {
  if (!(p.tau > 0) || !(p.beta > 0) || !(p.d > 0) || !(p.g > 0))
    fail(errc::invalid_parameter, "tau, beta, d, g must all be positive");
  if (!platoon_stable(spec, p.tau, p.beta))
    fail(errc::unstable_parameters, "parameters fall outside the stability region");
}

Eigen::VectorXd modal_variances(const SpectralData& spec, const PlatoonParams& p,
                                double tol) {
  validate_params(spec, p);
  const int n = static_cast<int>(spec.eigenvalues.size());
  const double prefactor = p.g * p.g * p.tau * p.tau * p.tau / (2.0 * kPi);
  Eigen::VectorXd out(n - 1);
  std::map<double, double> cache;  // repeated eigenvalues share one quadrature
  for (int k = 1; k < n; ++k) {
    const double lam = spec.eigenvalues(k);
    auto it = cache.find(lam);
    if (it == cache.end())
      it = cache.emplace(lam, f_integral(lam * p.tau, p.beta * p.tau, tol)).first;
    out(k - 1) = prefactor * it->second;
  }
  return out;
}

DistanceStatistics distance_covariance(const SpectralData& spec, const PlatoonParams& p,
                                       double tol) {
  const Eigen::VectorXd var_z = modal_variances(spec, p, tol);
  const int n = static_cast<int>(spec.eigenvalues.size());
  const int m = n - 1;

  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, m);  // column i: e_{i+1} - e_i
  for (int i = 0; i < m; ++i) {
    D(i, i) = -1.0;
    D(i + 1, i) = 1.0;
  }
  const Eigen::MatrixXd B = D.transpose() * spec.eigenvectors.rightCols(m);

  DistanceStatistics st;
  st.sigma = B * var_z.asDiagonal() * B.transpose();
  st.sigma = (0.5 * (st.sigma + st.sigma.transpose())).eval();
  st.mean = Eigen::VectorXd::Constant(m, p.d);
  st.rho = Eigen::MatrixXd::Identity(m, m);
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      double r = st.sigma(i, j) / std::sqrt(st.sigma(i, i) * st.sigma(j, j));
      r = std::clamp(r, -1.0, 1.0);
      st.rho(i, j) = r;
      st.rho(j, i) = r;
    }
  }
  return st;
}

}  // namespace platoon
