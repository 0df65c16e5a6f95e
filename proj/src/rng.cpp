#include "platoon/rng.hpp"

#include <cmath>

namespace platoon {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSqrt2 = 1.41421356237309504880;

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

inline std::uint64_t splitmix64(std::uint64_t& z) {
  z += 0x9E3779B97F4A7C15ULL;
  std::uint64_t r = z;
  r = (r ^ (r >> 30)) * 0xBF58476D1CE4E5B9ULL;
  r = (r ^ (r >> 27)) * 0x94D049BB133111EBULL;
  return r ^ (r >> 31);
}

// 256-strip ziggurat tables for the standard normal, solved at startup.
struct ZigTables {
  double x[257];      // strip boundaries; x[0] is the pseudo-base V/f(r), x[1] = r
  double ratio[256];  // x[i+1]/x[i]: acceptance threshold for the box test
  double r = 0;       // base boundary

  ZigTables() {
    // closure(r) > 0 when r is too small (v too large: the recursion overshoots f(0) = 1)
    double lo = 3.0, hi = 4.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (closure(mid, x) > 0.0 ? lo : hi) = mid;
    }
    r = hi;  // the high end is the side whose recursion completed
    closure(r, x);
    x[256] = 0.0;
    for (int i = 0; i < 256; ++i) ratio[i] = x[i + 1] / x[i];
  }

  static double closure(double r, double* X) {
    const double f_r = std::exp(-0.5 * r * r);
    const double tail = std::sqrt(kPi / 2.0) * std::erfc(r / kSqrt2);
    const double v = r * f_r + tail;  // common area of every strip
    X[0] = v / f_r;
    X[1] = r;
    double f = f_r;
    for (int i = 2; i < 256; ++i) {
      const double arg = v / X[i - 1] + f;
      if (arg >= 1.0) return 1.0;  // strip ceiling passed f(0): r too large
      X[i] = std::sqrt(-2.0 * std::log(arg));
      f = arg;
    }
    return v / X[255] + f - 1.0;
  }
};

const ZigTables& tables() {
  static const ZigTables t;
  return t;
}

}  // namespace

namespace detail {
double ziggurat_r() { return tables().r; }
}  // namespace detail

Rng64::Rng64(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + stream * 0x9E3779B97F4A7C15ULL;
  s_[0] = splitmix64(z);
  s_[1] = splitmix64(z);
  s_[2] = splitmix64(z);
  s_[3] = splitmix64(z);
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;  // the all-zero state is absorbing
}

std::uint64_t Rng64::next() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng64::uniform() {
  return (static_cast<double>(next() >> 12) + 0.5) * 0x1.0p-52;
}

double Rng64::normal() {
  const ZigTables& t = tables();
  for (;;) {
    const int i = static_cast<int>(next() & 0xFF);
    const double u = 2.0 * uniform() - 1.0;
    if (std::abs(u) < t.ratio[i]) return u * t.x[i];
    if (i == 0) {
      // base strip: sample the tail beyond r with an exponential majorant
      double ex, ey;
      do {
        ex = -std::log(uniform()) / t.r;
        ey = -std::log(uniform());
      } while (2.0 * ey < ex * ex);
      return u < 0 ? -(t.r + ex) : t.r + ex;
    }
    const double cand = u * t.x[i];
    const double f_lo = std::exp(-0.5 * (t.x[i] * t.x[i] - cand * cand));
    const double f_hi = std::exp(-0.5 * (t.x[i + 1] * t.x[i + 1] - cand * cand));
    if (f_hi + uniform() * (f_lo - f_hi) < 1.0) return cand;
  }
}

}  // namespace platoon
