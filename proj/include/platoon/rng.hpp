#pragma once

#include <cstdint>

namespace platoon {

// xoshiro256++ with per-stream seeding through splitmix64, so replicate r of a
// Monte Carlo run owns stream (seed, r) and is reproducible in isolation.
class Rng64 {
public:
  explicit Rng64(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next();

  // strictly inside (0, 1), 52-bit resolution
  double uniform();

  // standard normal via a 256-strip ziggurat
  double normal();

private:
  std::uint64_t s_[4];
};

namespace detail {
// base-strip boundary of the ziggurat tables (exposed for validation)
double ziggurat_r();
}

}  // namespace platoon
