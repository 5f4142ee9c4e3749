#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace redlab {

// Thin wrapper over mt19937_64 with hand-rolled transforms. The engine is
// bit-exact across platforms by the standard; std::*_distribution is not,
// so all transforms live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // uniform in (0, 1)
  double uniform() {
    double u = static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
  }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  // index into a cumulative-probability table (last entry ~ 1.0)
  int categorical(const std::vector<double>& cum) {
    double u = uniform();
    int lo = 0, hi = static_cast<int>(cum.size()) - 1;
    while (lo < hi) {
      int mid = (lo + hi) / 2;
      if (u <= cum[mid])
        hi = mid;
      else
        lo = mid + 1;
    }
    return lo;
  }

  // uniform integer in [0, n)
  int uniform_int(int n) { return static_cast<int>(gen_() % static_cast<std::uint64_t>(n)); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace redlab
