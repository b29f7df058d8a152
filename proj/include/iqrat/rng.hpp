#ifndef IQRAT_RNG_HPP
#define IQRAT_RNG_HPP

#include <cstdint>
#include <random>

#include "iqrat/numerics.hpp"

namespace iqrat {

// splitmix64 finalizer; used to key independent streams off a master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Deterministic generator: draws come from the raw 64-bit engine output
// through fixed transforms, so results are identical across platforms and
// standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng keyed(std::uint64_t seed, std::uint64_t counter) {
    return Rng(mix_seed(seed, counter));
  }

  std::uint64_t next() { return engine_(); }

  // uniform on the open interval (0,1)
  double uniform() {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal() { return normal_quantile(uniform()); }

  bool bernoulli(double p) { return uniform() < p; }

  // uniform integer in [0, bound)
  std::uint64_t below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * bound) >> 64);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace iqrat

#endif
