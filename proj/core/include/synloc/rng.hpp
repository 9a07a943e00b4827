#pragma once

#include <cmath>
#include <cstdint>

namespace synloc {

// SplitMix64 finalizer. Used for seeding and for deriving child streams.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Deterministic generator (SplitMix64 sequence). Implemented here rather
// than on top of std distributions so output streams are identical across
// standard libraries and platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi], both inclusive. Fixed-point multiply; the
  // residual bias is below 2^-64 per value and irrelevant at our scales.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1u;
    auto wide = static_cast<unsigned __int128>(next_u64()) *
                static_cast<unsigned __int128>(span);
    return lo + static_cast<std::int64_t>(static_cast<std::uint64_t>(wide >> 64));
  }

  // Standard normal via Box-Muller (one draw per call).
  double gaussian() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Independent stream derived from the construction seed, not the current
  // state: child(k) is the same no matter how much the parent has advanced.
  Rng child(std::uint64_t stream) const {
    return Rng(mix64(seed_ ^ mix64(stream ^ 0x632be59bd9b4e019ULL)));
  }

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

}  // namespace synloc
