#pragma once

#include <cmath>
#include <cstdint>

// Counter-based random numbers. Every draw is a pure function of a key, so
// simulation paths that must share randomness (full / truncated / circular
// processes, coupled approximants) can reproduce the exact same values, and
// results do not depend on thread scheduling.

namespace hdspec::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Reserved stream tags keep unrelated consumers of the same seed apart.
enum Stream : std::uint64_t {
  kInnovations = 0x01,
  kModel = 0x02,
  kWishart = 0x03,
  kXi = 0x04,
  kMonteCarlo = 0x05,
  kTaskSeed = 0x06,
  kNoise = 0x07,
};

inline std::uint64_t key2(std::uint64_t seed, std::uint64_t a) {
  return splitmix64(splitmix64(seed) ^ a);
}

inline std::uint64_t key3(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return splitmix64(key2(seed, a) ^ b);
}

inline std::uint64_t key4(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
  return splitmix64(key3(seed, a, b) ^ c);
}

// Uniform in the open interval (0,1); never returns 0 or 1.
inline double u01(std::uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

inline double gaussian_from_key(std::uint64_t key) {
  const double u1 = u01(splitmix64(key ^ 0xD1B54A32D192ED03ull));
  const double u2 = u01(splitmix64(key ^ 0x8CB92BA72F3D8DD7ull));
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(6.2831853071795864769 * u2);
}

inline double rademacher_from_key(std::uint64_t key) {
  return (splitmix64(key ^ 0xE7037ED1A0B428DBull) >> 63) ? 1.0 : -1.0;
}

// Mean 0, variance 1.
inline double centered_uniform_from_key(std::uint64_t key) {
  return (u01(splitmix64(key ^ 0xA0761D6478BD642Full)) - 0.5) *
         3.4641016151377545871;  // sqrt(12)
}

// Sequential deterministic stream (splitmix64 over a hashed key).
class Stream64 {
 public:
  Stream64(std::uint64_t seed, std::uint64_t stream, std::uint64_t substream = 0)
      : key_(key3(seed, stream, substream)) {}

  std::uint64_t next_bits() { return splitmix64(key_ + (counter_++) * kGolden); }
  double next_u01() { return u01(next_bits()); }

  double next_gaussian() {
    const double u1 = next_u01();
    const double u2 = next_u01();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(6.2831853071795864769 * u2);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace hdspec::rng
