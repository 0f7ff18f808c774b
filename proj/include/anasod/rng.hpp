#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace anasod {

// splitmix64 finalizer. Bijective on uint64 with good avalanche; used for
// seed derivation and counter-based noise streams.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Child stream seed for (master, index, label). Distinct labels or indices
// give statistically independent streams.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                          std::string_view label);

// 53-bit mantissa conversions.
inline double unit_from_bits(std::uint64_t x) {
  return static_cast<double>(x >> 11) * 0x1.0p-53;  // [0, 1)
}
inline double open_unit_from_bits(std::uint64_t x) {
  // 52 bits, not 53: with 53 the top value is a round-to-even tie with 1.0.
  return (static_cast<double>(x >> 12) + 0.5) * 0x1.0p-52;  // (0, 1)
}

// Deterministic random stream. The engine is mt19937_64, whose output
// sequence the standard pins down exactly; the distribution code is written
// out here rather than taken from <random> because the standard leaves
// normal/gamma algorithms implementation-defined and trajectories must be
// byte-identical everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  double uniform() { return unit_from_bits(next_u64()); }            // [0,1)
  double uniform_open() { return open_unit_from_bits(next_u64()); }  // (0,1)

  // Uniform over [0, n); n must be positive.
  int uniform_int(int n);

  double normal();              // standard normal
  double gamma(double alpha);   // shape alpha > 0, unit scale

 private:
  std::mt19937_64 engine_;
};

// Pure functions of (key, counter): the same pair always yields the same
// draw, independent of any stream state. Used for frozen per-architecture
// noise in the synthetic oracle.
double counter_unit(std::uint64_t key, std::uint64_t counter);    // (0,1)
double counter_normal(std::uint64_t key, std::uint64_t counter);  // N(0,1)

}  // namespace anasod
