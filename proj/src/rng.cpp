#include "anasod/rng.hpp"

#include <cmath>

#include "anasod/errors.hpp"

namespace anasod {

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index,
                          std::string_view label) {
  std::uint64_t s = mix64(master ^ fnv1a64(label));
  return mix64(s ^ (index + 0x9e3779b97f4a7c15ULL));
}

int Rng::uniform_int(int n) {
  if (n <= 0) throw InvalidInputError("uniform_int: n must be positive");
  // Multiply-shift map of a 64-bit draw onto [0, n); bias is O(n / 2^64).
  const unsigned __int128 wide =
      static_cast<unsigned __int128>(next_u64()) * static_cast<unsigned __int128>(n);
  return static_cast<int>(wide >> 64);
}

double Rng::normal() {
  // Box-Muller, cosine branch only so each draw consumes exactly two
  // engine outputs regardless of caller history.
  const double u1 = uniform_open();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

double Rng::gamma(double alpha) {
  if (!(alpha > 0.0)) throw InvalidInputError("gamma: alpha must be positive");
  if (alpha < 1.0) {
    // Marsaglia-Tsang boost: draw at alpha+1 and scale back by u^(1/alpha).
    const double u = uniform_open();
    return gamma(alpha + 1.0) * std::pow(u, 1.0 / alpha);
  }
  const double d = alpha - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform_open();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double counter_unit(std::uint64_t key, std::uint64_t counter) {
  return open_unit_from_bits(mix64(key ^ mix64(counter)));
}

double counter_normal(std::uint64_t key, std::uint64_t counter) {
  const double u1 = open_unit_from_bits(mix64(key ^ mix64(2 * counter)));
  const double u2 = unit_from_bits(mix64(key ^ mix64(2 * counter + 1)));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
}

}  // namespace anasod
