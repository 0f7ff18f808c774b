#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "anasod/cell_spec.hpp"
#include "anasod/rng.hpp"

namespace anasod {

// Point on the probability simplex: entries >= 0, sum 1 within 1e-9.
struct Encoding {
  std::vector<double> values;
  int k() const { return static_cast<int>(values.size()); }
  friend bool operator==(const Encoding&, const Encoding&) = default;
};

// Operation counts: entries >= 0 integers summing to the block count N.
struct IntegerEncoding {
  std::vector<int> counts;
  int k() const { return static_cast<int>(counts.size()); }
  int total() const;
  friend auto operator<=>(const IntegerEncoding&, const IntegerEncoding&) = default;
};

// Scaled simplex point: entries >= 0 real, sum N within 1e-6.
struct SimplexPoint {
  std::vector<double> values;
  int k() const { return static_cast<int>(values.size()); }
};

void validate_encoding(const Encoding& p);
void validate_integer_encoding(const IntegerEncoding& p, int n);

Encoding uniform_encoding(int k);

// Operation histogram of an architecture.
IntegerEncoding encode(const Architecture& arch, const CellSpec& spec);

// counts / N. The total must be positive.
Encoding normalize(const IntegerEncoding& p);

// N * p, the point the rounding rule operates on.
SimplexPoint unnormalize(const Encoding& p, int n);

// Nearest grid point under any l_p norm: keep the floors, then give one
// extra unit to each of the g(m) coordinates with the largest fractional
// parts, lowest index first on ties.
IntegerEncoding bomze_round(const SimplexPoint& m);

// Uniformly shuffled placement of the op multiset onto blocks. Counts must
// sum to spec.n() exactly. Variable topologies also sample a wiring.
Architecture decode_exact(const IntegerEncoding& p, const CellSpec& spec,
                          Rng& rng);

// Each block draws its op independently from p. Variable topologies also
// sample a wiring.
Architecture decode_stochastic(const Encoding& p, const CellSpec& spec,
                               Rng& rng);

// Integer encodings one unit move away: p - e_i + e_j for p_i >= 1, j != i.
// At most k(k-1) entries, no duplicates.
std::vector<IntegerEncoding> grid_neighbors(const IntegerEncoding& p);

// Architectures at edit distance one: every single-block op substitution
// plus, for variable topologies, every valid single-block rewiring.
// Deduplicated by id, never contains the input.
std::vector<Architecture> arch_neighbors(const Architecture& arch,
                                         const CellSpec& spec);

// |{integer encodings}| = C(N+k-1, k-1). Exact; throws CapacityError when
// the count does not fit 64 bits.
std::uint64_t count_encodings(int n, int k);

// All integer encodings with sum n over k ops, lexicographic order.
std::vector<IntegerEncoding> enumerate_grid(int n, int k);
void for_each_grid_point(int n, int k,
                         const std::function<void(const IntegerEncoding&)>& fn);

// Dirichlet draw; all concentration parameters must be positive.
Encoding sample_dirichlet(const std::vector<double>& alpha, Rng& rng);

enum class NormOrder { L1, L2, LInf };

double simplex_distance(const Encoding& a, const Encoding& b, NormOrder order);

}  // namespace anasod
