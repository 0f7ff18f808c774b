#include "anasod/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "anasod/errors.hpp"

namespace anasod {

int IntegerEncoding::total() const {
  return std::accumulate(counts.begin(), counts.end(), 0);
}

void validate_encoding(const Encoding& p) {
  if (p.values.empty()) throw InvalidInputError("empty encoding");
  double sum = 0.0;
  for (double v : p.values) {
    if (!(v >= 0.0)) throw InvalidInputError("encoding entry below zero");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw InvalidInputError("encoding does not sum to 1");
}

void validate_integer_encoding(const IntegerEncoding& p, int n) {
  if (p.counts.empty()) throw InvalidInputError("empty integer encoding");
  for (int c : p.counts)
    if (c < 0) throw InvalidInputError("negative op count");
  if (p.total() != n)
    throw InvalidConfigurationError("op counts sum to " +
                                    std::to_string(p.total()) + ", expected " +
                                    std::to_string(n));
}

Encoding uniform_encoding(int k) {
  if (k < 1) throw InvalidInputError("uniform_encoding: k must be positive");
  return Encoding{std::vector<double>(k, 1.0 / k)};
}

IntegerEncoding encode(const Architecture& arch, const CellSpec& spec) {
  validate_architecture(arch, spec);
  IntegerEncoding p{std::vector<int>(spec.k(), 0)};
  for (int op : arch.ops) ++p.counts[op];
  return p;
}

Encoding normalize(const IntegerEncoding& p) {
  const int n = p.total();
  if (p.counts.empty() || n <= 0)
    throw InvalidInputError("normalize: counts must sum to a positive N");
  for (int c : p.counts)
    if (c < 0) throw InvalidInputError("normalize: negative op count");
  Encoding out{std::vector<double>(p.counts.size())};
  for (std::size_t i = 0; i < p.counts.size(); ++i)
    out.values[i] = static_cast<double>(p.counts[i]) / n;
  return out;
}

SimplexPoint unnormalize(const Encoding& p, int n) {
  validate_encoding(p);
  if (n < 1) throw InvalidInputError("unnormalize: N must be positive");
  SimplexPoint out{p.values};
  for (double& v : out.values) v *= n;
  return out;
}

IntegerEncoding bomze_round(const SimplexPoint& m) {
  if (m.values.empty()) throw InvalidInputError("bomze_round: empty input");
  double sum = 0.0;
  for (double v : m.values) {
    if (!(v >= -1e-9)) throw InvalidInputError("bomze_round: negative entry");
    sum += v;
  }
  const double n_real = std::round(sum);
  if (std::abs(sum - n_real) > 1e-6)
    throw InvalidInputError("bomze_round: entries sum to a non-integer");
  const int n = static_cast<int>(n_real);

  const int k = m.k();
  IntegerEncoding p{std::vector<int>(k)};
  std::vector<double> frac(k);
  int assigned = 0;
  for (int i = 0; i < k; ++i) {
    const double v = std::max(m.values[i], 0.0);
    p.counts[i] = static_cast<int>(std::floor(v));
    frac[i] = v - p.counts[i];
    assigned += p.counts[i];
  }

  // Hand out the remaining g(m) units to the largest fractional parts;
  // ties break toward the lower index.
  int remaining = n - assigned;
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (frac[a] != frac[b]) return frac[a] > frac[b];
    return a < b;
  });
  for (int r = 0; r < remaining; ++r) ++p.counts[order[r]];
  return p;
}

namespace {

std::vector<Edge> wiring_for_decode(const CellSpec& spec, Rng& rng) {
  if (const auto* var = std::get_if<VariableWiring>(&spec.topology))
    return sample_wiring(*var, spec.n(), rng);
  return std::get<FixedDag>(spec.topology).edges;
}

}  // namespace

Architecture decode_exact(const IntegerEncoding& p, const CellSpec& spec,
                          Rng& rng) {
  if (p.k() != spec.k())
    throw InvalidInputError("decode_exact: encoding arity differs from spec");
  validate_integer_encoding(p, spec.n());

  std::vector<int> ops;
  ops.reserve(spec.n());
  for (int op = 0; op < p.k(); ++op)
    ops.insert(ops.end(), p.counts[op], op);
  // Fisher-Yates makes every placement of the multiset equally likely.
  for (int i = spec.n() - 1; i > 0; --i)
    std::swap(ops[i], ops[rng.uniform_int(i + 1)]);
  return Architecture::make(std::move(ops), wiring_for_decode(spec, rng), spec);
}

Architecture decode_stochastic(const Encoding& p, const CellSpec& spec,
                               Rng& rng) {
  if (p.k() != spec.k())
    throw InvalidInputError("decode_stochastic: encoding arity differs from spec");
  validate_encoding(p);

  std::vector<int> ops(spec.n());
  for (int b = 0; b < spec.n(); ++b) {
    const double u = rng.uniform();
    double cum = 0.0;
    int pick = p.k() - 1;  // guards against fp shortfall in the running sum
    for (int op = 0; op < p.k(); ++op) {
      cum += p.values[op];
      if (u < cum) {
        pick = op;
        break;
      }
    }
    ops[b] = pick;
  }
  return Architecture::make(std::move(ops), wiring_for_decode(spec, rng), spec);
}

std::vector<IntegerEncoding> grid_neighbors(const IntegerEncoding& p) {
  for (int c : p.counts)
    if (c < 0) throw InvalidInputError("grid_neighbors: negative op count");
  std::vector<IntegerEncoding> out;
  const int k = p.k();
  for (int i = 0; i < k; ++i) {
    if (p.counts[i] < 1) continue;
    for (int j = 0; j < k; ++j) {
      if (j == i) continue;
      IntegerEncoding nb = p;
      --nb.counts[i];
      ++nb.counts[j];
      out.push_back(std::move(nb));
    }
  }
  return out;
}

std::vector<Architecture> arch_neighbors(const Architecture& arch,
                                         const CellSpec& spec) {
  validate_architecture(arch, spec);
  std::vector<Architecture> out;
  std::set<std::string> seen{arch.id};
  for (int b = 0; b < spec.n(); ++b) {
    for (int op = 0; op < spec.k(); ++op) {
      if (op == arch.ops[b]) continue;
      std::vector<int> ops = arch.ops;
      ops[b] = op;
      Architecture nb = Architecture::make(std::move(ops), arch.wiring, spec);
      if (seen.insert(nb.id).second) out.push_back(std::move(nb));
    }
  }
  for (Architecture& nb : wiring_neighbors(arch, spec))
    if (seen.insert(nb.id).second) out.push_back(std::move(nb));
  return out;
}

std::uint64_t count_encodings(int n, int k) {
  if (n < 1 || k < 1)
    throw InvalidInputError("count_encodings: N and k must be positive");
  // C(n+k-1, k-1), computed as a running product that stays integral.
  const long long top = static_cast<long long>(n) + k - 1;
  const long long r = std::min<long long>(k - 1, n);
  unsigned __int128 acc = 1;
  for (long long i = 1; i <= r; ++i) {
    acc = acc * static_cast<unsigned __int128>(top - r + i) /
          static_cast<unsigned __int128>(i);
    if (acc > std::numeric_limits<std::uint64_t>::max())
      throw CapacityError("count_encodings: result exceeds 64 bits");
  }
  return static_cast<std::uint64_t>(acc);
}

void for_each_grid_point(int n, int k,
                         const std::function<void(const IntegerEncoding&)>& fn) {
  if (n < 1 || k < 1)
    throw InvalidInputError("grid enumeration: N and k must be positive");
  IntegerEncoding p{std::vector<int>(k, 0)};
  // Counts in lexicographic order via recursion over the first k-1 slots.
  const std::function<void(int, int)> rec = [&](int slot, int left) {
    if (slot == k - 1) {
      p.counts[slot] = left;
      fn(p);
      return;
    }
    for (int c = 0; c <= left; ++c) {
      p.counts[slot] = c;
      rec(slot + 1, left - c);
    }
  };
  rec(0, n);
}

std::vector<IntegerEncoding> enumerate_grid(int n, int k) {
  std::vector<IntegerEncoding> out;
  out.reserve(count_encodings(n, k));
  for_each_grid_point(n, k, [&](const IntegerEncoding& p) { out.push_back(p); });
  return out;
}

Encoding sample_dirichlet(const std::vector<double>& alpha, Rng& rng) {
  if (alpha.empty()) throw InvalidInputError("sample_dirichlet: empty alpha");
  for (double a : alpha)
    if (!(a > 0.0))
      throw InvalidInputError("sample_dirichlet: alpha entries must be positive");
  Encoding out{std::vector<double>(alpha.size())};
  double sum = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    out.values[i] = rng.gamma(alpha[i]);
    sum += out.values[i];
  }
  if (!(sum > 0.0))
    throw NumericalError("sample_dirichlet: gamma draws underflowed to zero");
  for (double& v : out.values) v /= sum;
  return out;
}

double simplex_distance(const Encoding& a, const Encoding& b, NormOrder order) {
  if (a.k() != b.k())
    throw InvalidInputError("simplex_distance: dimension mismatch");
  double acc = 0.0;
  for (int i = 0; i < a.k(); ++i) {
    const double d = std::abs(a.values[i] - b.values[i]);
    switch (order) {
      case NormOrder::L1: acc += d; break;
      case NormOrder::L2: acc += d * d; break;
      case NormOrder::LInf: acc = std::max(acc, d); break;
    }
  }
  return order == NormOrder::L2 ? std::sqrt(acc) : acc;
}

}  // namespace anasod
