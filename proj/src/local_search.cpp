#include <cmath>
#include <optional>

#include "anasod/errors.hpp"
#include "anasod/strategies.hpp"

namespace anasod {
namespace detail {
namespace {

// nullopt = budget ran out before the value could be measured.
std::optional<double> eval_encoding(const CellSpec& spec,
                                    const IntegerEncoding& p,
                                    TrajectoryBuilder& builder, Rng& rng,
                                    EncodingCache& cache) {
  if (auto it = cache.find(p.counts); it != cache.end()) return it->second;
  if (builder.exhausted()) return std::nullopt;
  const Architecture arch = decode_exact(p, spec, rng);
  const Measurement& m = builder.query(normalize(p), arch, rng);
  cache.emplace(p.counts, m.val_err);
  return m.val_err;
}

std::optional<double> eval_arch(const CellSpec& spec, const Architecture& arch,
                                TrajectoryBuilder& builder, Rng& rng,
                                ArchCache& cache) {
  if (auto it = cache.find(arch.id); it != cache.end()) return it->second;
  if (builder.exhausted()) return std::nullopt;
  const Measurement& m =
      builder.query(normalize(encode(arch, spec)), arch, rng);
  cache.emplace(arch.id, m.val_err);
  return m.val_err;
}

}  // namespace

std::pair<IntegerEncoding, double> climb_encoding(const CellSpec& spec,
                                                  const IntegerEncoding& start,
                                                  TrajectoryBuilder& builder,
                                                  Rng& rng,
                                                  EncodingCache& cache) {
  IntegerEncoding current = start;
  auto value = eval_encoding(spec, current, builder, rng, cache);
  if (!value) return {current, std::numeric_limits<double>::infinity()};

  for (;;) {
    std::optional<IntegerEncoding> best_nb;
    double best_val = *value;
    for (const IntegerEncoding& nb : grid_neighbors(current)) {
      const auto v = eval_encoding(spec, nb, builder, rng, cache);
      if (!v) {
        // Out of budget mid-neighborhood: report the best point evaluated so
        // far, which may be a neighbor we could no longer move to.
        return best_nb ? std::pair{*best_nb, best_val}
                       : std::pair{current, *value};
      }
      if (*v < best_val) {
        best_val = *v;
        best_nb = nb;
      }
    }
    if (!best_nb) return {current, *value};  // local optimum on the grid
    current = std::move(*best_nb);
    value = best_val;
  }
}

std::pair<Architecture, double> climb_arch(const CellSpec& spec,
                                           const Architecture& start,
                                           TrajectoryBuilder& builder, Rng& rng,
                                           ArchCache& cache) {
  Architecture current = start;
  auto value = eval_arch(spec, current, builder, rng, cache);
  if (!value) return {current, std::numeric_limits<double>::infinity()};

  for (;;) {
    std::optional<Architecture> best_nb;
    double best_val = *value;
    for (Architecture& nb : arch_neighbors(current, spec)) {
      const auto v = eval_arch(spec, nb, builder, rng, cache);
      if (!v) {
        return best_nb ? std::pair{std::move(*best_nb), best_val}
                       : std::pair{std::move(current), *value};
      }
      if (*v < best_val) {
        best_val = *v;
        best_nb = std::move(nb);
      }
    }
    if (!best_nb) return {current, *value};
    current = std::move(*best_nb);
    value = best_val;
  }
}

}  // namespace detail

Trajectory run_local_search(const Oracle& oracle, const CellSpec& spec,
                            const SearchBudget& budget, Rng& rng,
                            LocalSearchMode mode) {
  spec.validate();
  Trajectory traj;
  traj.strategy =
      mode == LocalSearchMode::EncodingFirst ? "ls_encoding" : "ls_arch";
  detail::TrajectoryBuilder builder(oracle, budget, traj);

  detail::EncodingCache enc_cache;
  detail::ArchCache arch_cache;
  const std::vector<double> ones(spec.k(), 1.0);

  // On tiny search spaces every reachable point ends up cached and further
  // restarts stop consuming budget. A run of query-free restarts means the
  // space is exhausted; give fresh random starts a fair chance, then stop.
  constexpr int kMaxIdleRestarts = 50;
  int idle_restarts = 0;

  while (!builder.exhausted() && idle_restarts < kMaxIdleRestarts) {
    const int steps_before = builder.steps();
    if (mode == LocalSearchMode::EncodingFirst) {
      const Encoding draw = sample_dirichlet(ones, rng);
      const IntegerEncoding start = bomze_round(unnormalize(draw, spec.n()));
      const auto [opt, opt_val] =
          detail::climb_encoding(spec, start, builder, rng, enc_cache);
      (void)opt_val;
      if (builder.exhausted()) break;
      // Phase switch: climb architectures sampled from the converged
      // encoding of this restart.
      const Architecture seed_arch = decode_exact(opt, spec, rng);
      detail::climb_arch(spec, seed_arch, builder, rng, arch_cache);
    } else {
      const Architecture start = sample_uniform_architecture(spec, rng);
      detail::climb_arch(spec, start, builder, rng, arch_cache);
    }
    idle_restarts = builder.steps() == steps_before ? idle_restarts + 1 : 0;
  }
  return traj;
}

}  // namespace anasod
