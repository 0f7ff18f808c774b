#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "anasod/errors.hpp"
#include "anasod/strategies.hpp"

namespace anasod {
namespace {

// GP targets are log-transformed; clamped-to-zero measurements are floored
// here so a perfect architecture cannot poison the fit.
constexpr double kMinGpTarget = 1e-3;

struct Proposal {
  Encoding encoding;
  Architecture arch;
};

}  // namespace

Trajectory run_bo(const Oracle& oracle, const CellSpec& spec,
                  const SearchBudget& budget, Rng& rng,
                  const BoOptions& options) {
  spec.validate();
  if (options.n_init < 1 || options.batch_size < 1 ||
      options.pool_size < options.batch_size)
    throw InvalidInputError(
        "bo: need n_init >= 1, batch_size >= 1, pool_size >= batch_size");

  auto fit_fn = options.fit_override;
  if (!fit_fn)
    fit_fn = [](const std::vector<Encoding>& x, const std::vector<double>& y,
                const gp::FitOptions& opts) { return gp::Model::fit(x, y, opts); };

  Trajectory traj;
  traj.strategy = "bo";
  detail::TrajectoryBuilder builder(oracle, budget, traj);

  const int k = spec.k();
  const std::vector<double> ones(k, 1.0);
  std::vector<Encoding> inputs;
  std::vector<double> targets;
  std::set<std::string> queried_ids;

  Encoding p_star = uniform_encoding(k);
  double y_star = std::numeric_limits<double>::infinity();

  auto record = [&](const Encoding& enc, const Architecture& arch) {
    const Measurement& m = builder.query(enc, arch, rng);
    queried_ids.insert(arch.id);
    inputs.push_back(enc);
    targets.push_back(std::max(m.val_err, kMinGpTarget));
    if (m.val_err < y_star) {
      y_star = m.val_err;
      p_star = enc;
    }
  };

  // Space-filling start: uniform Dirichlet encodings, one sampled
  // architecture each, resampled a bounded number of times on id collisions.
  while (static_cast<int>(inputs.size()) < options.n_init &&
         !builder.exhausted()) {
    Encoding enc = sample_dirichlet(ones, rng);
    Architecture arch = decode_stochastic(enc, spec, rng);
    for (int attempt = 0; attempt < 100 && queried_ids.count(arch.id);
         ++attempt) {
      enc = sample_dirichlet(ones, rng);
      arch = decode_stochastic(enc, spec, rng);
    }
    record(enc, arch);
  }

  GeneratingDistribution dist;
  dist.beta_max = options.beta_max;
  dist.success_threshold = options.success_threshold;
  dist.failure_threshold = options.failure_threshold;
  dist.best_encoding = p_star;

  std::optional<gp::Hyperparams> warm;
  while (!builder.exhausted()) {
    std::vector<Proposal> proposals;

    try {
      gp::FitOptions fit_opts = options.fit;
      fit_opts.policy = options.policy;
      fit_opts.warm_start = warm;
      const gp::Model model = fit_fn(inputs, targets, fit_opts);
      warm = model.hyperparams();

      dist.best_encoding = p_star;
      std::vector<Encoding> pool;
      pool.reserve(options.pool_size);
      const std::vector<double> alpha = dirichlet_params(dist, k);
      for (int i = 0; i < options.pool_size; ++i)
        pool.push_back(sample_dirichlet(alpha, rng));

      const std::vector<double> scores = model.expected_improvement_batch(
          pool, model.best_transformed_target(), options.policy);

      std::vector<int> order(pool.size());
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
      });

      for (int idx : order) {
        if (static_cast<int>(proposals.size()) >= options.batch_size) break;
        Architecture arch = decode_stochastic(pool[idx], spec, rng);
        if (queried_ids.count(arch.id)) continue;  // dedup by id
        proposals.push_back({pool[idx], std::move(arch)});
      }
      // Pool exhausted against the dedup set: allow repeats rather than
      // stalling the trial.
      for (std::size_t i = 0;
           static_cast<int>(proposals.size()) < options.batch_size &&
           i < order.size();
           ++i) {
        Architecture arch = decode_stochastic(pool[order[i]], spec, rng);
        proposals.push_back({pool[order[i]], std::move(arch)});
      }
    } catch (const NumericalError& e) {
      if (options.log)
        *options.log << "gp fit failed (" << e.what()
                     << "); falling back to uniform proposals\n";
      for (int i = 0; i < options.batch_size; ++i) {
        Encoding enc = sample_dirichlet(ones, rng);
        Architecture arch = decode_stochastic(enc, spec, rng);
        proposals.push_back({std::move(enc), std::move(arch)});
      }
    }

    const double y_before = y_star;
    for (const Proposal& prop : proposals) {
      if (builder.exhausted()) break;
      record(prop.encoding, prop.arch);
    }
    dist = update_generating_distribution(
        dist, y_before - y_star >= options.improvement_tol);
  }
  return traj;
}

Encoding optimize_acquisition_mirror(const gp::Model& model,
                                     const Encoding& start, double lr,
                                     int steps) {
  validate_encoding(start);
  if (!(lr > 0.0)) throw InvalidInputError("acquisition mirror: lr must be positive");
  if (steps < 0) throw InvalidInputError("acquisition mirror: negative step count");

  const double incumbent = model.best_transformed_target();
  Encoding best = start;
  double best_ei = model.expected_improvement(start, incumbent);

  Encoding current = start;
  for (int s = 0; s < steps; ++s) {
    const std::vector<double> grad = model.ei_gradient(current, incumbent);
    bool all_zero = true, all_finite = true;
    for (double g : grad) {
      if (g != 0.0) all_zero = false;
      if (!std::isfinite(g)) all_finite = false;
    }
    if (all_zero || !all_finite) break;  // stationary, or abort on bad numerics

    double sum = 0.0;
    Encoding next = current;
    for (int i = 0; i < next.k(); ++i) {
      next.values[i] = std::max(current.values[i] + lr * grad[i], 0.0);
      sum += next.values[i];
    }
    if (!(sum > 0.0)) break;
    for (double& v : next.values) v /= sum;
    current = std::move(next);

    const double ei = model.expected_improvement(current, incumbent);
    if (ei > best_ei) {
      best_ei = ei;
      best = current;
    }
  }
  return best;
}

}  // namespace anasod
