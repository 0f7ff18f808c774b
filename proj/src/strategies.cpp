#include "anasod/strategies.hpp"

#include <algorithm>
#include <cmath>

#include "anasod/errors.hpp"

namespace anasod {

double Trajectory::final_incumbent() const {
  if (records.empty())
    throw InvalidInputError("trajectory holds no records");
  return records.back().incumbent;
}

void Trajectory::validate() const {
  double best = std::numeric_limits<double>::infinity();
  double cost = 0.0;
  int step = 0;
  for (const TrajectoryRecord& rec : records) {
    if (rec.step != ++step)
      throw InvalidInputError("trajectory steps are not consecutive");
    best = std::min(best, rec.measurement.val_err);
    if (rec.incumbent != best)
      throw InvalidInputError("trajectory incumbent is not the running minimum");
    if (rec.cum_cost_s + 1e-9 < cost)
      throw InvalidInputError("trajectory cost decreased");
    cost = rec.cum_cost_s;
  }
}

void SearchBudget::validate() const {
  if (max_queries < 0) throw InvalidInputError("budget: negative query limit");
  if (max_queries == 0 && !max_cost_s)
    throw InvalidInputError("budget: set a query limit, a cost limit, or both");
  if (max_cost_s && !(*max_cost_s > 0.0))
    throw InvalidInputError("budget: cost limit must be positive");
}

bool SearchBudget::exhausted(int queries_done, double cost_spent) const {
  if (max_queries > 0 && queries_done >= max_queries) return true;
  if (max_cost_s && cost_spent >= *max_cost_s) return true;
  return false;
}

double SearchBudget::fraction_used(int queries_done, double cost_spent) const {
  double frac = 0.0;
  if (max_queries > 0)
    frac = std::max(frac, static_cast<double>(queries_done) / max_queries);
  if (max_cost_s) frac = std::max(frac, cost_spent / *max_cost_s);
  return std::min(frac, 1.0);
}

std::vector<double> dirichlet_params(const GeneratingDistribution& dist, int k) {
  if (k < 1) throw InvalidInputError("dirichlet_params: k must be positive");
  if (!(dist.beta >= 0.0))
    throw InvalidInputError("dirichlet_params: beta must be nonnegative");
  std::vector<double> alpha(k, 1.0);
  if (dist.beta > 0.0) {
    if (dist.best_encoding.k() != k)
      throw InvalidInputError("dirichlet_params: best encoding arity mismatch");
    validate_encoding(dist.best_encoding);
    for (int i = 0; i < k; ++i)
      alpha[i] += k * dist.beta * dist.best_encoding.values[i];
  }
  return alpha;
}

GeneratingDistribution update_generating_distribution(GeneratingDistribution dist,
                                                      bool improved) {
  if (improved) {
    dist.failure_count = 0;
    if (++dist.success_count >= dist.success_threshold) {
      dist.beta *= 0.5;
      if (dist.beta < 1e-6) dist.beta = 0.0;
      dist.success_count = 0;
    }
  } else {
    dist.success_count = 0;
    if (++dist.failure_count >= dist.failure_threshold) {
      dist.beta = dist.beta == 0.0
                      ? std::min(0.25, dist.beta_max)
                      : std::min(dist.beta * 2.0, dist.beta_max);
      dist.failure_count = 0;
    }
  }
  return dist;
}

double annealed_beta(double budget_fraction, double beta_max) {
  return std::clamp(budget_fraction, 0.0, 1.0) * beta_max;
}

namespace detail {

TrajectoryBuilder::TrajectoryBuilder(const Oracle& oracle,
                                     const SearchBudget& budget,
                                     Trajectory& out)
    : oracle_(oracle), budget_(budget), out_(out) {
  budget_.validate();
}

bool TrajectoryBuilder::exhausted() const {
  return budget_.exhausted(steps(), cum_cost_);
}

double TrajectoryBuilder::budget_fraction() const {
  return budget_.fraction_used(steps(), cum_cost_);
}

int TrajectoryBuilder::steps() const {
  return static_cast<int>(out_.records.size());
}

const Measurement& TrajectoryBuilder::query(const Encoding& encoding,
                                            const Architecture& arch,
                                            Rng& rng) {
  TrajectoryRecord rec;
  rec.step = steps() + 1;
  rec.encoding = encoding;
  rec.arch = arch;
  rec.measurement = oracle_.query(arch, oracle_.sample_seed(arch, rng));
  incumbent_ = std::min(incumbent_, rec.measurement.val_err);
  cum_cost_ += rec.measurement.train_cost_s;
  rec.incumbent = incumbent_;
  rec.cum_cost_s = cum_cost_;
  out_.records.push_back(std::move(rec));
  return out_.records.back().measurement;
}

}  // namespace detail

Trajectory run_random_search(const Oracle& oracle, const CellSpec& spec,
                             const SearchBudget& budget, Rng& rng,
                             const RandomSearchOptions& options) {
  spec.validate();
  if (options.biased && !(options.beta_max >= 0.0))
    throw InvalidInputError("random search: beta_max must be nonnegative");

  Trajectory traj;
  traj.strategy = options.biased ? "biased_rs" : "rs";
  detail::TrajectoryBuilder builder(oracle, budget, traj);

  Encoding best_encoding = uniform_encoding(spec.k());
  double best_val = std::numeric_limits<double>::infinity();
  GeneratingDistribution dist;
  dist.beta_max = options.beta_max;
  dist.best_encoding = best_encoding;

  while (!builder.exhausted()) {
    // Anneal toward the strongest bias as the budget runs out; the step
    // index enters through the budget fraction, so t of T and cost-based
    // budgets share one formula.
    const int t = builder.steps() + 1;
    dist.beta = options.biased
                    ? annealed_beta(budget.max_queries > 0
                                        ? static_cast<double>(t) /
                                              budget.max_queries
                                        : builder.budget_fraction(),
                                    options.beta_max)
                    : 0.0;
    dist.best_encoding = best_encoding;
    const Encoding enc =
        sample_dirichlet(dirichlet_params(dist, spec.k()), rng);
    const Architecture arch = decode_stochastic(enc, spec, rng);
    const Measurement& m = builder.query(enc, arch, rng);
    if (m.val_err < best_val) {
      best_val = m.val_err;
      best_encoding = enc;
    }
  }
  return traj;
}

}  // namespace anasod
