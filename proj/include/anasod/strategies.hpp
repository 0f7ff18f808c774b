#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "anasod/gp.hpp"
#include "anasod/oracle.hpp"
#include "anasod/parallel.hpp"

namespace anasod {

struct TrajectoryRecord {
  int step = 0;  // 1-based query index
  Encoding encoding;
  Architecture arch;
  Measurement measurement;
  double incumbent = 0.0;  // best val_err among steps 1..step
  double cum_cost_s = 0.0;
};

struct Trajectory {
  std::string strategy;
  std::uint64_t seed = 0;
  std::vector<TrajectoryRecord> records;

  double final_incumbent() const;
  // Checks the per-record invariants (monotone incumbent, cumulative cost).
  void validate() const;
};

struct SearchBudget {
  int max_queries = 0;  // 0 = no query limit
  std::optional<double> max_cost_s;

  void validate() const;  // at least one limit must be set
  bool exhausted(int queries_done, double cost_spent) const;
  // Fraction of the tighter budget already used before the next query.
  double fraction_used(int queries_done, double cost_spent) const;
};

// State of the Dirichlet proposal Dir(k b p* + 1) shared by biased random
// search and the trust-region loop.
struct GeneratingDistribution {
  double beta = 0.0;
  double beta_max = 2.0;
  Encoding best_encoding;  // p*
  int success_count = 0;
  int failure_count = 0;
  int success_threshold = 3;
  int failure_threshold = 3;
};

// Concentration vector k * beta * p* + 1.
std::vector<double> dirichlet_params(const GeneratingDistribution& dist, int k);

// Trust-region update: `success_threshold` consecutive improvements halve
// beta (snapping to 0 below 1e-6); `failure_threshold` consecutive failures
// double it back toward beta_max, re-seeding 0.25 from an exact 0. Exactly
// one counter is reset per call.
GeneratingDistribution update_generating_distribution(GeneratingDistribution dist,
                                                      bool improved);

// Annealing schedule for biased random search: beta at query t of T.
double annealed_beta(double budget_fraction, double beta_max);

struct RandomSearchOptions {
  bool biased = false;
  double beta_max = 2.0;
};

Trajectory run_random_search(const Oracle& oracle, const CellSpec& spec,
                             const SearchBudget& budget, Rng& rng,
                             const RandomSearchOptions& options = {});

enum class LocalSearchMode { EncodingFirst, ArchOnly };

Trajectory run_local_search(const Oracle& oracle, const CellSpec& spec,
                            const SearchBudget& budget, Rng& rng,
                            LocalSearchMode mode);

struct BoOptions {
  int n_init = 10;
  int batch_size = 4;
  int pool_size = 100000;
  double beta_max = 2.0;
  int success_threshold = 3;
  int failure_threshold = 3;
  double improvement_tol = 1e-6;
  gp::FitOptions fit;
  ExecPolicy policy = default_policy();
  std::ostream* log = nullptr;
  // Test seam; replaces gp::Model::fit when set.
  std::function<gp::Model(const std::vector<Encoding>&,
                          const std::vector<double>&, const gp::FitOptions&)>
      fit_override;
};

Trajectory run_bo(const Oracle& oracle, const CellSpec& spec,
                  const SearchBudget& budget, Rng& rng,
                  const BoOptions& options = {});

// Projected mirror ascent of expected improvement on the simplex. Returns
// the best iterate seen; with a zero gradient at the start, the start.
Encoding optimize_acquisition_mirror(const gp::Model& model,
                                     const Encoding& start, double lr,
                                     int steps);

namespace detail {

// Shared per-trial bookkeeping for appending records.
class TrajectoryBuilder {
 public:
  TrajectoryBuilder(const Oracle& oracle, const SearchBudget& budget,
                    Trajectory& out);
  bool exhausted() const;
  double budget_fraction() const;
  // Runs one oracle query and appends the record. Returns the measurement.
  const Measurement& query(const Encoding& encoding, const Architecture& arch,
                           Rng& rng);
  double incumbent() const { return incumbent_; }
  int steps() const;

 private:
  const Oracle& oracle_;
  const SearchBudget& budget_;
  Trajectory& out_;
  double incumbent_ = std::numeric_limits<double>::infinity();
  double cum_cost_ = 0.0;
};

using EncodingCache = std::map<std::vector<int>, double>;
using ArchCache = std::map<std::string, double>;

// Best-improvement hill climb over the encoding grid. New encodings cost
// one query (a single exact-decoded architecture); revisits hit the cache.
// Stops early when the budget runs out and reports the best point reached.
std::pair<IntegerEncoding, double> climb_encoding(const CellSpec& spec,
                                                  const IntegerEncoding& start,
                                                  TrajectoryBuilder& builder,
                                                  Rng& rng,
                                                  EncodingCache& cache);

// Same climb over edit-distance-1 architecture neighbors.
std::pair<Architecture, double> climb_arch(const CellSpec& spec,
                                           const Architecture& start,
                                           TrajectoryBuilder& builder, Rng& rng,
                                           ArchCache& cache);

}  // namespace detail
}  // namespace anasod
