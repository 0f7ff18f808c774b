#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "anasod/errors.hpp"
#include "anasod/harness.hpp"
#include "anasod/parallel.hpp"

namespace anasod {
namespace {

std::string fixed9(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9f", v);
  return buf;
}

double sample_se(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (xs.size() - 1)) / std::sqrt(static_cast<double>(xs.size()));
}

double mean_of(const std::vector<double>& xs) {
  double m = 0.0;
  for (double x : xs) m += x;
  return xs.empty() ? 0.0 : m / xs.size();
}

// Incumbent of the trajectory once `cost` seconds of simulated training
// have been spent; flat extension after the last record.
double incumbent_at_cost(const Trajectory& traj, double cost) {
  double value = traj.records.front().incumbent;
  for (const TrajectoryRecord& rec : traj.records) {
    if (rec.cum_cost_s > cost) break;
    value = rec.incumbent;
  }
  return value;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NotFoundError("cannot write file: " + path);
  out << content;
}

}  // namespace

std::unique_ptr<Oracle> build_oracle(const ExperimentConfig& config,
                                     const CellSpec& spec) {
  if (config.oracle.type == "tabular") {
    auto oracle = std::make_unique<TabularOracle>(
        TabularOracle::load(config.oracle.path, config.oracle.dataset));
    return oracle;
  }
  SyntheticOracleParams params;
  if (!config.oracle.path.empty()) {
    std::ifstream in(config.oracle.path);
    if (!in)
      throw NotFoundError("cannot open synthetic params file: " +
                          config.oracle.path);
    std::stringstream buf;
    buf << in.rdbuf();
    params = SyntheticOracleParams::from_json(buf.str());
  } else {
    Rng rng(config.oracle.calibration_seed);
    params = calibrate_synthetic(spec, config.oracle.target_overall_sd,
                                 config.oracle.target_same_encoding_sd,
                                 config.oracle.target_seed_sd, rng);
  }
  params.cost_scale_s = config.oracle.cost_scale_s;
  return std::make_unique<SyntheticOracle>(spec, params);
}

Summary aggregate(const std::vector<Trajectory>& trajectories,
                  std::optional<double> best_known) {
  if (trajectories.empty())
    throw InvalidInputError("aggregate: no trajectories");
  for (const Trajectory& t : trajectories)
    if (t.records.empty())
      throw InvalidInputError("aggregate: empty trajectory");

  Summary s;
  s.strategy = trajectories.front().strategy;
  s.trials = static_cast<int>(trajectories.size());

  std::size_t min_len = trajectories.front().records.size();
  for (const Trajectory& t : trajectories)
    min_len = std::min(min_len, t.records.size());
  s.budget = static_cast<int>(min_len);

  for (std::size_t step = 0; step < min_len; ++step) {
    std::vector<double> vals;
    vals.reserve(trajectories.size());
    for (const Trajectory& t : trajectories)
      vals.push_back(t.records[step].incumbent);
    s.mean_incumbent_by_step.push_back(mean_of(vals));
    s.se_incumbent_by_step.push_back(sample_se(vals));
  }

  // Cost axis: log-spaced between the latest first-record cost and the
  // latest last-record cost, so every trial is defined on the whole grid.
  double lo = 0.0, hi = 0.0;
  for (const Trajectory& t : trajectories) {
    lo = std::max(lo, t.records.front().cum_cost_s);
    hi = std::max(hi, t.records.back().cum_cost_s);
    s.total_simulated_cost_s += t.records.back().cum_cost_s;
  }
  const int grid_points = 100;
  if (hi > lo && lo > 0.0) {
    const double log_lo = std::log(lo), log_hi = std::log(hi);
    for (int g = 0; g < grid_points; ++g) {
      // Pin the endpoints exactly: exp/log round-off at the top of the grid
      // would otherwise drop trajectories whose final cost equals hi.
      const double c =
          g == 0 ? lo
          : g == grid_points - 1
              ? hi
              : std::exp(log_lo + (log_hi - log_lo) * g / (grid_points - 1));
      std::vector<double> vals;
      vals.reserve(trajectories.size());
      for (const Trajectory& t : trajectories)
        vals.push_back(incumbent_at_cost(t, c));
      s.cost_grid.push_back(c);
      s.mean_incumbent_by_cost.push_back(mean_of(vals));
      s.se_incumbent_by_cost.push_back(sample_se(vals));
    }
  }

  for (const Trajectory& t : trajectories)
    s.final_per_trial.push_back(t.final_incumbent());
  s.final_mean = mean_of(s.final_per_trial);
  s.final_se = sample_se(s.final_per_trial);

  if (best_known) {
    s.best_known_val = *best_known;
    s.mean_regret = s.final_mean - *best_known;
  }
  return s;
}

std::string trajectory_to_csv(const Trajectory& traj, int trial_index) {
  std::string out = "trial,step,encoding,arch_id,seed,val_err,cum_cost_s,incumbent\n";
  for (const TrajectoryRecord& rec : traj.records) {
    out += std::to_string(trial_index);
    out += ',';
    out += std::to_string(rec.step);
    out += ',';
    for (int i = 0; i < rec.encoding.k(); ++i) {
      if (i) out += ';';
      out += fixed9(rec.encoding.values[i]);
    }
    out += ",\"";
    out += rec.arch.id;  // ids contain commas, so the field stays quoted
    out += "\",";
    out += std::to_string(rec.measurement.seed);
    out += ',';
    out += fixed9(rec.measurement.val_err);
    out += ',';
    out += fixed9(rec.cum_cost_s);
    out += ',';
    out += fixed9(rec.incumbent);
    out += '\n';
  }
  return out;
}

std::string Summary::to_json() const {
  nlohmann::ordered_json j;
  j["strategy"] = strategy;
  j["trials"] = trials;
  j["budget"] = budget;
  j["master_seed"] = master_seed;
  j["final"] = {{"per_trial", final_per_trial},
                {"mean", final_mean},
                {"se", final_se}};
  if (best_known_val) {
    j["best_known_val_err"] = *best_known_val;
    j["mean_regret"] = *mean_regret;
  }
  j["total_simulated_cost_s"] = total_simulated_cost_s;
  j["by_step"] = {{"mean_incumbent", mean_incumbent_by_step},
                  {"se_incumbent", se_incumbent_by_step}};
  j["by_cost"] = {{"cost_s", cost_grid},
                  {"mean_incumbent", mean_incumbent_by_cost},
                  {"se_incumbent", se_incumbent_by_cost}};
  return j.dump(2) + "\n";
}

Summary Summary::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
    Summary s;
    s.strategy = j.at("strategy").get<std::string>();
    s.trials = j.at("trials").get<int>();
    s.budget = j.at("budget").get<int>();
    s.master_seed = j.at("master_seed").get<std::uint64_t>();
    s.final_per_trial = j.at("final").at("per_trial").get<std::vector<double>>();
    s.final_mean = j.at("final").at("mean").get<double>();
    s.final_se = j.at("final").at("se").get<double>();
    if (j.contains("best_known_val_err")) {
      s.best_known_val = j["best_known_val_err"].get<double>();
      s.mean_regret = j.at("mean_regret").get<double>();
    }
    s.total_simulated_cost_s = j.at("total_simulated_cost_s").get<double>();
    s.mean_incumbent_by_step =
        j.at("by_step").at("mean_incumbent").get<std::vector<double>>();
    s.se_incumbent_by_step =
        j.at("by_step").at("se_incumbent").get<std::vector<double>>();
    s.cost_grid = j.at("by_cost").at("cost_s").get<std::vector<double>>();
    s.mean_incumbent_by_cost =
        j.at("by_cost").at("mean_incumbent").get<std::vector<double>>();
    s.se_incumbent_by_cost =
        j.at("by_cost").at("se_incumbent").get<std::vector<double>>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("summary json: ") + e.what(), 1);
  }
}

namespace {

Trajectory run_trial(const ExperimentConfig& config, const Oracle& oracle,
                     const CellSpec& spec, int trial_index) {
  SearchBudget budget;
  budget.max_queries = config.run.budget;
  budget.max_cost_s = config.run.max_cost_s;

  Rng rng(derive_seed(config.run.master_seed,
                      static_cast<std::uint64_t>(trial_index),
                      config.strategy.name));

  const std::string& name = config.strategy.name;
  Trajectory traj;
  if (name == "rs" || name == "biased_rs") {
    RandomSearchOptions options;
    options.biased = name == "biased_rs";
    options.beta_max = config.strategy.beta_max;
    traj = run_random_search(oracle, spec, budget, rng, options);
  } else if (name == "ls_encoding" || name == "ls_arch") {
    traj = run_local_search(oracle, spec, budget, rng,
                            name == "ls_encoding"
                                ? LocalSearchMode::EncodingFirst
                                : LocalSearchMode::ArchOnly);
  } else if (name == "bo") {
    BoOptions options;
    options.n_init = config.strategy.n_init;
    options.batch_size = config.strategy.batch_size;
    options.pool_size = config.strategy.pool_size;
    options.beta_max = config.strategy.beta_max;
    // Single trial: let the GP kernels use the threads. Several trials:
    // the outer loop owns them, keep the inner kernels serial. Either way
    // the numbers are identical; only the scheduling differs.
    options.policy = (config.run.exec == "openmp" && config.run.trials == 1)
                         ? ExecPolicy::OpenMP
                         : ExecPolicy::Serial;
    traj = run_bo(oracle, spec, budget, rng, options);
  } else {
    throw ConfigError("config: strategy.name \"" + name + "\" is not known");
  }
  traj.seed = derive_seed(config.run.master_seed,
                          static_cast<std::uint64_t>(trial_index),
                          config.strategy.name);
  return traj;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const CellSpec spec = config.oracle.type == "tabular"
                            ? CellSpec{}  // replaced by the table header below
                            : config.spec.build();
  const std::unique_ptr<Oracle> oracle = build_oracle(config, spec);
  const CellSpec& run_spec =
      config.oracle.type == "tabular" ? oracle->spec() : spec;

  if (config.run.out.empty())
    throw ConfigError("config: run.out (or --out) must name an output directory");
  std::filesystem::create_directories(config.run.out);

  const int trials = config.run.trials;
  std::vector<Trajectory> trajectories(trials);
  std::vector<std::string> errors(trials);
  const ExecPolicy policy = config.run.exec == "openmp" ? ExecPolicy::OpenMP
                                                        : ExecPolicy::Serial;
  parallel_for(trials, policy, [&](std::int64_t i) {
    try {
      trajectories[i] = run_trial(config, *oracle, run_spec,
                                  static_cast<int>(i));
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  ExperimentResult result;
  result.out_dir = config.run.out;

  std::vector<Trajectory> completed;
  nlohmann::ordered_json failures = nlohmann::ordered_json::array();
  for (int i = 0; i < trials; ++i) {
    if (!errors[i].empty()) {
      failures.push_back({{"trial", i}, {"error", errors[i]}});
      continue;
    }
    const std::string path =
        config.run.out + "/trajectory_trial_" + std::to_string(i) + ".csv";
    write_text_file(path, trajectory_to_csv(trajectories[i], i));
    result.trajectory_files.push_back(path);
    completed.push_back(std::move(trajectories[i]));
  }

  if (!failures.empty())
    write_text_file(config.run.out + "/failures.json", failures.dump(2) + "\n");

  if (!completed.empty()) {
    std::optional<double> best;
    try {
      best = oracle->best_known().val_err;
    } catch (const std::exception&) {
      // unbounded or empty oracle; summary simply omits the regret
    }
    result.summary = aggregate(completed, best);
    result.summary.master_seed = config.run.master_seed;
    result.summary_file = config.run.out + "/summary.json";
    write_text_file(result.summary_file, result.summary.to_json());

    if (config.run.plot) {
      result.plot_file = config.run.out + "/convergence.svg";
      write_text_file(result.plot_file, render_convergence_svg(result.summary));
    }
  }

  if (!failures.empty())
    throw NumericalError(std::to_string(failures.size()) + " of " +
                         std::to_string(trials) +
                         " trials failed; see failures.json");
  return result;
}

std::string run_calibration(const ExperimentConfig& config) {
  if (config.oracle.type != "synthetic" || !config.oracle.has_targets)
    throw ConfigError(
        "config: calibrate needs a synthetic oracle with the three target SDs");
  const CellSpec spec = config.spec.build();
  Rng rng(config.oracle.calibration_seed);
  SyntheticOracleParams params = calibrate_synthetic(
      spec, config.oracle.target_overall_sd,
      config.oracle.target_same_encoding_sd, config.oracle.target_seed_sd, rng);
  params.cost_scale_s = config.oracle.cost_scale_s;

  const SyntheticOracle oracle(spec, params);
  Rng check_rng(derive_seed(config.oracle.calibration_seed, 0, "calibration-check"));
  const SdEstimates achieved =
      estimate_oracle_sds(oracle, spec, 200, 5, 3, check_rng);

  nlohmann::ordered_json j = nlohmann::ordered_json::parse(params.to_json());
  j["targets"] = {{"overall_sd", config.oracle.target_overall_sd},
                  {"same_encoding_sd", config.oracle.target_same_encoding_sd},
                  {"seed_sd", config.oracle.target_seed_sd}};
  j["achieved"] = {{"overall_sd", achieved.overall},
                   {"same_encoding_sd", achieved.same_encoding},
                   {"seed_sd", achieved.seed}};
  return j.dump(2) + "\n";
}

}  // namespace anasod
