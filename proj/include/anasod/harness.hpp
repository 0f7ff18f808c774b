#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "anasod/oracle.hpp"
#include "anasod/strategies.hpp"

namespace anasod {

struct SpecConfig {
  std::string preset;  // "nasbench201" fills every other field
  int n = 0;
  int k = 0;
  std::vector<std::string> op_names;  // defaults to op0..op{k-1}
  std::string topology = "fixed";
  int nodes = 0;             // variable topologies
  std::vector<Edge> edges;   // fixed topologies; defaults to a chain

  CellSpec build() const;
};

struct OracleConfig {
  std::string type = "synthetic";  // synthetic | tabular
  std::string path;                // tabular export, or synthetic params json
  std::string dataset;             // tabular only; "" = first declared
  bool has_targets = false;
  double target_overall_sd = 0.0;
  double target_same_encoding_sd = 0.0;
  double target_seed_sd = 0.0;
  std::uint64_t calibration_seed = 1;
  double cost_scale_s = 1000.0;
};

struct StrategyConfig {
  std::string name = "rs";  // rs | biased_rs | ls_encoding | ls_arch | bo
  double beta_max = 2.0;
  int n_init = 10;
  int batch_size = 4;
  int pool_size = 100000;
};

struct RunConfig {
  int budget = 0;  // query limit; 0 = unset
  std::optional<double> max_cost_s;
  int trials = 1;
  std::uint64_t master_seed = 0;
  std::string out;
  bool plot = false;
  std::string exec = "openmp";  // trial dispatch: openmp | serial
};

struct ExperimentConfig {
  StrategyConfig strategy;
  OracleConfig oracle;
  SpecConfig spec;
  RunConfig run;

  static ExperimentConfig from_file(const std::string& path);
  void validate() const;  // throws ConfigError naming section.key
};

// Builds the oracle the config describes; synthetic targets are calibrated
// here (deterministically, from oracle.calibration_seed).
std::unique_ptr<Oracle> build_oracle(const ExperimentConfig& config,
                                     const CellSpec& spec);

struct Summary {
  std::string strategy;
  int trials = 0;
  int budget = 0;
  std::uint64_t master_seed = 0;
  // Query axis: index t holds stats of the incumbent after query t+1.
  std::vector<double> mean_incumbent_by_step;
  std::vector<double> se_incumbent_by_step;
  // Simulated-cost axis (log-spaced grid over the common cost range).
  std::vector<double> cost_grid;
  std::vector<double> mean_incumbent_by_cost;
  std::vector<double> se_incumbent_by_cost;
  std::vector<double> final_per_trial;
  double final_mean = 0.0;
  double final_se = 0.0;
  std::optional<double> best_known_val;
  std::optional<double> mean_regret;
  double total_simulated_cost_s = 0.0;

  std::string to_json() const;
  static Summary from_json(const std::string& text);
};

// Mean/SE aggregation across trials on both axes. SE uses the n-1 sample
// SD over sqrt(trials); a single trial reports SE 0.
Summary aggregate(const std::vector<Trajectory>& trajectories,
                  std::optional<double> best_known);

std::string trajectory_to_csv(const Trajectory& traj, int trial_index);

struct ExperimentResult {
  Summary summary;
  std::string out_dir;
  std::vector<std::string> trajectory_files;
  std::string summary_file;
  std::string plot_file;  // empty unless run.plot
};

// Runs all trials, writes trajectory_trial_<i>.csv, summary.json and
// optionally convergence.svg under run.out. Trial failures are collected
// into failures.json and rethrown after the surviving outputs are written.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Calibration report for `calibrate`: fitted params plus achieved spreads.
std::string run_calibration(const ExperimentConfig& config);

// Incumbent-vs-queries and incumbent-vs-cost panels with mean and +-SE band.
std::string render_convergence_svg(const Summary& summary);

}  // namespace anasod
