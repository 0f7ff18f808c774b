#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "anasod/cell_spec.hpp"
#include "anasod/encoding.hpp"
#include "anasod/rng.hpp"

namespace anasod {

struct Measurement {
  double val_err = 0.0;  // percent
  std::optional<double> test_err;
  double train_cost_s = 0.0;
  int seed = 0;
};

// Benchmark backend. query() must be a pure function of (arch.id, seed).
class Oracle {
 public:
  virtual ~Oracle() = default;
  virtual const CellSpec& spec() const = 0;
  virtual Measurement query(const Architecture& arch, int seed) const = 0;
  // Draws a seed that query() accepts for this architecture.
  virtual int sample_seed(const Architecture& arch, Rng& rng) const = 0;
  // Exhaustive minimum of the seed-averaged validation error.
  virtual Measurement best_known() const = 0;
  virtual std::string name() const = 0;
};

struct SyntheticOracleParams {
  std::vector<double> op_weights;               // k
  std::vector<std::vector<double>> pairwise;    // k x k, symmetric
  double base_err = 40.0;
  double sigma_wiring = 0.0;  // per-architecture spread within an encoding
  double sigma_seed = 0.0;    // per-seed spread within an architecture
  double cost_scale_s = 1000.0;

  std::string to_json() const;
  static SyntheticOracleParams from_json(const std::string& text);
};

// Closed-form landscape over the encoding simplex plus frozen hash-keyed
// per-architecture and per-seed noise. Every query is reproducible from
// (arch.id, seed) alone.
class SyntheticOracle : public Oracle {
 public:
  SyntheticOracle(CellSpec spec, SyntheticOracleParams params);

  const CellSpec& spec() const override { return spec_; }
  Measurement query(const Architecture& arch, int seed) const override;
  int sample_seed(const Architecture& arch, Rng& rng) const override;
  Measurement best_known() const override;
  std::string name() const override { return "synthetic"; }

  // base + w.p + p'Pp before noise and clamping.
  double landscape(const Encoding& p) const;
  const SyntheticOracleParams& params() const { return params_; }

 private:
  CellSpec spec_;
  SyntheticOracleParams params_;
};

struct TabularRecord {
  Architecture arch;
  std::map<int, double> val_err_by_seed;
  std::optional<double> test_err;
  double train_time_s = 0.0;
};

// Lookup oracle over an exported benchmark file (one JSON object per line,
// format tag "anasod-tab-v1").
class TabularOracle : public Oracle {
 public:
  // dataset == "" selects the first dataset declared in the header.
  static TabularOracle load(const std::string& path,
                            const std::string& dataset = "");

  const CellSpec& spec() const override { return spec_; }
  Measurement query(const Architecture& arch, int seed) const override;
  int sample_seed(const Architecture& arch, Rng& rng) const override;
  Measurement best_known() const override;
  std::string name() const override { return "tabular:" + dataset_; }

  std::size_t size() const { return records_.size(); }
  const std::string& dataset() const { return dataset_; }

 private:
  TabularOracle() = default;
  CellSpec spec_;
  std::string dataset_;
  std::unordered_map<std::string, TabularRecord> records_;
};

TabularOracle load_tabular(const std::string& path,
                           const std::string& dataset = "");

// Spread statistics under the sampling protocol used for calibration:
// num_encodings uniform Dirichlet draws, rounded to the grid; per encoding,
// archs_per_encoding exact decodes; per architecture, seeds_per_arch seeds.
struct SdEstimates {
  double overall = 0.0;        // sample SD of all per-arch seed means
  double same_encoding = 0.0;  // median over encodings of the per-arch-mean SD
  double seed = 0.0;           // median over (enc, arch) of the per-seed SD
};

SdEstimates estimate_oracle_sds(const Oracle& oracle, const CellSpec& spec,
                                int num_encodings, int archs_per_encoding,
                                int seeds_per_arch, Rng& rng);

// Fits synthetic-oracle parameters whose re-estimated spreads match the
// targets. Throws CalibrationError (with achieved values) when it cannot.
SyntheticOracleParams calibrate_synthetic(const CellSpec& spec,
                                          double target_overall_sd,
                                          double target_same_encoding_sd,
                                          double target_seed_sd, Rng& rng);

}  // namespace anasod
