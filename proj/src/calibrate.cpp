#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "anasod/errors.hpp"
#include "anasod/oracle.hpp"

namespace anasod {
namespace {

// Protocol sizes: 200 encodings x 5 architectures x 3 seeds.
constexpr int kEncodings = 200;
constexpr int kArchsPerEncoding = 5;
constexpr int kSeedsPerArch = 3;

// Median of the sample SD of n iid normals, as a multiple of sigma:
// sqrt(median(chi2_{n-1}) / (n-1)).
constexpr double kMedianSdFactor3 = 0.83255461;  // n = 3
constexpr double kMedianSdFactor5 = 0.91605753;  // n = 5

constexpr double kRelTol = 0.10;  // internal match tolerance per statistic
constexpr int kMaxRounds = 25;

double clamp_ratio(double r) { return std::clamp(r, 0.5, 2.0); }

double rel_err(double est, double target) {
  if (target == 0.0) return est == 0.0 ? 0.0 : 1.0;
  return std::abs(est - target) / target;
}

struct RawLandscape {
  std::vector<double> weights;             // unscaled
  std::vector<std::vector<double>> pairs;  // unscaled, symmetric
  double mean = 0.0;                       // moments of w.p + p'Qp under the
  double sd = 1.0;                         // rounded uniform-Dirichlet draw
  double min = 0.0;                        // extrema over the encoding grid
  double max = 0.0;
  // Shape diagnostics over the grid (only filled when it is enumerable):
  double argmin_log_multiplicity = 1e9;  // log #arrangements of the best counts
  int basin_size = 1e9;  // grid points near the minimum
  bool enumerable = false;
};

double log_multiplicity(const IntegerEncoding& g) {
  double l = std::lgamma(g.total() + 1.0);
  for (int c : g.counts) l -= std::lgamma(c + 1.0);
  return l;
}

RawLandscape draw_raw_landscape(const CellSpec& spec, Rng& rng) {
  const int k = spec.k();
  RawLandscape raw;
  raw.weights.resize(k);
  for (double& w : raw.weights) w = rng.normal();
  raw.pairs.assign(k, std::vector<double>(k, 0.0));
  for (int i = 0; i < k; ++i)
    for (int j = i; j < k; ++j)
      raw.pairs[i][j] = raw.pairs[j][i] = rng.normal();

  auto eval = [&](const Encoding& p) {
    double f = 0.0;
    for (int i = 0; i < k; ++i) {
      f += raw.weights[i] * p.values[i];
      for (int j = 0; j < k; ++j)
        f += p.values[i] * raw.pairs[i][j] * p.values[j];
    }
    return f;
  };

  const std::vector<double> ones(k, 1.0);
  const int samples = 4000;
  double sum = 0.0, sumsq = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Encoding draw = sample_dirichlet(ones, rng);
    const Encoding p = normalize(bomze_round(unnormalize(draw, spec.n())));
    const double f = eval(p);
    sum += f;
    sumsq += f * f;
  }
  raw.mean = sum / samples;
  const double var = std::max(sumsq / samples - raw.mean * raw.mean, 1e-12);
  raw.sd = std::sqrt(var);

  // Range over the achievable encodings, exact when the grid is enumerable.
  // Every architecture's normalized encoding lies on this grid, so these
  // extrema bound f for every possible query.
  raw.min = std::numeric_limits<double>::infinity();
  raw.max = -raw.min;
  try {
    raw.enumerable = count_encodings(spec.n(), k) <= 200000;
  } catch (const CapacityError&) {
    raw.enumerable = false;
  }
  if (raw.enumerable) {
    std::vector<IntegerEncoding> grid = enumerate_grid(spec.n(), k);
    std::vector<double> vals(grid.size());
    std::size_t argmin = 0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      vals[i] = eval(normalize(grid[i]));
      if (vals[i] < raw.min) {
        raw.min = vals[i];
        argmin = i;
      }
      raw.max = std::max(raw.max, vals[i]);
    }
    raw.argmin_log_multiplicity = log_multiplicity(grid[argmin]);
    raw.basin_size = 0;
    for (double v : vals)
      if (v <= raw.min + 0.32 * raw.sd) ++raw.basin_size;
  } else {
    for (int i = 0; i < k; ++i) {
      Encoding corner{std::vector<double>(k, 0.0)};
      corner.values[i] = 1.0;
      const double f = eval(corner);
      raw.min = std::min(raw.min, f);
      raw.max = std::max(raw.max, f);
    }
    for (int s = 0; s < 50000; ++s) {
      const Encoding draw = sample_dirichlet(ones, rng);
      const double f = eval(normalize(bomze_round(unnormalize(draw, spec.n()))));
      raw.min = std::min(raw.min, f);
      raw.max = std::max(raw.max, f);
    }
  }
  return raw;
}

// Clamp headroom: the landscape extrema sit this far inside [0, 100] so
// that search minima (minimum over thousands of noise draws) stay strictly
// positive and the clamp never flattens the optimum into a plateau.
double clamp_margin(double sigma_wiring, double sigma_seed) {
  return std::max(2.0, 6.0 * std::hypot(sigma_wiring, sigma_seed));
}

SyntheticOracleParams assemble(const RawLandscape& raw, double scale,
                               double sigma_wiring, double sigma_seed) {
  const double margin = clamp_margin(sigma_wiring, sigma_seed);
  // If the scaled range cannot fit between the margins, trade the overall-SD
  // match away rather than letting the clamp distort the landscape; the
  // calibration loop reports the shortfall through its achieved estimates.
  const double span = raw.max - raw.min;
  if (span > 0.0) scale = std::min(scale, (100.0 - 2.0 * margin) / span);

  SyntheticOracleParams p;
  p.op_weights.resize(raw.weights.size());
  for (std::size_t i = 0; i < raw.weights.size(); ++i)
    p.op_weights[i] = scale * raw.weights[i];
  p.pairwise.assign(raw.weights.size(),
                    std::vector<double>(raw.weights.size(), 0.0));
  for (std::size_t i = 0; i < raw.weights.size(); ++i)
    for (std::size_t j = 0; j < raw.weights.size(); ++j)
      p.pairwise[i][j] = scale * raw.pairs[i][j];
  p.base_err = margin - scale * raw.min;
  p.sigma_wiring = sigma_wiring;
  p.sigma_seed = sigma_seed;
  return p;
}

}  // namespace

SyntheticOracleParams calibrate_synthetic(const CellSpec& spec,
                                          double target_overall_sd,
                                          double target_same_encoding_sd,
                                          double target_seed_sd, Rng& rng) {
  spec.validate();
  if (!(target_overall_sd > 0.0) || !(target_same_encoding_sd > 0.0) ||
      !(target_seed_sd >= 0.0))
    throw InvalidInputError("calibrate: targets must be positive (seed may be 0)");
  if (target_overall_sd < target_same_encoding_sd ||
      target_same_encoding_sd < target_seed_sd)
    throw InvalidInputError(
        "calibrate: expected overall >= same-encoding >= seed targets");

  // Invert the protocol statistics analytically for a starting point, then
  // let Monte Carlo rounds absorb the clamp, rounding and estimator biases.
  double sigma_seed = target_seed_sd / kMedianSdFactor3;
  double inner = std::pow(target_same_encoding_sd / kMedianSdFactor5, 2.0);
  if (inner - sigma_seed * sigma_seed / 3.0 <= 0.0)
    throw InvalidInputError(
        "calibrate: seed target too large for the same-encoding target");
  double sigma_wiring = std::sqrt(inner - sigma_seed * sigma_seed / 3.0);
  double landscape_var = target_overall_sd * target_overall_sd -
                         sigma_wiring * sigma_wiring -
                         sigma_seed * sigma_seed / 3.0;
  if (landscape_var <= 0.0)
    throw InvalidInputError(
        "calibrate: same-encoding/seed targets exceed the overall target");

  // A random quadratic can be degenerate for comparative search experiments:
  // its minimum may sit on a barely realizable counts vector (one or six
  // architectures share it, so reaching the optimum is a lottery ticket), or
  // its basin may be a single grid point. Re-draw until the landscape has a
  // well-realized optimum and a basin wider than one encoding; keep the
  // best-scoring draw as a fallback so tiny grids still calibrate.
  const double margin0 = clamp_margin(sigma_wiring, sigma_seed);
  const double sd_want = std::sqrt(landscape_var);
  std::uint64_t grid_size = 0;
  try {
    grid_size = count_encodings(spec.n(), spec.k());
  } catch (const CapacityError&) {
    grid_size = std::numeric_limits<std::uint64_t>::max();
  }
  const double need_log_mult =
      std::log(std::max(8.0, spec.n() * spec.n() / 3.0));
  const int need_basin = static_cast<int>(
      std::min<std::uint64_t>(5, std::max<std::uint64_t>(2, grid_size / 30)));

  auto shape_score = [&](const RawLandscape& c) {
    const bool fits =
        1.35 * sd_want / c.sd * (c.max - c.min) <= 100.0 - 2.0 * margin0;
    int score = 0;
    if (fits) score += 8;  // dominant: an unclamped optimum is non-negotiable
    if (c.argmin_log_multiplicity >= need_log_mult - 1e-9) score += 1;
    if (c.basin_size >= need_basin) score += 1;
    return score;
  };

  RawLandscape raw = draw_raw_landscape(spec, rng);
  int best_score = shape_score(raw);
  for (int attempt = 0; attempt < 63 && best_score < 10; ++attempt) {
    RawLandscape next = draw_raw_landscape(spec, rng);
    const int score = shape_score(next);
    if (score > best_score ||
        (score == best_score &&
         (next.max - next.min) / next.sd < (raw.max - raw.min) / raw.sd)) {
      raw = std::move(next);
      best_score = score;
    }
  }
  double scale = sd_want / raw.sd;

  SdEstimates est;
  for (int round = 0; round < kMaxRounds; ++round) {
    const SyntheticOracleParams params =
        assemble(raw, scale, sigma_wiring, sigma_seed);
    const SyntheticOracle oracle(spec, params);
    est = estimate_oracle_sds(oracle, spec, kEncodings, kArchsPerEncoding,
                              kSeedsPerArch, rng);

    if (rel_err(est.overall, target_overall_sd) <= kRelTol &&
        rel_err(est.same_encoding, target_same_encoding_sd) <= kRelTol &&
        rel_err(est.seed, target_seed_sd) <= kRelTol)
      return params;

    if (target_seed_sd > 0.0 && est.seed > 0.0)
      sigma_seed *= clamp_ratio(target_seed_sd / est.seed);

    if (est.same_encoding > 0.0) {
      const double factor = clamp_ratio(target_same_encoding_sd / est.same_encoding);
      inner = (sigma_wiring * sigma_wiring + sigma_seed * sigma_seed / 3.0) *
              factor * factor;
      sigma_wiring =
          std::sqrt(std::max(inner - sigma_seed * sigma_seed / 3.0, 1e-12));
    }

    if (est.overall > 0.0) {
      const double target_var = std::max(
          target_overall_sd * target_overall_sd - sigma_wiring * sigma_wiring -
              sigma_seed * sigma_seed / 3.0,
          1e-12);
      const double implied_var =
          std::max(est.overall * est.overall - sigma_wiring * sigma_wiring -
                       sigma_seed * sigma_seed / 3.0,
                   1e-12);
      scale *= clamp_ratio(std::sqrt(target_var / implied_var));
    }
  }

  std::ostringstream msg;
  msg << "calibrate: no parameter set matched the targets after " << kMaxRounds
      << " rounds; achieved overall=" << est.overall
      << " same_encoding=" << est.same_encoding << " seed=" << est.seed
      << " for targets " << target_overall_sd << "/" << target_same_encoding_sd
      << "/" << target_seed_sd;
  throw CalibrationError(msg.str());
}

}  // namespace anasod
