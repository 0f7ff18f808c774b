#include "anasod/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <nlohmann/json.hpp>

#include "anasod/errors.hpp"

namespace anasod {
namespace {

// Stream salts keep the wiring, seed and cost draws of one architecture
// independent of each other.
constexpr std::uint64_t kWiringSalt = 0x77697269u;
constexpr std::uint64_t kSeedSalt = 0x73656564u;
constexpr std::uint64_t kCostSalt = 0x636f7374u;

double clamp_err(double v) { return std::clamp(v, 0.0, 100.0); }

}  // namespace

std::string SyntheticOracleParams::to_json() const {
  nlohmann::ordered_json j;
  j["op_weights"] = op_weights;
  j["pairwise"] = pairwise;
  j["base_err"] = base_err;
  j["sigma_wiring"] = sigma_wiring;
  j["sigma_seed"] = sigma_seed;
  j["cost_scale_s"] = cost_scale_s;
  return j.dump(2);
}

SyntheticOracleParams SyntheticOracleParams::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("synthetic params: ") + e.what(), 1);
  }
  SyntheticOracleParams p;
  try {
    p.op_weights = j.at("op_weights").get<std::vector<double>>();
    p.pairwise = j.at("pairwise").get<std::vector<std::vector<double>>>();
    p.base_err = j.at("base_err").get<double>();
    p.sigma_wiring = j.at("sigma_wiring").get<double>();
    p.sigma_seed = j.at("sigma_seed").get<double>();
    p.cost_scale_s = j.value("cost_scale_s", 1000.0);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("synthetic params: ") + e.what(), 1);
  }
  return p;
}

SyntheticOracle::SyntheticOracle(CellSpec spec, SyntheticOracleParams params)
    : spec_(std::move(spec)), params_(std::move(params)) {
  spec_.validate();
  const std::size_t k = static_cast<std::size_t>(spec_.k());
  if (params_.op_weights.size() != k)
    throw InvalidConfigurationError(
        "synthetic params: op_weights arity differs from spec");
  if (params_.pairwise.size() != k)
    throw InvalidConfigurationError("synthetic params: pairwise must be k x k");
  for (std::size_t i = 0; i < k; ++i) {
    if (params_.pairwise[i].size() != k)
      throw InvalidConfigurationError("synthetic params: pairwise must be k x k");
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(params_.pairwise[i][j] - params_.pairwise[j][i]) > 1e-12)
        throw InvalidConfigurationError(
            "synthetic params: pairwise must be symmetric");
  }
  if (!(params_.sigma_wiring >= 0.0) || !(params_.sigma_seed >= 0.0))
    throw InvalidConfigurationError(
        "synthetic params: sigmas must be nonnegative");
  if (!(params_.cost_scale_s > 0.0))
    throw InvalidConfigurationError(
        "synthetic params: cost scale must be positive");
}

double SyntheticOracle::landscape(const Encoding& p) const {
  if (p.k() != spec_.k())
    throw InvalidInputError("landscape: encoding arity differs from spec");
  double f = params_.base_err;
  for (int i = 0; i < p.k(); ++i) {
    f += params_.op_weights[i] * p.values[i];
    for (int j = 0; j < p.k(); ++j)
      f += p.values[i] * params_.pairwise[i][j] * p.values[j];
  }
  return f;
}

Measurement SyntheticOracle::query(const Architecture& arch, int seed) const {
  const Encoding p = normalize(encode(arch, spec_));
  const std::uint64_t h = fnv1a64(arch.id);
  const double wiring =
      params_.sigma_wiring * counter_normal(mix64(h ^ kWiringSalt), 0);
  const double noise =
      params_.sigma_seed *
      counter_normal(mix64(h ^ kSeedSalt),
                     static_cast<std::uint64_t>(static_cast<std::int64_t>(seed)));
  Measurement m;
  m.val_err = clamp_err(landscape(p) + wiring + noise);
  m.train_cost_s =
      params_.cost_scale_s * (0.5 + counter_unit(mix64(h ^ kCostSalt), 0));
  m.seed = seed;
  return m;
}

int SyntheticOracle::sample_seed(const Architecture&, Rng& rng) const {
  return rng.uniform_int(1000000000);
}

Measurement SyntheticOracle::best_known() const {
  if (!spec_.fixed_topology())
    throw UnsupportedError(
        "best_known: exhaustive enumeration needs a fixed topology");
  double total = 1;
  for (int b = 0; b < spec_.n(); ++b) {
    total *= spec_.k();
    if (total > 2e6)
      throw CapacityError("best_known: op space too large to enumerate");
  }

  // Seed noise has zero mean, so the seed-averaged error of an architecture
  // is its landscape value plus the frozen wiring offset (exact as long as
  // values stay inside the clamp range).
  Measurement best;
  best.val_err = std::numeric_limits<double>::infinity();
  std::vector<int> ops(spec_.n(), 0);
  for (;;) {
    const Architecture arch = Architecture::make(ops, {}, spec_);
    const Encoding p = normalize(encode(arch, spec_));
    const std::uint64_t h = fnv1a64(arch.id);
    const double wiring =
        params_.sigma_wiring * counter_normal(mix64(h ^ kWiringSalt), 0);
    const double val = clamp_err(landscape(p) + wiring);
    if (val < best.val_err) {
      best.val_err = val;
      best.train_cost_s =
          params_.cost_scale_s * (0.5 + counter_unit(mix64(h ^ kCostSalt), 0));
    }
    int b = spec_.n() - 1;
    while (b >= 0 && ops[b] == spec_.k() - 1) ops[b--] = 0;
    if (b < 0) break;
    ++ops[b];
  }
  return best;
}

namespace {

double sample_sd(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / (xs.size() - 1));
}

double median(std::vector<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const std::size_t mid = xs.size() / 2;
  if (xs.size() % 2 == 1) return xs[mid];
  return 0.5 * (xs[mid - 1] + xs[mid]);
}

}  // namespace

SdEstimates estimate_oracle_sds(const Oracle& oracle, const CellSpec& spec,
                                int num_encodings, int archs_per_encoding,
                                int seeds_per_arch, Rng& rng) {
  if (num_encodings < 2 || archs_per_encoding < 2 || seeds_per_arch < 1)
    throw InvalidInputError("estimate_oracle_sds: protocol sizes too small");
  const std::vector<double> ones(spec.k(), 1.0);

  std::vector<double> all_means, same_enc_sds, seed_sds;
  for (int e = 0; e < num_encodings; ++e) {
    const Encoding draw = sample_dirichlet(ones, rng);
    const IntegerEncoding grid = bomze_round(unnormalize(draw, spec.n()));
    std::vector<double> enc_means;
    std::set<std::string> seen_ids;
    for (int a = 0; a < archs_per_encoding; ++a) {
      Architecture arch = decode_exact(grid, spec, rng);
      for (int retry = 0; retry < 20 && seen_ids.count(arch.id); ++retry)
        arch = decode_exact(grid, spec, rng);
      seen_ids.insert(arch.id);

      std::vector<int> seeds;
      while (static_cast<int>(seeds.size()) < seeds_per_arch) {
        int s = oracle.sample_seed(arch, rng);
        for (int retry = 0;
             retry < 50 && std::find(seeds.begin(), seeds.end(), s) != seeds.end();
             ++retry)
          s = oracle.sample_seed(arch, rng);
        seeds.push_back(s);
      }
      std::vector<double> vals;
      vals.reserve(seeds.size());
      for (int s : seeds) vals.push_back(oracle.query(arch, s).val_err);
      double mean = 0.0;
      for (double v : vals) mean += v;
      mean /= vals.size();
      enc_means.push_back(mean);
      all_means.push_back(mean);
      if (seeds_per_arch >= 2) seed_sds.push_back(sample_sd(vals));
    }
    same_enc_sds.push_back(sample_sd(enc_means));
  }

  SdEstimates est;
  est.overall = sample_sd(all_means);
  est.same_encoding = median(std::move(same_enc_sds));
  est.seed = median(std::move(seed_sds));
  return est;
}

}  // namespace anasod
