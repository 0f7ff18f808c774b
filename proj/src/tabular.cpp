#include <algorithm>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

#include "anasod/errors.hpp"
#include "anasod/oracle.hpp"

namespace anasod {
namespace {

using nlohmann::json;

json parse_line(const std::string& line, int line_no) {
  try {
    return json::parse(line);
  } catch (const json::exception& e) {
    throw ParseError(std::string("tabular file: ") + e.what(), line_no);
  }
}

// json::at with the error converted to a ParseError carrying the line.
const json& field(const json& j, const char* key, int line_no) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null())
    throw ParseError(std::string("tabular file: missing key \"") + key + "\"",
                     line_no);
  return *it;
}

CellSpec spec_from_header(const json& h) {
  CellSpec spec;
  spec.num_blocks = field(h, "N", 1).get<int>();
  spec.op_names = field(h, "op_names", 1).get<std::vector<std::string>>();
  if (static_cast<int>(spec.op_names.size()) != field(h, "k", 1).get<int>())
    throw ParseError("tabular file: k disagrees with op_names length", 1);

  const std::string topology = field(h, "topology", 1).get<std::string>();
  if (topology == "fixed") {
    FixedDag dag;
    if (h.contains("edges") && !h["edges"].is_null()) {
      for (const auto& e : h["edges"])
        dag.edges.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
    } else if (spec.num_blocks == 6) {
      dag.edges = std::get<FixedDag>(CellSpec::fixed_complete(4, 1).topology).edges;
    } else {
      for (int i = 0; i < spec.num_blocks; ++i) dag.edges.push_back({i, i + 1});
    }
    spec.topology = std::move(dag);
  } else if (topology == "variable") {
    VariableWiring var;
    var.num_nodes = field(h, "nodes", 1).get<int>();
    spec.topology = var;
  } else {
    throw ParseError("tabular file: topology must be \"fixed\" or \"variable\"", 1);
  }
  try {
    spec.validate();
  } catch (const std::exception& e) {
    throw ParseError(std::string("tabular file: ") + e.what(), 1);
  }
  return spec;
}

}  // namespace

TabularOracle TabularOracle::load(const std::string& path,
                                  const std::string& dataset) {
  std::ifstream in(path);
  if (!in) throw NotFoundError("cannot open tabular file: " + path);

  std::string line;
  int line_no = 0;

  // Header line.
  do {
    if (!std::getline(in, line))
      throw ParseError("tabular file: missing header line", 1);
    ++line_no;
  } while (line.empty());
  const json header = parse_line(line, line_no);
  if (field(header, "format", line_no).get<std::string>() != "anasod-tab-v1")
    throw ParseError("tabular file: unknown format tag", line_no);
  const auto datasets =
      field(header, "datasets", line_no).get<std::vector<std::string>>();
  if (datasets.empty())
    throw ParseError("tabular file: header declares no datasets", line_no);

  TabularOracle oracle;
  oracle.spec_ = spec_from_header(header);
  oracle.dataset_ = dataset.empty() ? datasets.front() : dataset;
  if (std::find(datasets.begin(), datasets.end(), oracle.dataset_) ==
      datasets.end())
    throw NotFoundError("dataset \"" + oracle.dataset_ +
                        "\" not declared in tabular file");

  const CellSpec& spec = oracle.spec_;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const json j = parse_line(line, line_no);

    TabularRecord rec;
    const auto ops = field(j, "ops", line_no).get<std::vector<int>>();
    std::vector<Edge> wiring;
    if (j.contains("wiring") && !j["wiring"].is_null()) {
      for (const auto& e : j["wiring"])
        wiring.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
      if (spec.fixed_topology() &&
          wiring != std::get<FixedDag>(spec.topology).edges)
        throw ParseError("tabular file: record wiring differs from the fixed topology",
                         line_no);
    }
    try {
      rec.arch = Architecture::make(ops, std::move(wiring), spec);
    } catch (const std::exception& e) {
      throw ParseError(std::string("tabular file: ") + e.what(), line_no);
    }
    const std::string id = field(j, "id", line_no).get<std::string>();
    if (id != rec.arch.id)
      throw ParseError("tabular file: id \"" + id +
                           "\" does not match ops/wiring (canonical: " +
                           rec.arch.id + ")",
                       line_no);

    const json& metrics = field(j, "metrics", line_no);
    auto ds = metrics.find(oracle.dataset_);
    if (ds == metrics.end())
      throw ParseError("tabular file: record lacks metrics for dataset \"" +
                           oracle.dataset_ + "\"",
                       line_no);
    const json& val_err = field(*ds, "val_err", line_no);
    if (!val_err.is_object() || val_err.empty())
      throw ParseError("tabular file: val_err must map seeds to values", line_no);
    for (auto it = val_err.begin(); it != val_err.end(); ++it) {
      int seed = 0;
      try {
        seed = std::stoi(it.key());
      } catch (const std::exception&) {
        throw ParseError("tabular file: non-integer seed key \"" + it.key() + "\"",
                         line_no);
      }
      rec.val_err_by_seed[seed] = it->get<double>();
    }
    rec.train_time_s = field(*ds, "train_time_s", line_no).get<double>();
    if (ds->contains("test_err") && !(*ds)["test_err"].is_null())
      rec.test_err = (*ds)["test_err"].get<double>();

    if (!oracle.records_.emplace(rec.arch.id, std::move(rec)).second)
      throw ParseError("tabular file: duplicate architecture id \"" + id + "\"",
                       line_no);
  }
  return oracle;
}

Measurement TabularOracle::query(const Architecture& arch, int seed) const {
  auto it = records_.find(arch.id);
  if (it == records_.end())
    throw NotFoundError("architecture not in table: " + arch.id);
  const TabularRecord& rec = it->second;
  auto v = rec.val_err_by_seed.find(seed);
  if (v == rec.val_err_by_seed.end())
    throw NotFoundError("seed " + std::to_string(seed) +
                        " not recorded for " + arch.id);
  Measurement m;
  m.val_err = v->second;
  m.test_err = rec.test_err;
  m.train_cost_s = rec.train_time_s;
  m.seed = seed;
  return m;
}

int TabularOracle::sample_seed(const Architecture& arch, Rng& rng) const {
  auto it = records_.find(arch.id);
  if (it == records_.end())
    throw NotFoundError("architecture not in table: " + arch.id);
  const auto& by_seed = it->second.val_err_by_seed;
  int idx = rng.uniform_int(static_cast<int>(by_seed.size()));
  auto v = by_seed.begin();
  std::advance(v, idx);
  return v->first;
}

Measurement TabularOracle::best_known() const {
  if (records_.empty())
    throw NotFoundError("best_known: tabular oracle holds no records");
  Measurement best;
  best.val_err = std::numeric_limits<double>::infinity();
  for (const auto& [id, rec] : records_) {
    double mean = 0.0;
    for (const auto& [seed, v] : rec.val_err_by_seed) mean += v;
    mean /= rec.val_err_by_seed.size();
    if (mean < best.val_err) {
      best.val_err = mean;
      best.test_err = rec.test_err;
      best.train_cost_s = rec.train_time_s;
    }
  }
  return best;
}

TabularOracle load_tabular(const std::string& path, const std::string& dataset) {
  return TabularOracle::load(path, dataset);
}

}  // namespace anasod
