#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "anasod/errors.hpp"
#include "anasod/harness.hpp"

namespace anasod {
namespace {

// Minimal TOML-style subset: [section] headers, key = value lines, values
// are strings, numbers, booleans or (possibly nested) arrays, # comments.
struct Value {
  enum class Type { String, Number, Bool, Array };
  Type type = Type::String;
  std::string str;
  double num = 0.0;
  bool boolean = false;
  std::vector<Value> array;
  int line = 0;
};

using Table = std::map<std::string, std::map<std::string, Value>>;

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

// Strips a trailing comment that starts outside any string literal.
std::string strip_comment(const std::string& s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"') in_string = !in_string;
    if (s[i] == '#' && !in_string) return s.substr(0, i);
  }
  return s;
}

Value parse_value(const std::string& text, int line);

Value parse_array(const std::string& text, int line) {
  Value v;
  v.type = Value::Type::Array;
  v.line = line;
  // Split on commas at bracket depth zero.
  int depth = 0;
  bool in_string = false;
  std::string current;
  for (std::size_t i = 1; i < text.size(); ++i) {
    if (i == text.size() - 1 && text[i] == ']' && depth == 0) {
      const std::string item = trim(current);
      if (!item.empty()) v.array.push_back(parse_value(item, line));
      return v;
    }
    const char c = text[i];
    if (c == '"') in_string = !in_string;
    if (!in_string) {
      if (c == '[') ++depth;
      if (c == ']') --depth;
      if (c == ',' && depth == 0) {
        const std::string item = trim(current);
        if (item.empty()) throw ParseError("config: empty array element", line);
        v.array.push_back(parse_value(item, line));
        current.clear();
        continue;
      }
    }
    current += c;
  }
  throw ParseError("config: unterminated array", line);
}

Value parse_value(const std::string& text, int line) {
  Value v;
  v.line = line;
  if (text.empty()) throw ParseError("config: empty value", line);
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"')
      throw ParseError("config: unterminated string", line);
    v.type = Value::Type::String;
    v.str = text.substr(1, text.size() - 2);
    return v;
  }
  if (text.front() == '[') return parse_array(text, line);
  if (text == "true" || text == "false") {
    v.type = Value::Type::Bool;
    v.boolean = text == "true";
    return v;
  }
  char* end = nullptr;
  v.num = std::strtod(text.c_str(), &end);
  if (end == nullptr || *end != '\0')
    throw ParseError("config: cannot parse value \"" + text + "\"", line);
  v.type = Value::Type::Number;
  return v;
}

Table parse_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  Table table;
  std::string section;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw ParseError("config: malformed section header", line_no);
      section = trim(line.substr(1, line.size() - 2));
      table[section];
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ParseError("config: expected key = value", line_no);
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError("config: empty key", line_no);
    if (section.empty())
      throw ParseError("config: key \"" + key + "\" outside any [section]",
                       line_no);
    if (table[section].count(key))
      throw ParseError("config: duplicate key \"" + section + "." + key + "\"",
                       line_no);
    table[section][key] = parse_value(trim(line.substr(eq + 1)), line_no);
  }
  return table;
}

[[noreturn]] void bad_field(const std::string& section, const std::string& key,
                            const std::string& reason) {
  throw ConfigError("config: " + section + "." + key + " " + reason);
}

class SectionReader {
 public:
  SectionReader(const Table& table, std::string section)
      : section_(std::move(section)) {
    auto it = table.find(section_);
    if (it != table.end()) entries_ = &it->second;
  }

  bool present() const { return entries_ != nullptr; }

  const Value* find(const std::string& key) {
    seen_.insert(key);
    if (!entries_) return nullptr;
    auto it = entries_->find(key);
    return it == entries_->end() ? nullptr : &it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) {
    const Value* v = find(key);
    if (!v) return fallback;
    if (v->type != Value::Type::String) bad_field(section_, key, "must be a string");
    return v->str;
  }

  double get_number(const std::string& key, double fallback, bool* was_set = nullptr) {
    const Value* v = find(key);
    if (was_set) *was_set = v != nullptr;
    if (!v) return fallback;
    if (v->type != Value::Type::Number) bad_field(section_, key, "must be a number");
    return v->num;
  }

  int get_int(const std::string& key, int fallback) {
    const double d = get_number(key, fallback);
    const int i = static_cast<int>(d);
    if (static_cast<double>(i) != d) bad_field(section_, key, "must be an integer");
    return i;
  }

  bool get_bool(const std::string& key, bool fallback) {
    const Value* v = find(key);
    if (!v) return fallback;
    if (v->type != Value::Type::Bool) bad_field(section_, key, "must be true or false");
    return v->boolean;
  }

  std::vector<std::string> get_string_array(const std::string& key) {
    const Value* v = find(key);
    if (!v) return {};
    if (v->type != Value::Type::Array) bad_field(section_, key, "must be an array");
    std::vector<std::string> out;
    for (const Value& item : v->array) {
      if (item.type != Value::Type::String)
        bad_field(section_, key, "must contain strings");
      out.push_back(item.str);
    }
    return out;
  }

  std::vector<Edge> get_edge_array(const std::string& key) {
    const Value* v = find(key);
    if (!v) return {};
    if (v->type != Value::Type::Array) bad_field(section_, key, "must be an array");
    std::vector<Edge> out;
    for (const Value& item : v->array) {
      if (item.type != Value::Type::Array || item.array.size() != 2 ||
          item.array[0].type != Value::Type::Number ||
          item.array[1].type != Value::Type::Number)
        bad_field(section_, key, "must contain [src, dst] pairs");
      out.push_back({static_cast<int>(item.array[0].num),
                     static_cast<int>(item.array[1].num)});
    }
    return out;
  }

  // Everything not consumed by a getter is a typo worth failing on.
  void reject_unknown_keys() const {
    if (!entries_) return;
    for (const auto& [key, value] : *entries_)
      if (!seen_.count(key))
        throw ConfigError("config: unknown key " + section_ + "." + key);
  }

 private:
  std::string section_;
  const std::map<std::string, Value>* entries_ = nullptr;
  std::set<std::string> seen_;
};

}  // namespace

CellSpec SpecConfig::build() const {
  if (preset == "nasbench201") return CellSpec::nasbench201();
  if (!preset.empty())
    throw ConfigError("config: spec.preset \"" + preset + "\" is not known");

  CellSpec spec;
  spec.num_blocks = n;
  if (!op_names.empty()) {
    spec.op_names = op_names;
  } else {
    for (int i = 0; i < k; ++i) spec.op_names.push_back("op" + std::to_string(i));
  }
  if (topology == "fixed") {
    FixedDag dag;
    if (!edges.empty()) {
      dag.edges = edges;
    } else {
      for (int i = 0; i < n; ++i) dag.edges.push_back({i, i + 1});
    }
    spec.topology = std::move(dag);
  } else if (topology == "variable") {
    VariableWiring var;
    var.num_nodes = nodes;
    spec.topology = var;
  } else {
    throw ConfigError("config: spec.topology must be \"fixed\" or \"variable\"");
  }
  spec.validate();
  return spec;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  const Table table = parse_table(path);
  for (const auto& [section, entries] : table) {
    (void)entries;
    if (section != "strategy" && section != "oracle" && section != "spec" &&
        section != "run")
      throw ConfigError("config: unknown section [" + section + "]");
  }

  ExperimentConfig cfg;

  SectionReader strategy(table, "strategy");
  cfg.strategy.name = strategy.get_string("name", cfg.strategy.name);
  cfg.strategy.beta_max = strategy.get_number("beta_max", cfg.strategy.beta_max);
  cfg.strategy.n_init = strategy.get_int("n_init", cfg.strategy.n_init);
  cfg.strategy.batch_size = strategy.get_int("batch_size", cfg.strategy.batch_size);
  cfg.strategy.pool_size = strategy.get_int("pool_size", cfg.strategy.pool_size);
  strategy.reject_unknown_keys();

  SectionReader oracle(table, "oracle");
  cfg.oracle.type = oracle.get_string("type", cfg.oracle.type);
  cfg.oracle.path = oracle.get_string("path", "");
  cfg.oracle.dataset = oracle.get_string("dataset", "");
  bool has_overall = false, has_same = false, has_seed = false;
  cfg.oracle.target_overall_sd =
      oracle.get_number("target_overall_sd", 0.0, &has_overall);
  cfg.oracle.target_same_encoding_sd =
      oracle.get_number("target_same_encoding_sd", 0.0, &has_same);
  cfg.oracle.target_seed_sd = oracle.get_number("target_seed_sd", 0.0, &has_seed);
  if (has_overall != has_same || has_same != has_seed)
    throw ConfigError(
        "config: oracle targets must be given as all three of "
        "target_overall_sd, target_same_encoding_sd, target_seed_sd");
  cfg.oracle.has_targets = has_overall;
  cfg.oracle.calibration_seed = static_cast<std::uint64_t>(
      oracle.get_number("calibration_seed", 1.0));
  cfg.oracle.cost_scale_s =
      oracle.get_number("cost_scale_s", cfg.oracle.cost_scale_s);
  oracle.reject_unknown_keys();

  SectionReader spec(table, "spec");
  cfg.spec.preset = spec.get_string("preset", "");
  cfg.spec.n = spec.get_int("n", 0);
  cfg.spec.k = spec.get_int("k", 0);
  cfg.spec.op_names = spec.get_string_array("op_names");
  cfg.spec.topology = spec.get_string("topology", cfg.spec.topology);
  cfg.spec.nodes = spec.get_int("nodes", 0);
  cfg.spec.edges = spec.get_edge_array("edges");
  spec.reject_unknown_keys();

  SectionReader run(table, "run");
  cfg.run.budget = run.get_int("budget", 0);
  bool has_cost = false;
  const double max_cost = run.get_number("max_cost_s", 0.0, &has_cost);
  if (has_cost) cfg.run.max_cost_s = max_cost;
  cfg.run.trials = run.get_int("trials", cfg.run.trials);
  cfg.run.master_seed =
      static_cast<std::uint64_t>(run.get_number("master_seed", 0.0));
  cfg.run.out = run.get_string("out", "");
  cfg.run.plot = run.get_bool("plot", false);
  cfg.run.exec = run.get_string("exec", cfg.run.exec);
  run.reject_unknown_keys();

  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  const std::set<std::string> strategies{"rs", "biased_rs", "ls_encoding",
                                         "ls_arch", "bo"};
  if (!strategies.count(strategy.name))
    throw ConfigError("config: strategy.name \"" + strategy.name +
                      "\" is not one of rs, biased_rs, ls_encoding, ls_arch, bo");
  if (strategy.beta_max < 0.0)
    throw ConfigError("config: strategy.beta_max must be >= 0");
  if (strategy.n_init < 1) throw ConfigError("config: strategy.n_init must be >= 1");
  if (strategy.batch_size < 1)
    throw ConfigError("config: strategy.batch_size must be >= 1");
  if (strategy.pool_size < strategy.batch_size)
    throw ConfigError("config: strategy.pool_size must be >= batch_size");

  if (oracle.type == "synthetic") {
    if (oracle.path.empty() && !oracle.has_targets)
      throw ConfigError(
          "config: synthetic oracle needs either oracle.path (params file) "
          "or the three target SDs");
    if (!(oracle.cost_scale_s > 0.0))
      throw ConfigError("config: oracle.cost_scale_s must be positive");
  } else if (oracle.type == "tabular") {
    if (oracle.path.empty())
      throw ConfigError("config: tabular oracle needs oracle.path");
  } else {
    throw ConfigError("config: oracle.type must be \"synthetic\" or \"tabular\"");
  }

  if (spec.preset.empty() && oracle.type != "tabular") {
    if (spec.n < 1) throw ConfigError("config: spec.n must be >= 1");
    if (spec.k < 1 && spec.op_names.empty())
      throw ConfigError("config: give spec.k or spec.op_names");
    if (!spec.op_names.empty() && spec.k > 0 &&
        static_cast<int>(spec.op_names.size()) != spec.k)
      throw ConfigError("config: spec.k disagrees with spec.op_names");
    if (spec.topology == "variable" && spec.nodes < 2)
      throw ConfigError("config: spec.nodes must be >= 2 for variable topology");
  }

  if (run.budget < 0) throw ConfigError("config: run.budget must be >= 0");
  if (run.budget == 0 && !run.max_cost_s)
    throw ConfigError("config: set run.budget, run.max_cost_s, or both");
  if (run.max_cost_s && !(*run.max_cost_s > 0.0))
    throw ConfigError("config: run.max_cost_s must be positive");
  if (run.trials < 1) throw ConfigError("config: run.trials must be >= 1");
  if (run.exec != "openmp" && run.exec != "serial")
    throw ConfigError("config: run.exec must be \"openmp\" or \"serial\"");
}

}  // namespace anasod
