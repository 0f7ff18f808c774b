#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "anasod/encoding.hpp"
#include "anasod/errors.hpp"
#include "anasod/harness.hpp"

namespace {

// Exit codes: 0 success, 2 bad configuration or arguments, 3 runtime failure.
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw anasod::ConfigError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

// run.out resolution order: --out flag, run.out from the config file, then
// $ANASOD_OUT_ROOT/<config file stem>.
void resolve_out_dir(anasod::ExperimentConfig& config, const std::string& cli_out,
                     const std::string& config_path) {
  if (!cli_out.empty()) {
    config.run.out = cli_out;
    return;
  }
  if (!config.run.out.empty()) return;
  const char* root = std::getenv("ANASOD_OUT_ROOT");
  if (root == nullptr || *root == '\0') {
    throw anasod::ConfigError(
        "no output directory: pass --out, set run.out, or set ANASOD_OUT_ROOT");
  }
  std::filesystem::path stem = std::filesystem::path(config_path).stem();
  config.run.out = (std::filesystem::path(root) / stem).string();
}

int cmd_run(const std::string& config_path, int trials, std::int64_t seed,
            const std::string& out_dir) {
  anasod::ExperimentConfig config = anasod::ExperimentConfig::from_file(config_path);
  if (trials > 0) config.run.trials = trials;
  if (seed >= 0) config.run.master_seed = static_cast<std::uint64_t>(seed);
  resolve_out_dir(config, out_dir, config_path);
  config.validate();

  anasod::ExperimentResult result = anasod::run_experiment(config);
  std::cout << "strategy " << result.summary.strategy << ", " << result.summary.trials
            << " trial(s), budget " << result.summary.budget << "\n";
  std::cout << "final incumbent " << result.summary.final_mean << " +- "
            << result.summary.final_se << "\n";
  if (result.summary.mean_regret) {
    std::cout << "mean regret " << *result.summary.mean_regret << "\n";
  }
  std::cout << "outputs in " << result.out_dir << "\n";
  return 0;
}

int cmd_enumerate(int n, int k, bool list) {
  if (n < 1 || k < 1) throw anasod::ConfigError("enumerate needs --n >= 1 and --k >= 1");
  std::uint64_t count = anasod::count_encodings(n, k);
  std::cout << count << "\n";
  if (list) {
    anasod::for_each_grid_point(n, k, [](const anasod::IntegerEncoding& p) {
      for (std::size_t i = 0; i < p.counts.size(); ++i) {
        if (i) std::cout << ' ';
        std::cout << p.counts[i];
      }
      std::cout << '\n';
    });
  }
  return 0;
}

int cmd_calibrate(const std::string& config_path, const std::string& out_path) {
  anasod::ExperimentConfig config = anasod::ExperimentConfig::from_file(config_path);
  std::string report = anasod::run_calibration(config);
  write_file(out_path, report);
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

int cmd_plot(const std::string& in_dir, const std::string& out_path) {
  std::string summary_path =
      (std::filesystem::path(in_dir) / "summary.json").string();
  anasod::Summary summary = anasod::Summary::from_json(read_file(summary_path));
  write_file(out_path, anasod::render_convergence_svg(summary));
  std::cout << "wrote " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ANASOD encoding and search strategies for cell-based NAS"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  int trials = 0;
  std::int64_t seed = -1;

  CLI::App* run = app.add_subcommand("run", "run a configured experiment");
  run->add_option("--config", config_path, "experiment config (TOML)")->required();
  run->add_option("--trials", trials, "override run.trials");
  run->add_option("--seed", seed, "override run.master_seed");
  run->add_option("--out", out_dir, "override run.out");

  int enum_n = 0;
  int enum_k = 0;
  bool enum_list = false;
  CLI::App* enumerate = app.add_subcommand("enumerate", "count integer encodings");
  enumerate->add_option("--n", enum_n, "blocks per cell")->required();
  enumerate->add_option("--k", enum_k, "operation count")->required();
  enumerate->add_flag("--list", enum_list, "also print every grid point");

  std::string calib_config;
  std::string calib_out;
  CLI::App* calibrate =
      app.add_subcommand("calibrate", "fit synthetic oracle params to targets");
  calibrate->add_option("--config", calib_config, "experiment config (TOML)")->required();
  calibrate->add_option("--out", calib_out, "params json destination")->required();

  std::string plot_in;
  std::string plot_out;
  CLI::App* plot = app.add_subcommand("plot", "render convergence.svg from a run dir");
  plot->add_option("--in", plot_in, "directory holding summary.json")->required();
  plot->add_option("--out", plot_out, "svg destination")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, trials, seed, out_dir);
    if (enumerate->parsed()) return cmd_enumerate(enum_n, enum_k, enum_list);
    if (calibrate->parsed()) return cmd_calibrate(calib_config, calib_out);
    if (plot->parsed()) return cmd_plot(plot_in, plot_out);
  } catch (const anasod::ParseError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const anasod::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
