// pixgbp: generate scene pairs, run experiments and parameter sweeps, plot results.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "pixgbp/datagen.hpp"
#include "pixgbp/error.hpp"
#include "pixgbp/experiment.hpp"
#include "pixgbp/image_io.hpp"
#include "pixgbp/plot.hpp"

namespace fs = std::filesystem;
using namespace pixgbp;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

fs::path default_output_dir() {
  if (const char* env = std::getenv("PIXGBP_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return "pixgbp_out";
}

// Flags shared by `run` and `sweep`; each maps onto a config key.
struct ExperimentFlags {
  std::string config_path;
  std::vector<std::string> assignments;
  std::map<std::string, std::string> values;

  void attach(CLI::App& app) {
    app.add_option("-c,--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
    app.add_option("--set", assignments, "Override a config key (key=value), repeatable");
    add(app, "--topology", "topology", "flat or sharded");
    add(app, "--size", "size", "Image side length in pixels");
    add(app, "--fov", "fov_degrees", "Horizontal field of view in degrees");
    add(app, "--max-rotation", "max_rotation_degrees", "Largest relative rotation in degrees");
    add(app, "--sigma-p", "sigma_p", "Prior noise scale (rad)");
    add(app, "--sigma-d", "sigma_d", "Photometric noise scale (intensity)");
    add(app, "--sigma-r", "sigma_r", "Regularisation noise scale (rad)");
    add(app, "--noise", "noise_sigma", "Image noise standard deviation");
    add(app, "--iterations", "iterations", "GBP sweeps / gradient steps per run");
    add(app, "--runs", "runs", "Number of seeded runs");
    add(app, "--seed", "seed", "Base seed");
    add(app, "--damping", "damping", "Message damping in [0, 1)");
    add(app, "--centralized-step", "centralized_step", "Gradient-descent step size");
    add(app, "--panorama", "panorama", "Equirectangular PNG/PFM instead of the procedural scene");
    add(app, "-o,--output", "output_dir", "Output directory (default $PIXGBP_OUTPUT_DIR or ./pixgbp_out)");
    add(app, "-j,--jobs", "jobs", "Runs executed concurrently");
    app.add_flag_callback("--centralized", [this] { values["centralized"] = "true"; },
                          "Also run the gradient-descent baseline");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig config = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    if (config.output_dir.empty()) config.output_dir = default_output_dir();
    for (const auto& a : assignments) {
      const auto eq = a.find('=');
      if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects key=value, got '" + a + "'");
      set_field(config, a.substr(0, eq), a.substr(eq + 1));
    }
    for (const auto& [key, value] : values) set_field(config, key, value);
    config.validate();
    return config;
  }

 private:
  void add(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
    app.add_option_function<std::string>(flag, [this, key](const std::string& v) { values[key] = v; }, help);
  }
};

void print_summary(const ExperimentResult& result) {
  std::map<std::string, std::pair<double, int>> finals;
  std::vector<std::string> order;
  for (const auto& row : result.rows) {
    if (row.sweep != result.config.iterations) continue;
    if (!finals.count(row.topology)) order.push_back(row.topology);
    auto& [sum, n] = finals[row.topology];
    sum += row.normalized_error;
    ++n;
  }
  for (const auto& name : order) {
    const auto& [sum, n] = finals[name];
    std::printf("  %-12s mean normalized error after %d iterations: %.4f (%d runs)\n", name.c_str(),
                result.config.iterations, sum / n, n);
  }
}

int generate(const fs::path& out, int count, std::uint64_t seed, const SceneSpec& spec, const std::string& panorama,
             bool save_panorama) {
  if (count < 1) throw ConfigError("--count must be at least 1");
  if (spec.size < 2) throw ConfigError("--size must be at least 2");
  fs::create_directories(out);
  std::optional<PanoramaImage> shared;
  if (!panorama.empty()) shared = load_panorama(panorama);
  for (int i = 0; i < count; ++i) {
    const std::uint64_t s = derive_seed(seed, static_cast<std::uint64_t>(i));
    const PanoramaImage pano = shared ? *shared : procedural_panorama(derive_seed(s, 3));
    char stem[32];
    std::snprintf(stem, sizeof stem, "pair_%03d", i);
    save_scene_pair(make_scene_pair(pano, spec, s), out, stem);
    if (save_panorama && !shared) write_png(pano.image, out / (std::string(stem) + "_panorama.png"), 16);
    std::printf("wrote %s\n", (out / stem).string().c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pixel-level Gaussian belief propagation for camera rotation estimation"};
  app.require_subcommand(1);

  auto* gen = app.add_subcommand("generate", "Render seeded scene pairs to PNG + JSON");
  fs::path gen_out = default_output_dir() / "pairs";
  int gen_count = 1;
  std::uint64_t gen_seed = 1;
  SceneSpec gen_spec;
  std::string gen_panorama;
  bool gen_save_panorama = false;
  gen->add_option("-o,--output", gen_out, "Output directory");
  gen->add_option("-n,--count", gen_count, "Number of pairs");
  gen->add_option("--seed", gen_seed, "Base seed");
  gen->add_option("--size", gen_spec.size, "Image side length in pixels");
  gen->add_option("--fov", gen_spec.fov_degrees, "Horizontal field of view in degrees");
  gen->add_option("--max-rotation", gen_spec.max_rotation_degrees, "Largest relative rotation in degrees");
  gen->add_option("--noise", gen_spec.noise_sigma, "Image noise standard deviation");
  gen->add_option("--panorama", gen_panorama, "Equirectangular input")->check(CLI::ExistingFile);
  gen->add_flag("--save-panorama", gen_save_panorama, "Also write each procedural panorama");

  auto* run = app.add_subcommand("run", "Run one experiment");
  ExperimentFlags run_flags;
  run_flags.attach(*run);

  auto* sweep = app.add_subcommand("sweep", "Run one experiment per parameter value");
  ExperimentFlags sweep_flags;
  sweep_flags.attach(*sweep);
  std::string sweep_param;
  std::vector<std::string> sweep_values;
  sweep->add_option("-p,--param", sweep_param, "Config key to vary")->required();
  sweep->add_option("-v,--values", sweep_values, "Values (comma separated)")->required()->delimiter(',');

  auto* plot = app.add_subcommand("plot", "Render metrics CSVs as an SVG");
  std::vector<fs::path> plot_inputs;
  fs::path plot_out = "plot.svg";
  PlotOptions plot_options;
  plot->add_option("inputs", plot_inputs, "metrics.csv files")->required()->check(CLI::ExistingFile);
  plot->add_option("-o,--output", plot_out, "SVG file to write");
  plot->add_option("-m,--metric", plot_options.metric, "Metric column");
  plot->add_option("--title", plot_options.title, "Figure title");
  plot->add_flag("--log-y", plot_options.log_y, "Logarithmic y axis");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) return generate(gen_out, gen_count, gen_seed, gen_spec, gen_panorama, gen_save_panorama);
    if (*run) {
      const ExperimentConfig config = run_flags.resolve();
      std::printf("running %d %s run(s), config %s\n", config.runs, std::string(to_string(config.topology)).c_str(),
                  config_hash(config).c_str());
      const ExperimentResult result = run_experiment(config);
      print_summary(result);
      std::printf("results in %s\n", config.output_dir.string().c_str());
      return 0;
    }
    if (*sweep) {
      const ExperimentConfig config = sweep_flags.resolve();
      for (const auto& group : sweep_parameter(config, sweep_param, sweep_values)) {
        std::printf("%s=%s (config %s)\n", group.parameter.c_str(), group.value.c_str(), group.result.hash.c_str());
        print_summary(group.result);
      }
      std::printf("results in %s\n", config.output_dir.string().c_str());
      return 0;
    }
    if (*plot) {
      plot_csv(plot_inputs, plot_out, plot_options);
      std::printf("wrote %s\n", plot_out.string().c_str());
      return 0;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
