#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pixgbp/factors.hpp"
#include "pixgbp/topology.hpp"

namespace pixgbp {

struct ExperimentConfig {
  TopologyKind topology = TopologyKind::Flat;
  /// Also run the gradient-descent baseline on every scene pair.
  bool centralized = false;
  int size = 64;
  double fov_degrees = 60.0;
  double max_rotation_degrees = 1.0;
  /// Unset noise scales fall back to the topology's defaults.
  std::optional<double> sigma_p;
  std::optional<double> sigma_d;
  std::optional<double> sigma_r;
  double noise_sigma = 0.0;
  int iterations = 300;
  int runs = 20;
  std::uint64_t seed = 1;
  double damping = 0.0;
  double centralized_step = 1.5e-5;
  /// Equirectangular input; a procedural panorama is generated per run when empty.
  std::filesystem::path panorama;
  /// No files are written when empty.
  std::filesystem::path output_dir;
  /// Runs executed concurrently.
  int jobs = 1;

  FactorParams params() const;
  /// Throws ConfigError describing the first violated constraint.
  void validate() const;
};

ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Resolved configuration (defaults filled in) as pretty-printed JSON.
std::string to_json(const ExperimentConfig& config);

/// Sets one field from its textual value, using the JSON key names. Throws
/// ConfigError for unknown keys or unparsable values.
void set_field(ExperimentConfig& config, std::string_view key, std::string_view value);

/// 16 hex digits identifying everything that influences the metrics (output
/// location and job count excluded).
std::string config_hash(const ExperimentConfig& config);

/// Seed of run `run`; scene pair and procedural panorama derive from it.
std::uint64_t run_seed(const ExperimentConfig& config, int run);

struct MetricRow {
  int run_id = 0;
  std::string config_hash;
  std::string topology;  // "flat", "sharded" or "centralized"
  int sweep = 0;
  double normalized_error = 0.0;
  std::vector<double> level_errors;  // empty for flat and centralized
  std::optional<double> mean_uncertainty;
  double energy = 0.0;
  double wall_ms = 0.0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::string hash;
  std::vector<MetricRow> rows;  // ordered by run, solver, sweep
};

/// Rows of one solver in one run, by sweep (index 0 = sweep 1).
std::vector<const MetricRow*> select_rows(const ExperimentResult& result, int run, std::string_view solver);

/// Runs every seeded scene through the configured solver (and the baseline if
/// requested). With an output directory, writes metrics.csv, metrics_long.csv,
/// summary.csv and config.json there.
ExperimentResult run_experiment(const ExperimentConfig& config);

struct SweepGroup {
  std::string parameter;
  std::string value;
  ExperimentResult result;
};

/// One experiment per value, all sharing the base seed so runs are paired.
/// Each group writes into <output_dir>/<parameter>=<value>.
std::vector<SweepGroup> sweep_parameter(const ExperimentConfig& base, std::string_view parameter,
                                        const std::vector<std::string>& values);

void write_metrics_csv(const std::vector<MetricRow>& rows, const std::filesystem::path& path);
void write_long_csv(const std::vector<MetricRow>& rows, const std::filesystem::path& path);
void write_summary_csv(const std::vector<MetricRow>& rows, const std::filesystem::path& path);
/// Reads a file produced by write_metrics_csv.
std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path);

}  // namespace pixgbp
