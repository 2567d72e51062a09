#include "pixgbp/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <json.hpp>
#include <map>
#include <memory>
#include <sstream>

#include "pixgbp/baseline.hpp"
#include "pixgbp/datagen.hpp"
#include "pixgbp/error.hpp"
#include "pixgbp/graph.hpp"
#include "pixgbp/metrics.hpp"
#include "pixgbp/parallel.hpp"

namespace pixgbp {
namespace {

using nlohmann::json;

constexpr int kMinLevelColumns = 8;

const char* const kKeys[] = {"topology", "centralized", "size", "fov_degrees", "max_rotation_degrees",
                             "sigma_p", "sigma_d", "sigma_r", "noise_sigma", "iterations", "runs", "seed",
                             "damping", "centralized_step", "panorama", "output_dir", "jobs"};

bool known_key(std::string_view key) {
  return std::any_of(std::begin(kKeys), std::end(kKeys), [&](const char* k) { return key == k; });
}

json hashed_fields(const ExperimentConfig& c) {
  const FactorParams p = c.params();
  return json{{"topology", std::string(to_string(c.topology))},
              {"centralized", c.centralized},
              {"size", c.size},
              {"fov_degrees", c.fov_degrees},
              {"max_rotation_degrees", c.max_rotation_degrees},
              {"sigma_p", p.sigma_p},
              {"sigma_d", p.sigma_d},
              {"sigma_r", p.sigma_r},
              {"noise_sigma", c.noise_sigma},
              {"iterations", c.iterations},
              {"runs", c.runs},
              {"seed", c.seed},
              {"damping", c.damping},
              {"centralized_step", c.centralized_step},
              {"panorama", c.panorama.generic_string()}};
}

std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char ch : text) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

double parse_number(std::string_view key, std::string_view text) {
  const std::string s(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) throw ConfigError("'" + std::string(key) + "' expects a number, got '" + s + "'");
  return v;
}

int parse_int(std::string_view key, std::string_view text) {
  const double v = parse_number(key, text);
  if (v != std::floor(v) || std::abs(v) > 1e9) {
    throw ConfigError("'" + std::string(key) + "' expects an integer, got '" + std::string(text) + "'");
  }
  return static_cast<int>(v);
}

bool parse_bool(std::string_view key, std::string_view text) {
  if (text == "true" || text == "1" || text == "on") return true;
  if (text == "false" || text == "0" || text == "off") return false;
  throw ConfigError("'" + std::string(key) + "' expects true or false, got '" + std::string(text) + "'");
}

std::string format(double v, const char* spec = "%.12g") {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::size_t level_columns(const std::vector<MetricRow>& rows) {
  std::size_t n = kMinLevelColumns;
  for (const auto& r : rows) n = std::max(n, r.level_errors.size());
  return n;
}

double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_cell(const std::string& cell) {
  if (cell == "nan") return std::nan("");
  return std::stod(cell);
}

MetricRow base_row(int run, const std::string& hash, std::string solver, int sweep) {
  MetricRow row;
  row.run_id = run;
  row.config_hash = hash;
  row.topology = std::move(solver);
  row.sweep = sweep;
  return row;
}

std::vector<MetricRow> execute_run(const ExperimentConfig& config, const std::string& hash, int run,
                                   const PanoramaImage* shared_panorama) {
  const std::uint64_t seed = run_seed(config, run);
  std::optional<PanoramaImage> own;
  if (shared_panorama == nullptr) own = procedural_panorama(derive_seed(seed, 3));
  const PanoramaImage& pano = shared_panorama != nullptr ? *shared_panorama : *own;

  SceneSpec spec;
  spec.size = config.size;
  spec.fov_degrees = config.fov_degrees;
  spec.max_rotation_degrees = config.max_rotation_degrees;
  spec.noise_sigma = config.noise_sigma;
  const ScenePair pair = make_scene_pair(pano, spec, seed);
  auto scene = std::make_shared<const PhotometricScene>(pair.left, pair.right, pair.intrinsics);

  std::vector<MetricRow> rows;
  rows.reserve(static_cast<std::size_t>(config.iterations) * (config.centralized ? 2 : 1));

  FactorGraph graph = build_topology({config.topology, config.size, config.size, config.params()});
  graph.set_scene(scene);
  GbpOptions options;
  options.damping = config.damping;
  GbpSolver solver(options);
  const bool sharded = config.topology == TopologyKind::Sharded;
  for (int it = 1; it <= config.iterations; ++it) {
    const SweepReport report = solver.sweep(graph);
    MetricRow row = base_row(run, hash, std::string(to_string(config.topology)), it);
    row.normalized_error = normalized_rotational_error(graph, pair.ground_truth);
    if (sharded) row.level_errors = per_level_error(graph, pair.ground_truth);
    try {
      row.mean_uncertainty = mean_uncertainty(graph);
    } catch (const NumericalError&) {
      row.mean_uncertainty.reset();
    }
    row.energy = report.energy;
    row.wall_ms = report.wall_ms;
    rows.push_back(std::move(row));
  }

  if (config.centralized) {
    CentralizedOptions co;
    co.step_size = config.centralized_step;
    co.iterations = config.iterations;
    const auto start = std::chrono::steady_clock::now();
    const CentralizedResult cen = solve_centralized(*scene, Rotation(), co);
    const double per_step =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count() /
        config.iterations;
    const double magnitude = log_map(pair.ground_truth).norm();
    for (std::size_t i = 0; i < cen.estimates.size(); ++i) {
      MetricRow row = base_row(run, hash, "centralized", static_cast<int>(i + 1));
      row.normalized_error = geodesic_distance(cen.estimates[i], pair.ground_truth) / magnitude;
      row.energy = cen.energies[i];
      row.wall_ms = per_step;
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_config_json(const ExperimentConfig& config, const std::string& hash, const std::filesystem::path& path) {
  json out = json::parse(to_json(config));
  out["config_hash"] = hash;
  auto file = open_output(path);
  file << out.dump(2) << '\n';
}

}  // namespace

FactorParams ExperimentConfig::params() const {
  FactorParams p = topology == TopologyKind::Sharded ? FactorParams::sharded_defaults() : FactorParams::flat_defaults();
  if (sigma_p) p.sigma_p = *sigma_p;
  if (sigma_d) p.sigma_d = *sigma_d;
  if (sigma_r) p.sigma_r = *sigma_r;
  return p;
}

void ExperimentConfig::validate() const {
  params().validate();
  if (size < 2) throw ConfigError("size must be at least 2");
  if (topology == TopologyKind::Sharded && (size & (size - 1)) != 0) {
    throw ConfigError("sharded topology needs a power-of-two size, got " + std::to_string(size));
  }
  if (!(fov_degrees > 1.0 && fov_degrees < 179.0)) throw ConfigError("fov_degrees must lie in (1, 179)");
  if (!(max_rotation_degrees > 0.0 && max_rotation_degrees <= 180.0)) {
    throw ConfigError("max_rotation_degrees must lie in (0, 180]");
  }
  if (!(noise_sigma >= 0.0 && std::isfinite(noise_sigma))) throw ConfigError("noise_sigma must be non-negative");
  if (iterations < 1) throw ConfigError("iterations must be at least 1");
  if (runs < 1) throw ConfigError("runs must be at least 1");
  if (!(damping >= 0.0 && damping < 1.0)) throw ConfigError("damping must lie in [0, 1)");
  if (!(centralized_step > 0.0 && std::isfinite(centralized_step))) {
    throw ConfigError("centralized_step must be positive");
  }
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
  if (!panorama.empty() && !std::filesystem::exists(panorama)) {
    throw ConfigError("panorama not found: " + panorama.string());
  }
}

ExperimentConfig parse_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");

  ExperimentConfig c;
  try {
    for (const auto& [key, value] : doc.items()) {
      if (!known_key(key)) throw ConfigError("unknown config key '" + key + "'");
      if (key == "topology") {
        c.topology = parse_topology(value.get<std::string>());
      } else if (key == "centralized") {
        c.centralized = value.get<bool>();
      } else if (key == "size") {
        c.size = value.get<int>();
      } else if (key == "fov_degrees") {
        c.fov_degrees = value.get<double>();
      } else if (key == "max_rotation_degrees") {
        c.max_rotation_degrees = value.get<double>();
      } else if (key == "sigma_p" || key == "sigma_d" || key == "sigma_r") {
        std::optional<double> v;
        if (!value.is_null()) v = value.get<double>();
        (key == "sigma_p" ? c.sigma_p : key == "sigma_d" ? c.sigma_d : c.sigma_r) = v;
      } else if (key == "noise_sigma") {
        c.noise_sigma = value.get<double>();
      } else if (key == "iterations") {
        c.iterations = value.get<int>();
      } else if (key == "runs") {
        c.runs = value.get<int>();
      } else if (key == "seed") {
        c.seed = value.get<std::uint64_t>();
      } else if (key == "damping") {
        c.damping = value.get<double>();
      } else if (key == "centralized_step") {
        c.centralized_step = value.get<double>();
      } else if (key == "panorama") {
        c.panorama = value.get<std::string>();
      } else if (key == "output_dir") {
        c.output_dir = value.get<std::string>();
      } else if (key == "jobs") {
        c.jobs = value.get<int>();
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string to_json(const ExperimentConfig& config) {
  json out = hashed_fields(config);
  out["output_dir"] = config.output_dir.generic_string();
  out["jobs"] = config.jobs;
  return out.dump(2);
}

void set_field(ExperimentConfig& c, std::string_view key, std::string_view value) {
  if (key == "topology") {
    c.topology = parse_topology(value);
  } else if (key == "centralized") {
    c.centralized = parse_bool(key, value);
  } else if (key == "size") {
    c.size = parse_int(key, value);
  } else if (key == "fov_degrees") {
    c.fov_degrees = parse_number(key, value);
  } else if (key == "max_rotation_degrees") {
    c.max_rotation_degrees = parse_number(key, value);
  } else if (key == "sigma_p") {
    c.sigma_p = parse_number(key, value);
  } else if (key == "sigma_d") {
    c.sigma_d = parse_number(key, value);
  } else if (key == "sigma_r") {
    c.sigma_r = parse_number(key, value);
  } else if (key == "noise_sigma") {
    c.noise_sigma = parse_number(key, value);
  } else if (key == "iterations") {
    c.iterations = parse_int(key, value);
  } else if (key == "runs") {
    c.runs = parse_int(key, value);
  } else if (key == "seed") {
    const std::string s(value);
    if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("'seed' expects a non-negative integer, got '" + s + "'");
    }
    c.seed = std::stoull(s);
  } else if (key == "damping") {
    c.damping = parse_number(key, value);
  } else if (key == "centralized_step") {
    c.centralized_step = parse_number(key, value);
  } else if (key == "panorama") {
    c.panorama = std::string(value);
  } else if (key == "output_dir") {
    c.output_dir = std::string(value);
  } else if (key == "jobs") {
    c.jobs = parse_int(key, value);
  } else {
    throw ConfigError("unknown config key '" + std::string(key) + "'");
  }
}

std::string config_hash(const ExperimentConfig& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(hashed_fields(config).dump())));
  return buf;
}

std::uint64_t run_seed(const ExperimentConfig& config, int run) {
  return derive_seed(config.seed, static_cast<std::uint64_t>(run));
}

std::vector<const MetricRow*> select_rows(const ExperimentResult& result, int run, std::string_view solver) {
  std::vector<const MetricRow*> out;
  for (const auto& row : result.rows) {
    if (row.run_id == run && row.topology == solver) out.push_back(&row);
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult result;
  result.config = config;
  result.hash = config_hash(config);

  std::optional<PanoramaImage> shared;
  if (!config.panorama.empty()) shared = load_panorama(config.panorama);

  std::vector<std::vector<MetricRow>> per_run(static_cast<std::size_t>(config.runs));
  std::vector<std::exception_ptr> failures(per_run.size());
  parallel_for(per_run.size(), config.jobs, [&](std::size_t r) {
    try {
      per_run[r] = execute_run(config, result.hash, static_cast<int>(r), shared ? &*shared : nullptr);
    } catch (...) {
      failures[r] = std::current_exception();
    }
  });
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }
  for (auto& rows : per_run) {
    result.rows.insert(result.rows.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
  }

  if (!config.output_dir.empty()) {
    std::filesystem::create_directories(config.output_dir);
    write_metrics_csv(result.rows, config.output_dir / "metrics.csv");
    write_long_csv(result.rows, config.output_dir / "metrics_long.csv");
    write_summary_csv(result.rows, config.output_dir / "summary.csv");
    write_config_json(config, result.hash, config.output_dir / "config.json");
  }
  return result;
}

std::vector<SweepGroup> sweep_parameter(const ExperimentConfig& base, std::string_view parameter,
                                        const std::vector<std::string>& values) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (parameter == "seed" || parameter == "output_dir" || parameter == "runs") {
    throw ConfigError("'" + std::string(parameter) + "' cannot be swept");
  }
  std::vector<SweepGroup> groups;
  for (const auto& value : values) {
    SweepGroup g;
    g.parameter = std::string(parameter);
    g.value = value;
    g.result.config = base;
    set_field(g.result.config, parameter, value);
    if (!base.output_dir.empty()) g.result.config.output_dir = base.output_dir / (g.parameter + "=" + value);
    g.result.config.validate();
    groups.push_back(std::move(g));
  }
  for (auto& g : groups) g.result = run_experiment(g.result.config);
  return groups;
}

void write_metrics_csv(const std::vector<MetricRow>& rows, const std::filesystem::path& path) {
  const std::size_t levels = level_columns(rows);
  auto out = open_output(path);
  out << "run_id,config_hash,topology,sweep,normalized_error";
  for (std::size_t l = 1; l <= levels; ++l) out << ",per_level_error_L" << l;
  out << ",mean_uncertainty,energy,wall_ms\n";
  for (const auto& r : rows) {
    out << r.run_id << ',' << r.config_hash << ',' << r.topology << ',' << r.sweep << ',' << format(r.normalized_error);
    for (std::size_t l = 0; l < levels; ++l) {
      out << ',';
      if (l < r.level_errors.size()) out << format(r.level_errors[l]);
    }
    out << ',';
    if (r.mean_uncertainty) out << format(*r.mean_uncertainty);
    out << ',' << format(r.energy) << ',' << format(r.wall_ms, "%.3f") << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_long_csv(const std::vector<MetricRow>& rows, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "run_id,config_hash,topology,sweep,metric,value\n";
  for (const auto& r : rows) {
    const std::string prefix = std::to_string(r.run_id) + ',' + r.config_hash + ',' + r.topology + ',' +
                               std::to_string(r.sweep) + ',';
    out << prefix << "normalized_error," << format(r.normalized_error) << '\n';
    for (std::size_t l = 0; l < r.level_errors.size(); ++l) {
      out << prefix << "per_level_error_L" << (l + 1) << ',' << format(r.level_errors[l]) << '\n';
    }
    if (r.mean_uncertainty) out << prefix << "mean_uncertainty," << format(*r.mean_uncertainty) << '\n';
    out << prefix << "energy," << format(r.energy) << '\n';
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_summary_csv(const std::vector<MetricRow>& rows, const std::filesystem::path& path) {
  struct Bucket {
    std::vector<double> errors;
    std::vector<double> uncertainty;
  };
  std::vector<std::string> order;
  std::map<std::string, std::map<int, Bucket>> groups;
  for (const auto& r : rows) {
    if (!groups.count(r.topology)) order.push_back(r.topology);
    Bucket& b = groups[r.topology][r.sweep];
    b.errors.push_back(r.normalized_error);
    if (r.mean_uncertainty) b.uncertainty.push_back(*r.mean_uncertainty);
  }
  auto out = open_output(path);
  out << "topology,sweep,runs,error_mean,error_q25,error_q75,uncertainty_mean\n";
  for (const auto& name : order) {
    for (const auto& [sweep, b] : groups[name]) {
      double mean = 0.0;
      for (double e : b.errors) mean += e;
      mean /= static_cast<double>(b.errors.size());
      out << name << ',' << sweep << ',' << b.errors.size() << ',' << format(mean) << ','
          << format(quantile(b.errors, 0.25)) << ',' << format(quantile(b.errors, 0.75)) << ',';
      if (!b.uncertainty.empty()) {
        double u = 0.0;
        for (double v : b.uncertainty) u += v;
        out << format(u / static_cast<double>(b.uncertainty.size()));
      }
      out << '\n';
    }
  }
  if (!out) throw IoError("failed writing " + path.string());
}

std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + " is empty");
  const auto header = split_csv_line(line);
  if (header.size() < 8 || header[0] != "run_id" || header[4] != "normalized_error") {
    throw IoError(path.string() + " is not a metrics CSV");
  }
  const std::size_t levels = header.size() - 8;

  std::vector<MetricRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": expected " + std::to_string(header.size()) +
                    " columns");
    }
    try {
      MetricRow r;
      r.run_id = std::stoi(cells[0]);
      r.config_hash = cells[1];
      r.topology = cells[2];
      r.sweep = std::stoi(cells[3]);
      r.normalized_error = parse_cell(cells[4]);
      for (std::size_t l = 0; l < levels; ++l) {
        if (!cells[5 + l].empty()) r.level_errors.push_back(parse_cell(cells[5 + l]));
      }
      if (!cells[5 + levels].empty()) r.mean_uncertainty = parse_cell(cells[5 + levels]);
      r.energy = parse_cell(cells[6 + levels]);
      r.wall_ms = parse_cell(cells[7 + levels]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": malformed value");
    }
  }
  return rows;
}

}  // namespace pixgbp
