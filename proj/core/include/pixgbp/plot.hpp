#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pixgbp/experiment.hpp"

namespace pixgbp {

struct PlotOptions {
  std::string title;
  /// normalized_error, mean_uncertainty, energy or per_level_error_L<k>.
  std::string metric = "normalized_error";
  bool log_y = false;
  int width = 720;
  int height = 440;
};

/// A labelled set of rows; each distinct topology inside becomes one curve.
struct PlotSeries {
  std::string label;
  std::vector<MetricRow> rows;
};

/// Mean-over-runs curve per series with an interquartile band wherever more
/// than one run contributes. Throws std::invalid_argument when there is
/// nothing to draw.
std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& options);

/// Reads metrics CSVs (labelled by their parent directory when there are
/// several) and writes one SVG.
void plot_csv(const std::vector<std::filesystem::path>& inputs, const std::filesystem::path& output,
              const PlotOptions& options);

}  // namespace pixgbp
