#include "pixgbp/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "pixgbp/error.hpp"

namespace pixgbp {
namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2",
                                    "#7f7f7f"};
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 36.0;
constexpr double kMarginBottom = 50.0;

struct Curve {
  std::string label;
  std::vector<int> sweeps;
  std::vector<double> mean;
  std::vector<double> low;
  std::vector<double> high;
  bool band = false;
};

std::optional<double> metric_value(const MetricRow& row, const std::string& metric) {
  if (metric == "normalized_error") return row.normalized_error;
  if (metric == "mean_uncertainty") return row.mean_uncertainty;
  if (metric == "energy") return row.energy;
  const std::string prefix = "per_level_error_L";
  if (metric.rfind(prefix, 0) == 0) {
    const int level = std::stoi(metric.substr(prefix.size()));
    if (level >= 1 && static_cast<std::size_t>(level) <= row.level_errors.size()) {
      return row.level_errors[static_cast<std::size_t>(level - 1)];
    }
    return std::nullopt;
  }
  throw std::invalid_argument("unknown plot metric '" + metric + "'");
}

double quartile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::vector<Curve> build_curves(const std::vector<PlotSeries>& series, const PlotOptions& options) {
  std::vector<Curve> curves;
  for (const auto& s : series) {
    std::vector<std::string> order;
    std::map<std::string, std::map<int, std::vector<double>>> samples;
    for (const auto& row : s.rows) {
      const auto v = metric_value(row, options.metric);
      if (!v || !std::isfinite(*v) || (options.log_y && *v <= 0.0)) continue;
      if (!samples.count(row.topology)) order.push_back(row.topology);
      samples[row.topology][row.sweep].push_back(options.log_y ? std::log10(*v) : *v);
    }
    for (const auto& topology : order) {
      Curve c;
      c.label = s.label.empty() ? topology : s.label + " " + topology;
      for (const auto& [sweep, values] : samples[topology]) {
        double sum = 0.0;
        for (double v : values) sum += v;
        c.sweeps.push_back(sweep);
        c.mean.push_back(sum / static_cast<double>(values.size()));
        c.low.push_back(quartile(values, 0.25));
        c.high.push_back(quartile(values, 0.75));
        c.band = c.band || values.size() > 1;
      }
      curves.push_back(std::move(c));
    }
  }
  return curves;
}

double nice_step(double range) {
  const double raw = range / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  return (f < 1.5 ? 1.0 : f < 3.0 ? 2.0 : f < 7.0 ? 5.0 : 10.0) * mag;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v, bool log_y) {
  char buf[32];
  if (log_y) {
    std::snprintf(buf, sizeof buf, "1e%d", static_cast<int>(std::lround(v)));
  } else {
    std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
  }
  return buf;
}

std::string escape(const std::string& text) {
  std::string out;
  for (const char ch : text) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const std::vector<PlotSeries>& series, const PlotOptions& options) {
  if (options.width < 200 || options.height < 150) throw std::invalid_argument("plot is too small to draw");
  const std::vector<Curve> curves = build_curves(series, options);
  if (curves.empty()) throw std::invalid_argument("no data to plot for metric '" + options.metric + "'");

  int x_max = 1;
  double y_lo = std::numeric_limits<double>::infinity();
  double y_hi = -std::numeric_limits<double>::infinity();
  for (const auto& c : curves) {
    x_max = std::max(x_max, c.sweeps.back());
    for (std::size_t i = 0; i < c.mean.size(); ++i) {
      y_lo = std::min({y_lo, c.low[i], c.mean[i]});
      y_hi = std::max({y_hi, c.high[i], c.mean[i]});
    }
  }
  if (options.log_y) {
    y_lo = std::floor(y_lo);
    y_hi = std::ceil(y_hi);
  } else if (y_lo >= 0.0) {
    y_lo = 0.0;
  }
  if (y_hi - y_lo < 1e-12) y_hi = y_lo + 1.0;
  const double y_step = options.log_y ? std::max(1.0, std::ceil((y_hi - y_lo) / 6.0)) : nice_step(y_hi - y_lo);
  if (!options.log_y) {
    y_lo = std::floor(y_lo / y_step) * y_step;
    y_hi = std::ceil(y_hi / y_step) * y_step;
  }

  const double w = options.width;
  const double h = options.height;
  const double pw = w - kMarginLeft - kMarginRight;
  const double ph = h - kMarginTop - kMarginBottom;
  const double x_span = std::max(1, x_max - 1);
  auto px = [&](double sweep) { return kMarginLeft + (sweep - 1.0) / x_span * pw; };
  auto py = [&](double v) { return kMarginTop + (y_hi - v) / (y_hi - y_lo) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width << "\" height=\"" << options.height
      << "\" viewBox=\"0 0 " << options.width << ' ' << options.height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!options.title.empty()) {
    svg << "<text x=\"" << num(w / 2) << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << escape(options.title)
        << "</text>\n";
  }

  // Grid and ticks.
  for (double v = y_lo; v <= y_hi + 1e-9 * y_step; v += y_step) {
    svg << "<line x1=\"" << num(kMarginLeft) << "\" y1=\"" << num(py(v)) << "\" x2=\"" << num(kMarginLeft + pw)
        << "\" y2=\"" << num(py(v)) << "\" stroke=\"#e0e0e0\"/>\n";
    svg << "<text x=\"" << num(kMarginLeft - 6) << "\" y=\"" << num(py(v) + 4) << "\" text-anchor=\"end\">"
        << tick_label(v, options.log_y) << "</text>\n";
  }
  const double x_step = std::max(1.0, nice_step(x_span));
  for (double s = 0.0; s <= x_max + 1e-9; s += x_step) {
    const double sweep = std::max(1.0, s);
    svg << "<text x=\"" << num(px(sweep)) << "\" y=\"" << num(kMarginTop + ph + 18) << "\" text-anchor=\"middle\">"
        << static_cast<int>(sweep) << "</text>\n";
  }
  svg << "<rect x=\"" << num(kMarginLeft) << "\" y=\"" << num(kMarginTop) << "\" width=\"" << num(pw) << "\" height=\""
      << num(ph) << "\" fill=\"none\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << num(kMarginLeft + pw / 2) << "\" y=\"" << num(h - 12) << "\" text-anchor=\"middle\">iteration</text>\n";
  svg << "<text transform=\"translate(16 " << num(kMarginTop + ph / 2) << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(options.metric) << "</text>\n";

  for (std::size_t k = 0; k < curves.size(); ++k) {
    const Curve& c = curves[k];
    const char* color = kPalette[k % std::size(kPalette)];
    if (c.band) {
      svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
      for (std::size_t i = 0; i < c.sweeps.size(); ++i) svg << num(px(c.sweeps[i])) << ',' << num(py(c.high[i])) << ' ';
      for (std::size_t i = c.sweeps.size(); i-- > 0;) svg << num(px(c.sweeps[i])) << ',' << num(py(c.low[i])) << ' ';
      svg << "\"/>\n";
    }
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < c.sweeps.size(); ++i) svg << num(px(c.sweeps[i])) << ',' << num(py(c.mean[i])) << ' ';
    svg << "\"/>\n";
  }

  // Legend, one entry per curve.
  const double lx = kMarginLeft + pw - 190.0;
  for (std::size_t k = 0; k < curves.size(); ++k) {
    const double ly = kMarginTop + 16.0 + 18.0 * static_cast<double>(k);
    const char* color = kPalette[k % std::size(kPalette)];
    svg << "<g class=\"legend-entry\"><line x1=\"" << num(lx) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(lx + 24)
        << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"3\"/><text x=\"" << num(lx + 30)
        << "\" y=\"" << num(ly + 4) << "\">" << escape(curves[k].label) << "</text></g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void plot_csv(const std::vector<std::filesystem::path>& inputs, const std::filesystem::path& output,
              const PlotOptions& options) {
  if (inputs.empty()) throw std::invalid_argument("plot needs at least one CSV input");
  std::vector<PlotSeries> series;
  for (const auto& path : inputs) {
    PlotSeries s;
    if (inputs.size() > 1) s.label = path.parent_path().filename().string();
    s.rows = read_metrics_csv(path);
    if (s.rows.empty()) throw std::invalid_argument(path.string() + " has no data rows");
    series.push_back(std::move(s));
  }
  const std::string svg = render_svg(series, options);
  std::ofstream out(output, std::ios::binary);
  if (!out) throw IoError("cannot write " + output.string());
  out << svg;
}

}  // namespace pixgbp
