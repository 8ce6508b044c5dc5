#pragma once

// Static learning-curve chart: mean_return against env_steps.

#include <string>
#include <vector>

namespace coopstyle::cli {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Reads env_steps and mean_return columns from a metrics.csv. Throws
/// ConfigError naming the file and line on a malformed row.
Series read_metrics_series(const std::string& path);

/// SVG document with one polyline per series, axis labels and a legend.
std::string render_svg(const std::vector<Series>& series);

}  // namespace coopstyle::cli
