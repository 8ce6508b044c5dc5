#include "coopstyle/cli/svg_plot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "coopstyle/error.hpp"

namespace coopstyle::cli {
namespace {

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    while (!cell.empty() && cell.front() == ' ') cell.erase(cell.begin());
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool to_double(const std::string& s, double& out) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size() && std::isfinite(out);
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

Series read_metrics_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open metrics file '" + path + "'");
  Series s;
  s.label = std::filesystem::path(path).stem().string();
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty file, expected a header row");
  const auto header = split_csv(line);
  const auto find = [&](const char* name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError(path + ": header has no '" + name + "' column");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t xi = find("env_steps");
  const std::size_t yi = find("mean_return");
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw ConfigError(path + ": row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                        " cells, got " + std::to_string(cells.size()));
    }
    double x = 0.0;
    double y = 0.0;
    if (!to_double(cells[xi], x)) {
      throw ConfigError(path + ": row " + std::to_string(row) + ": env_steps '" + cells[xi] + "' is not a number");
    }
    if (!to_double(cells[yi], y)) {
      throw ConfigError(path + ": row " + std::to_string(row) + ": mean_return '" + cells[yi] + "' is not a number");
    }
    s.x.push_back(x);
    s.y.push_back(y);
  }
  return s;
}

std::string render_svg(const std::vector<Series>& series) {
  constexpr double W = 800, H = 500, left = 80, right = 200, top = 30, bottom = 60;
  const double pw = W - left - right;
  const double ph = H - top - bottom;
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin, ymin = xmin, ymax = -xmin;
  for (const auto& s : series) {
    for (double v : s.x) xmin = std::min(xmin, v), xmax = std::max(xmax, v);
    for (double v : s.y) ymin = std::min(ymin, v), ymax = std::max(ymax, v);
  }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  const auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  const auto py = [&](double y) { return top + ph - (y - ymin) / (ymax - ymin) * ph; };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                 "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << " " << H << "\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  os << "<g stroke=\"black\" stroke-width=\"1\">\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph << "\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph << "\"/>\n";
  os << "</g>\n";
  os << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = xmin + (xmax - xmin) * i / 4.0;
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    os << "<text x=\"" << px(xv) << "\" y=\"" << top + ph + 16 << "\" text-anchor=\"middle\">" << fmt(xv) << "</text>\n";
    os << "<text x=\"" << left - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << fmt(yv) << "</text>\n";
  }
  os << "</g>\n";
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 15
     << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\">env_steps</text>\n";
  os << "<text x=\"20\" y=\"" << top + ph / 2 << "\" font-family=\"sans-serif\" font-size=\"13\" text-anchor=\"middle\" "
     << "transform=\"rotate(-90 20 " << top + ph / 2 << ")\">mean_return</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    os << "<polyline fill=\"none\" stroke=\"" << colors[i % 10] << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < s.x.size(); ++k) os << (k ? " " : "") << fmt(px(s.x[k])) << "," << fmt(py(s.y[k]));
    os << "\"/>\n";
  }
  os << "<g class=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = top + 10 + 20.0 * static_cast<double>(i);
    os << "<line x1=\"" << left + pw + 15 << "\" y1=\"" << y << "\" x2=\"" << left + pw + 40 << "\" y2=\"" << y
       << "\" stroke=\"" << colors[i % 10] << "\" stroke-width=\"2\"/>\n";
    os << "<text class=\"legend-entry\" x=\"" << left + pw + 46 << "\" y=\"" << y + 4 << "\">"
       << escape_xml(series[i].label) << "</text>\n";
  }
  os << "</g>\n</svg>\n";
  return os.str();
}

}  // namespace coopstyle::cli
