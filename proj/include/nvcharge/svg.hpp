#pragma once

#include <string>
#include <vector>

namespace nvcharge::svg {

enum class Style { line, points };

struct Series {
  std::string label;
  std::vector<double> x, y;
  Style style = Style::line;
  std::string color = "#1f77b4";
};

struct Plot {
  std::string title, x_label, y_label;
  bool log_x = false, log_y = false;
  std::vector<Series> series;
};

/// Axes with ticks, one polyline or point set per series, and a legend.
/// Non-positive values are skipped on logarithmic axes.
std::string render(const Plot& plot, int width = 720, int height = 480);

}  // namespace nvcharge::svg
