#pragma once

// Self-contained SVG bar and scatter charts with +-1 std error bars.

#include <string>
#include <vector>

namespace tangle {

struct Series {
  std::string label;
  std::vector<double> x;    // scatter only
  std::vector<double> y;
  std::vector<double> err;  // optional, same length as y
};

struct BarChart {
  std::string title;
  std::string y_label;
  std::vector<std::string> categories;
  std::vector<Series> series;  // y[i] is the bar for categories[i]
};

struct ScatterChart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  bool lines = false;  // join points of a series in x order
};

std::string render_svg(const BarChart& chart, int width = 720, int height = 420);
std::string render_svg(const ScatterChart& chart, int width = 720, int height = 420);

/// Escapes &, <, >, " for use in text and attributes.
std::string xml_escape(const std::string& text);

}  // namespace tangle
