#pragma once

#include <string>
#include <vector>

namespace cobras_cli {

struct Series {
  std::string name;
  std::vector<double> y;  // x is the index
};

struct ChartSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  double y_min = 0.0;
  double y_max = 1.0;
  bool y_inverted = false;  // rank plots put 1 at the top
};

// Standalone SVG line chart; byte-deterministic for the same input.
std::string line_chart_svg(const ChartSpec& spec, const std::vector<Series>& series);

}  // namespace cobras_cli
