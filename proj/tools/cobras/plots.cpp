#include "plots.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

namespace cobras_cli {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 60, kRight = 150, kTop = 40, kBottom = 50;
constexpr std::array<const char*, 8> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
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

}  // namespace

std::string line_chart_svg(const ChartSpec& spec, const std::vector<Series>& series) {
  std::size_t points = 0;
  for (const auto& s : series) points = std::max(points, s.y.size());
  const double x_max = points > 1 ? static_cast<double>(points - 1) : 1.0;
  const double span = spec.y_max > spec.y_min ? spec.y_max - spec.y_min : 1.0;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + plot_w * x / x_max; };
  auto py = [&](double y) {
    double t = (y - spec.y_min) / span;
    if (spec.y_inverted) t = 1.0 - t;
    return kTop + plot_h * (1.0 - t);
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" +
         num(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + num(kWidth / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" +
         escape(spec.title) + "</text>\n";

  for (int t = 0; t <= 5; ++t) {
    const double y = spec.y_min + span * t / 5.0;
    svg += "<line x1=\"" + num(kLeft) + "\" x2=\"" + num(kLeft + plot_w) + "\" y1=\"" + num(py(y)) +
           "\" y2=\"" + num(py(y)) + "\" stroke=\"#e0e0e0\"/>\n";
    svg += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(py(y) + 4) +
           "\" text-anchor=\"end\">" + num(y) + "</text>\n";
  }
  for (int t = 0; t <= 5; ++t) {
    const double x = std::round(x_max * t / 5.0);
    svg += "<text x=\"" + num(px(x)) + "\" y=\"" + num(kTop + plot_h + 18) +
           "\" text-anchor=\"middle\">" + std::to_string(static_cast<long>(x)) + "</text>\n";
  }
  svg += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(plot_w) +
         "\" height=\"" + num(plot_h) + "\" fill=\"none\" stroke=\"black\"/>\n";
  svg += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"" + num(kHeight - 10) +
         "\" text-anchor=\"middle\">" + escape(spec.x_label) + "</text>\n";
  svg += "<text transform=\"translate(16," + num(kTop + plot_h / 2) +
         ") rotate(-90)\" text-anchor=\"middle\">" + escape(spec.y_label) + "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* color = kColors[k % kColors.size()];
    std::string pts;
    for (std::size_t x = 0; x < series[k].y.size(); ++x) {
      if (!pts.empty()) pts += ' ';
      pts += num(px(static_cast<double>(x))) + "," + num(py(series[k].y[x]));
    }
    svg += "<polyline fill=\"none\" stroke-width=\"2\" stroke=\"" + std::string(color) +
           "\" points=\"" + pts + "\"/>\n";
    const double ly = kTop + 10 + 18.0 * static_cast<double>(k);
    svg += "<line x1=\"" + num(kWidth - kRight + 12) + "\" x2=\"" + num(kWidth - kRight + 32) +
           "\" y1=\"" + num(ly) + "\" y2=\"" + num(ly) + "\" stroke-width=\"2\" stroke=\"" + color +
           "\"/>\n";
    svg += "<text x=\"" + num(kWidth - kRight + 38) + "\" y=\"" + num(ly + 4) + "\">" +
           escape(series[k].name) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace cobras_cli
