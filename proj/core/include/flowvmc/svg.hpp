#pragma once

#include <span>
#include <string>
#include <vector>

namespace flowvmc {

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotOptions {
  std::string title;
  std::string x_label;
  std::string y_label;
  /// Plot x on a log10 axis; every x value must be positive.
  bool log_x = false;
  int width = 800;
  int height = 500;
};

/// Hand-rolled SVG line plot: one polyline per series, shared axes with
/// tick labels, and a legend naming every labeled series.
std::string render_line_plot(const std::vector<SvgSeries>& series,
                             const PlotOptions& options);

/// Equal-width histogram of the samples, drawn as one rect per occupied
/// bin and normalized so the bars integrate to one.
std::string render_histogram(std::span<const double> values, int bins,
                             const PlotOptions& options);

}  // namespace flowvmc
