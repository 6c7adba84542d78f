#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "flowvmc/errors.hpp"
#include "flowvmc/svg.hpp"

namespace flowvmc {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#8c564b"};
constexpr int kPaletteSize = 6;

constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 25.0;
constexpr double kMarginTop = 45.0;
constexpr double kMarginBottom = 60.0;

std::string xml_escape(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (const char c : text) {
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

std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

Range padded(double lo, double hi, double frac) {
  if (lo == hi) {
    const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.1;
    return {lo - pad, hi + pad};
  }
  const double pad = (hi - lo) * frac;
  return {lo - pad, hi + pad};
}

std::vector<double> linear_ticks(double lo, double hi, int target) {
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  const double step = r > 5.0 ? 10.0 * mag : r > 2.0 ? 5.0 * mag
                      : r > 1.0 ? 2.0 * mag : mag;
  std::vector<double> ticks;
  const double start = std::ceil(lo / step) * step;
  for (int i = 0;; ++i) {
    const double v = start + i * step;
    if (v > hi + step * 1e-9) break;
    ticks.push_back(v);
  }
  return ticks;
}

// Decade-aligned 1-2-5 ticks for log axes.
std::vector<double> log_ticks(double lo, double hi) {
  std::vector<double> ticks;
  const int k_lo = static_cast<int>(std::floor(std::log10(lo))) - 1;
  const int k_hi = static_cast<int>(std::ceil(std::log10(hi))) + 1;
  for (int k = k_lo; k <= k_hi; ++k) {
    for (const double m : {1.0, 2.0, 5.0}) {
      const double v = m * std::pow(10.0, k);
      if (v >= lo * (1.0 - 1e-12) && v <= hi * (1.0 + 1e-12))
        ticks.push_back(v);
    }
  }
  return ticks;
}

class Frame {
 public:
  Frame(const PlotOptions& options, Range x, Range y)
      : options_(options),
        x_(x),
        y_(y),
        plot_w_(options.width - kMarginLeft - kMarginRight),
        plot_h_(options.height - kMarginTop - kMarginBottom) {}

  double sx(double x) const {
    const double t = options_.log_x ? std::log10(x) : x;
    return kMarginLeft + (t - x_.lo) / (x_.hi - x_.lo) * plot_w_;
  }
  double sy(double y) const {
    return kMarginTop + (y_.hi - y) / (y_.hi - y_.lo) * plot_h_;
  }

  /// Background, axes box, ticks, grid, title, and axis labels.
  std::string chrome(const std::vector<double>& x_ticks,
                     const std::vector<double>& y_ticks) const {
    const double w = options_.width;
    const double h = options_.height;
    const double bottom = kMarginTop + plot_h_;
    std::string s;
    s += "<rect width=\"" + coord(w) + "\" height=\"" + coord(h) +
         "\" fill=\"#ffffff\"/>\n";
    for (const double ty : y_ticks) {
      const std::string py = coord(sy(ty));
      s += "<line x1=\"" + coord(kMarginLeft) + "\" y1=\"" + py + "\" x2=\"" +
           coord(kMarginLeft + plot_w_) + "\" y2=\"" + py +
           "\" stroke=\"#e0e0e0\"/>\n";
      s += "<text x=\"" + coord(kMarginLeft - 8) + "\" y=\"" + py +
           "\" font-family=\"sans-serif\" font-size=\"11\" "
           "text-anchor=\"end\" dominant-baseline=\"middle\">" +
           xml_escape(tick_label(ty)) + "</text>\n";
    }
    for (const double tx : x_ticks) {
      const std::string px = coord(options_.log_x ? sx(tx)
                                                  : kMarginLeft +
                                                        (tx - x_.lo) /
                                                            (x_.hi - x_.lo) *
                                                            plot_w_);
      s += "<line x1=\"" + px + "\" y1=\"" + coord(bottom) + "\" x2=\"" + px +
           "\" y2=\"" + coord(bottom + 5) + "\" stroke=\"#333333\"/>\n";
      s += "<text x=\"" + px + "\" y=\"" + coord(bottom + 20) +
           "\" font-family=\"sans-serif\" font-size=\"11\" "
           "text-anchor=\"middle\">" +
           xml_escape(tick_label(tx)) + "</text>\n";
    }
    s += "<rect x=\"" + coord(kMarginLeft) + "\" y=\"" + coord(kMarginTop) +
         "\" width=\"" + coord(plot_w_) + "\" height=\"" + coord(plot_h_) +
         "\" fill=\"none\" stroke=\"#333333\"/>\n";
    if (!options_.title.empty())
      s += "<text x=\"" + coord(w / 2) +
           "\" y=\"25\" font-family=\"sans-serif\" font-size=\"16\" "
           "text-anchor=\"middle\">" +
           xml_escape(options_.title) + "</text>\n";
    if (!options_.x_label.empty())
      s += "<text x=\"" + coord(kMarginLeft + plot_w_ / 2) + "\" y=\"" +
           coord(h - 14) +
           "\" font-family=\"sans-serif\" font-size=\"13\" "
           "text-anchor=\"middle\">" +
           xml_escape(options_.x_label) + "</text>\n";
    if (!options_.y_label.empty())
      s += "<text transform=\"rotate(-90)\" x=\"" +
           coord(-(kMarginTop + plot_h_ / 2)) +
           "\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\" "
           "text-anchor=\"middle\">" +
           xml_escape(options_.y_label) + "</text>\n";
    return s;
  }

  double plot_w() const { return plot_w_; }

 private:
  const PlotOptions& options_;
  Range x_;
  Range y_;
  double plot_w_;
  double plot_h_;
};

std::string document(const PlotOptions& options, const std::string& body) {
  return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         std::to_string(options.width) + "\" height=\"" +
         std::to_string(options.height) + "\" viewBox=\"0 0 " +
         std::to_string(options.width) + " " + std::to_string(options.height) +
         "\">\n" +
         body + "</svg>\n";
}

}  // namespace

std::string render_line_plot(const std::vector<SvgSeries>& series,
                             const PlotOptions& options) {
  if (series.empty()) throw DomainError("render_line_plot: no series");
  double x_lo = 0.0, x_hi = 0.0, y_lo = 0.0, y_hi = 0.0;
  bool first = true;
  for (const SvgSeries& s : series) {
    if (s.x.size() != s.y.size())
      throw DomainError("render_line_plot: series " + s.label +
                        " has mismatched x/y lengths");
    if (s.x.empty())
      throw DomainError("render_line_plot: series " + s.label + " is empty");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i]))
        throw DomainError("render_line_plot: non-finite point in series " +
                          s.label);
      if (options.log_x && s.x[i] <= 0.0)
        throw DomainError("render_line_plot: log axis needs positive x");
      const double tx = options.log_x ? std::log10(s.x[i]) : s.x[i];
      if (first) {
        x_lo = x_hi = tx;
        y_lo = y_hi = s.y[i];
        first = false;
      } else {
        x_lo = std::min(x_lo, tx);
        x_hi = std::max(x_hi, tx);
        y_lo = std::min(y_lo, s.y[i]);
        y_hi = std::max(y_hi, s.y[i]);
      }
    }
  }
  const Range xr = padded(x_lo, x_hi, 0.0);
  const Range yr = padded(y_lo, y_hi, 0.05);
  const Frame frame(options, xr, yr);

  const std::vector<double> x_ticks =
      options.log_x ? log_ticks(std::pow(10.0, xr.lo), std::pow(10.0, xr.hi))
                    : linear_ticks(xr.lo, xr.hi, 6);
  std::string body = frame.chrome(x_ticks, linear_ticks(yr.lo, yr.hi, 5));

  for (std::size_t k = 0; k < series.size(); ++k) {
    const SvgSeries& s = series[k];
    std::string pts;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i > 0) pts += ' ';
      pts += coord(frame.sx(s.x[i])) + "," + coord(frame.sy(s.y[i]));
    }
    body += "<polyline fill=\"none\" stroke=\"";
    body += kPalette[k % kPaletteSize];
    body += "\" stroke-width=\"1.5\" points=\"" + pts + "\"/>\n";
  }

  double legend_y = kMarginTop + 16.0;
  const double legend_x = kMarginLeft + frame.plot_w() - 150.0;
  for (std::size_t k = 0; k < series.size(); ++k) {
    if (series[k].label.empty()) continue;
    body += "<line x1=\"" + coord(legend_x) + "\" y1=\"" + coord(legend_y) +
            "\" x2=\"" + coord(legend_x + 24) + "\" y2=\"" + coord(legend_y) +
            "\" stroke=\"";
    body += kPalette[k % kPaletteSize];
    body += "\" stroke-width=\"2\"/>\n";
    body += "<text x=\"" + coord(legend_x + 30) + "\" y=\"" + coord(legend_y) +
            "\" font-family=\"sans-serif\" font-size=\"12\" "
            "dominant-baseline=\"middle\">" +
            xml_escape(series[k].label) + "</text>\n";
    legend_y += 18.0;
  }
  return document(options, body);
}

std::string render_histogram(std::span<const double> values, int bins,
                             const PlotOptions& options) {
  if (values.empty()) throw DomainError("render_histogram: no samples");
  if (bins < 1) throw DomainError("render_histogram: bins must be positive");
  double lo = values[0], hi = values[0];
  for (const double v : values) {
    if (!std::isfinite(v))
      throw DomainError("render_histogram: non-finite sample");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (lo == hi) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double bin_w = (hi - lo) / bins;
  std::vector<double> density(static_cast<std::size_t>(bins), 0.0);
  for (const double v : values) {
    const int idx = std::min(bins - 1, static_cast<int>((v - lo) / bin_w));
    density[static_cast<std::size_t>(idx)] += 1.0;
  }
  double d_max = 0.0;
  for (double& d : density) {
    d /= static_cast<double>(values.size()) * bin_w;
    d_max = std::max(d_max, d);
  }

  const Range xr{lo, hi};
  const Range yr{0.0, d_max > 0.0 ? d_max * 1.05 : 1.0};
  const Frame frame(options, xr, yr);
  std::string body =
      frame.chrome(linear_ticks(lo, hi, 6), linear_ticks(yr.lo, yr.hi, 5));

  const double base = frame.sy(0.0);
  for (int i = 0; i < bins; ++i) {
    const double d = density[static_cast<std::size_t>(i)];
    if (d == 0.0) continue;
    const double x0 = frame.sx(lo + i * bin_w);
    const double x1 = frame.sx(lo + (i + 1) * bin_w);
    const double top = frame.sy(d);
    body += "<rect x=\"" + coord(x0) + "\" y=\"" + coord(top) + "\" width=\"" +
            coord(x1 - x0) + "\" height=\"" + coord(base - top) +
            "\" fill=\"#1f77b4\" fill-opacity=\"0.85\"/>\n";
  }
  return document(options, body);
}

}  // namespace flowvmc
