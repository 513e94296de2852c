#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "adafnn/errors.hpp"

namespace adafnn {

// One polyline on the plot. Dashed lines are used for reference overlays
// (true signals, targets) so they read differently from fitted curves.
struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

namespace detail {

inline std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.8g", v);
  return buf;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace detail

// Renders the series onto a fixed 800x500 canvas with axes scaled to the
// data. The output is one self-contained SVG document with no external
// references. Returns the document text.
inline std::string render_line_plot(const std::vector<PlotSeries>& series,
                                    const std::string& title = "") {
  if (series.empty()) throw data_error("plot has no series");
  for (std::size_t i = 0; i < series.size(); ++i) {
    const PlotSeries& s = series[i];
    if (s.x.size() != s.y.size()) {
      throw data_error("series " + std::to_string(i) + " has " +
                       std::to_string(s.x.size()) + " x values and " +
                       std::to_string(s.y.size()) + " y values");
    }
    if (s.x.size() < 2) {
      throw data_error("series " + std::to_string(i) +
                       " needs at least 2 points");
    }
    for (std::size_t j = 0; j < s.x.size(); ++j) {
      if (!std::isfinite(s.x[j]) || !std::isfinite(s.y[j])) {
        throw data_error("series " + std::to_string(i) +
                         " has a non-finite point at index " +
                         std::to_string(j));
      }
    }
  }

  const double width = 800.0, height = 500.0;
  const double left = 62.0, right = 16.0, bottom = 42.0;
  const double top = title.empty() ? 16.0 : 40.0;

  double x_min = series[0].x[0], x_max = x_min;
  double y_min = series[0].y[0], y_max = y_min;
  for (const PlotSeries& s : series) {
    for (double v : s.x) {
      x_min = std::min(x_min, v);
      x_max = std::max(x_max, v);
    }
    for (double v : s.y) {
      y_min = std::min(y_min, v);
      y_max = std::max(y_max, v);
    }
  }
  // Degenerate ranges still need a nonzero span to map through.
  if (x_max == x_min) {
    x_min -= 0.5;
    x_max += 0.5;
  }
  if (y_max == y_min) {
    double pad = std::max(1.0, std::abs(y_min)) * 0.1;
    y_min -= pad;
    y_max += pad;
  } else {
    double pad = (y_max - y_min) * 0.05;
    y_min -= pad;
    y_max += pad;
  }

  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  auto px = [&](double v) {
    return left + (v - x_min) / (x_max - x_min) * plot_w;
  };
  auto py = [&](double v) {
    return top + (y_max - v) / (y_max - y_min) * plot_h;
  };

  static const char* palette[] = {"#1f6fb2", "#d1495b", "#3d8361", "#9a6db0",
                                  "#c98a2b", "#4f8996", "#7d5a44", "#5b5f97"};
  const std::size_t palette_size = sizeof(palette) / sizeof(palette[0]);

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" "
         "height=\"500\" viewBox=\"0 0 800 500\">\n";
  out += "<rect width=\"800\" height=\"500\" fill=\"#ffffff\"/>\n";
  if (!title.empty()) {
    out += "<text x=\"400\" y=\"24\" text-anchor=\"middle\" "
           "font-family=\"sans-serif\" font-size=\"16\" fill=\"#222222\">" +
           detail::xml_escape(title) + "</text>\n";
  }

  const int ticks = 6;
  for (int k = 0; k < ticks; ++k) {
    double fx = static_cast<double>(k) / (ticks - 1);
    double xv = x_min + fx * (x_max - x_min);
    double yv = y_min + fx * (y_max - y_min);
    double gx = px(xv), gy = py(yv);
    out += "<line x1=\"" + detail::svg_num(gx) + "\" y1=\"" +
           detail::svg_num(top) + "\" x2=\"" + detail::svg_num(gx) +
           "\" y2=\"" + detail::svg_num(top + plot_h) +
           "\" stroke=\"#e3e3e3\" stroke-width=\"1\"/>\n";
    out += "<line x1=\"" + detail::svg_num(left) + "\" y1=\"" +
           detail::svg_num(gy) + "\" x2=\"" + detail::svg_num(left + plot_w) +
           "\" y2=\"" + detail::svg_num(gy) +
           "\" stroke=\"#e3e3e3\" stroke-width=\"1\"/>\n";
    out += "<text x=\"" + detail::svg_num(gx) + "\" y=\"" +
           detail::svg_num(height - bottom + 18.0) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\" fill=\"#444444\">" +
           detail::xml_escape(detail::tick_label(xv)) + "</text>\n";
    out += "<text x=\"" + detail::svg_num(left - 8.0) + "\" y=\"" +
           detail::svg_num(gy + 4.0) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"11\" fill=\"#444444\">" +
           detail::xml_escape(detail::tick_label(yv)) + "</text>\n";
  }

  out += "<rect x=\"" + detail::svg_num(left) + "\" y=\"" +
         detail::svg_num(top) + "\" width=\"" + detail::svg_num(plot_w) +
         "\" height=\"" + detail::svg_num(plot_h) +
         "\" fill=\"none\" stroke=\"#666666\" stroke-width=\"1\"/>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const PlotSeries& s = series[i];
    out += "<polyline fill=\"none\" stroke=\"";
    out += palette[i % palette_size];
    out += "\" stroke-width=\"1.8\"";
    if (s.dashed) out += " stroke-dasharray=\"7 4\"";
    out += " points=\"";
    for (std::size_t j = 0; j < s.x.size(); ++j) {
      if (j > 0) out += ' ';
      out += detail::svg_num(px(s.x[j])) + "," + detail::svg_num(py(s.y[j]));
    }
    out += "\"/>\n";
  }

  bool any_label = false;
  for (const PlotSeries& s : series) any_label |= !s.label.empty();
  if (any_label) {
    const double box_w = 150.0;
    const double row_h = 18.0;
    double box_h = row_h * static_cast<double>(series.size()) + 8.0;
    double bx = width - right - box_w - 8.0;
    double by = top + 8.0;
    out += "<rect x=\"" + detail::svg_num(bx) + "\" y=\"" +
           detail::svg_num(by) + "\" width=\"" + detail::svg_num(box_w) +
           "\" height=\"" + detail::svg_num(box_h) +
           "\" fill=\"#ffffff\" fill-opacity=\"0.85\" stroke=\"#999999\" "
           "stroke-width=\"1\"/>\n";
    for (std::size_t i = 0; i < series.size(); ++i) {
      double ry = by + 8.0 + row_h * static_cast<double>(i) + row_h / 2.0;
      out += "<line x1=\"" + detail::svg_num(bx + 8.0) + "\" y1=\"" +
             detail::svg_num(ry) + "\" x2=\"" + detail::svg_num(bx + 34.0) +
             "\" y2=\"" + detail::svg_num(ry) + "\" stroke=\"";
      out += palette[i % palette_size];
      out += "\" stroke-width=\"1.8\"";
      if (series[i].dashed) out += " stroke-dasharray=\"7 4\"";
      out += "/>\n";
      out += "<text x=\"" + detail::svg_num(bx + 40.0) + "\" y=\"" +
             detail::svg_num(ry + 4.0) +
             "\" font-family=\"sans-serif\" font-size=\"12\" "
             "fill=\"#222222\">" +
             detail::xml_escape(series[i].label) + "</text>\n";
    }
  }

  out += "</svg>\n";
  return out;
}

inline void write_svg(const std::string& path,
                      const std::vector<PlotSeries>& series,
                      const std::string& title = "") {
  std::string doc = render_line_plot(series, title);
  std::ofstream out(path);
  if (!out) throw data_error("cannot open '" + path + "' for writing");
  out << doc;
  if (!out) throw data_error("write to '" + path + "' failed");
}

}  // namespace adafnn
