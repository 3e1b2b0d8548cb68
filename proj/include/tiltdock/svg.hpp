#pragma once

// Tiny deterministic SVG line plots: fixed canvas, fixed palette, numbers
// written through one formatter.  Identical inputs produce identical bytes,
// which the artifact-determinism checks rely on.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "tiltdock/io.hpp"

namespace tiltdock {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

namespace svg_detail {

inline const char* kPalette[6] = {"#1f77b4", "#d62728", "#2ca02c",
                                  "#9467bd", "#ff7f0e", "#17becf"};

inline std::string num(double v) { return format_number(v); }

// Round tick spacing to 1/2/5 decades covering the span.
inline double tick_step(double span) {
  if (span <= 0) return 1.0;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double r = raw / mag;
  if (r < 1.5) return mag;
  if (r < 3.5) return 2.0 * mag;
  if (r < 7.5) return 5.0 * mag;
  return 10.0 * mag;
}

}  // namespace svg_detail

// Renders series as polylines with axes, ticks and a legend.
inline std::string render_line_plot(const std::string& title, const std::string& x_label,
                                    const std::string& y_label,
                                    const std::vector<Series>& series) {
  using svg_detail::num;
  if (series.empty()) throw std::invalid_argument("plot needs at least one series");

  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  bool any = false;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("series length mismatch");
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!any) {
        x0 = x1 = s.x[i];
        y0 = y1 = s.y[i];
        any = true;
      } else {
        x0 = std::min(x0, s.x[i]);
        x1 = std::max(x1, s.x[i]);
        y0 = std::min(y0, s.y[i]);
        y1 = std::max(y1, s.y[i]);
      }
    }
  }
  if (!any) throw std::invalid_argument("plot has no finite points");
  if (x1 - x0 < 1e-12) { x0 -= 0.5; x1 += 0.5; }
  if (y1 - y0 < 1e-12) { y0 -= 0.5; y1 += 0.5; }
  const double pad_y = 0.05 * (y1 - y0);
  y0 -= pad_y;
  y1 += pad_y;

  const double W = 760, H = 420;
  const double ml = 70, mr = 20, mt = 34, mb = 46;
  const double pw = W - ml - mr, ph = H - mt - mb;
  auto px = [&](double x) { return ml + (x - x0) / (x1 - x0) * pw; };
  auto py = [&](double y) { return mt + (1.0 - (y - y0) / (y1 - y0)) * ph; };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" +
         num(H) + "\" viewBox=\"0 0 " + num(W) + " " + num(H) + "\">\n";
  out += "<rect width=\"" + num(W) + "\" height=\"" + num(H) + "\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(W / 2) + "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\""
         " font-size=\"15\">" + title + "</text>\n";

  // Grid and ticks.
  const double sx = svg_detail::tick_step(x1 - x0);
  const double sy = svg_detail::tick_step(y1 - y0);
  out += "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#444\">\n";
  for (double t = std::ceil(x0 / sx) * sx; t <= x1 + 1e-9 * sx; t += sx) {
    const double x = px(t);
    out += "<line x1=\"" + num(x) + "\" y1=\"" + num(mt) + "\" x2=\"" + num(x) + "\" y2=\"" +
           num(mt + ph) + "\" stroke=\"#ddd\"/>\n";
    out += "<text x=\"" + num(x) + "\" y=\"" + num(mt + ph + 16) +
           "\" text-anchor=\"middle\">" + num(t) + "</text>\n";
  }
  for (double t = std::ceil(y0 / sy) * sy; t <= y1 + 1e-9 * sy; t += sy) {
    const double y = py(t);
    out += "<line x1=\"" + num(ml) + "\" y1=\"" + num(y) + "\" x2=\"" + num(ml + pw) +
           "\" y2=\"" + num(y) + "\" stroke=\"#ddd\"/>\n";
    out += "<text x=\"" + num(ml - 6) + "\" y=\"" + num(y + 4) +
           "\" text-anchor=\"end\">" + num(t) + "</text>\n";
  }
  out += "</g>\n";

  // Axes frame and labels.
  out += "<rect x=\"" + num(ml) + "\" y=\"" + num(mt) + "\" width=\"" + num(pw) +
         "\" height=\"" + num(ph) + "\" fill=\"none\" stroke=\"#333\"/>\n";
  out += "<text x=\"" + num(ml + pw / 2) + "\" y=\"" + num(H - 8) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + x_label +
         "</text>\n";
  out += "<text x=\"16\" y=\"" + num(mt + ph / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\""
         " transform=\"rotate(-90 16 " + num(mt + ph / 2) + ")\">" + y_label + "</text>\n";

  // Series.
  for (size_t k = 0; k < series.size(); ++k) {
    const char* color = svg_detail::kPalette[k % 6];
    std::string pts;
    for (size_t i = 0; i < series[k].x.size(); ++i) {
      if (!std::isfinite(series[k].x[i]) || !std::isfinite(series[k].y[i])) continue;
      if (!pts.empty()) pts += ' ';
      pts += num(px(series[k].x[i])) + "," + num(py(series[k].y[i]));
    }
    out += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
           "\" stroke-width=\"1.4\" points=\"" + pts + "\"/>\n";
  }

  // Legend.
  out += "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (size_t k = 0; k < series.size(); ++k) {
    const double y = mt + 14 + 16 * static_cast<double>(k);
    out += "<line x1=\"" + num(ml + 8) + "\" y1=\"" + num(y - 4) + "\" x2=\"" + num(ml + 28) +
           "\" y2=\"" + num(y - 4) + "\" stroke=\"" + svg_detail::kPalette[k % 6] +
           "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + num(ml + 33) + "\" y=\"" + num(y) + "\">" + series[k].label +
           "</text>\n";
  }
  out += "</g>\n</svg>\n";
  return out;
}

}  // namespace tiltdock
