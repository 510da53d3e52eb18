#include "specdiff/svg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace specdiff::svg {

namespace {

constexpr double kWidth = 640, kHeight = 400;
constexpr double kLeft = 70, kRight = 160, kTop = 40, kBottom = 50;
constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

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

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!(hi >= lo)) lo = 0, hi = 1;
    if (hi == lo) {
      const double pad = std::max(std::abs(lo) * 0.05, 1e-12);
      lo -= pad;
      hi += pad;
    }
  }
};

void panel(std::ostream& out, const Plot& p, double y0) {
  Range xr, yr;
  for (const auto& s : p.series) {
    for (double v : s.x) xr.add(v);
    for (double v : s.y) yr.add(v);
  }
  xr.finish();
  yr.finish();
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  const auto X = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  const auto Y = [&](double y) { return y0 + kTop + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  fmt::print(out, "<g>\n<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", kLeft,
             y0 + kTop, pw, ph);
  fmt::print(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n", kLeft + pw / 2,
             y0 + kTop - 12, escape(p.title));
  fmt::print(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\">{}</text>\n", kLeft + pw / 2,
             y0 + kHeight - 10, escape(p.x_label));
  fmt::print(out, "<text x=\"16\" y=\"{}\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 {})\">{}</text>\n",
             y0 + kTop + ph / 2, y0 + kTop + ph / 2, escape(p.y_label));
  for (int i = 0; i <= 4; ++i) {
    const double xv = xr.lo + (xr.hi - xr.lo) * i / 4, yv = yr.lo + (yr.hi - yr.lo) * i / 4;
    fmt::print(out, "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\" font-size=\"10\">{:.3g}</text>\n", X(xv),
               y0 + kTop + ph + 14, xv);
    fmt::print(out, "<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\" font-size=\"10\">{:.3g}</text>\n", kLeft - 4,
               Y(yv) + 3, yv);
  }

  for (std::size_t k = 0; k < p.series.size(); ++k) {
    const auto& s = p.series[k];
    const char* color = kColors[k % std::size(kColors)];
    const std::size_t n = std::min(s.x.size(), s.y.size());
    if (s.markers) {
      for (std::size_t i = 0; i < n; ++i)
        if (std::isfinite(s.x[i]) && std::isfinite(s.y[i]))
          fmt::print(out, "<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"3\" fill=\"{}\"/>\n", X(s.x[i]), Y(s.y[i]), color);
    } else {
      fmt::print(out, "<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.5\"{} points=\"", color,
                 s.dashed ? " stroke-dasharray=\"6 4\"" : "");
      for (std::size_t i = 0; i < n; ++i)
        if (std::isfinite(s.x[i]) && std::isfinite(s.y[i])) fmt::print(out, "{:.2f},{:.2f} ", X(s.x[i]), Y(s.y[i]));
      fmt::print(out, "\"/>\n");
    }
    const double ly = y0 + kTop + 14 + 16 * static_cast<double>(k);
    fmt::print(out, "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"{}\"{}/>\n", kWidth - kRight + 10, ly - 4,
               kWidth - kRight + 30, ly - 4, color, s.dashed ? " stroke-dasharray=\"6 4\"" : "");
    fmt::print(out, "<text x=\"{}\" y=\"{}\" font-size=\"10\">{}</text>\n", kWidth - kRight + 34, ly, escape(s.label));
  }
  fmt::print(out, "</g>\n");
}

}  // namespace

void write_panels(std::ostream& out, const std::vector<Plot>& panels) {
  fmt::print(out, "<!-- specdiff 0.1.0 -->\n");
  fmt::print(out, "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" font-family=\"sans-serif\">\n",
             kWidth, kHeight * static_cast<double>(panels.size()));
  fmt::print(out, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
  for (std::size_t i = 0; i < panels.size(); ++i) panel(out, panels[i], kHeight * static_cast<double>(i));
  fmt::print(out, "</svg>\n");
}

void write(std::ostream& out, const Plot& plot) { write_panels(out, {plot}); }

}  // namespace specdiff::svg
