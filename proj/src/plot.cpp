#include "wirefit/plot.hpp"

#include <algorithm>
#include <cstdio>

#include "wirefit/errors.hpp"

namespace wirefit {

namespace {

constexpr double kWidth = 640.0, kHeight = 420.0;
constexpr double kLeft = 70.0, kRight = 24.0, kTop = 44.0, kBottom = 56.0;
constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                    "#ff7f0e", "#8c564b"};
constexpr const char* kFont = "font-family=\"DejaVu Sans, Arial, sans-serif\"";

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (const char c : s) {
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

struct Bounds {
  double lo, hi;

  double map(double v, double px_lo, double px_hi) const {
    return px_lo + (v - lo) / (hi - lo) * (px_hi - px_lo);
  }
};

Bounds bounds_of(const std::vector<Series>& series, bool y_axis) {
  double lo = series[0].x[0], hi = lo;
  bool first = true;
  for (const auto& s : series) {
    const auto& vals = y_axis ? s.y : s.x;
    for (const double v : vals) {
      if (first) {
        lo = hi = v;
        first = false;
      } else {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
  }
  if (hi - lo < 1e-12) {
    lo -= 1.0;
    hi += 1.0;
  } else {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  return {lo, hi};
}

}  // namespace

std::string render_line_chart(const std::string& title, const std::string& x_label,
                              const std::string& y_label,
                              const std::vector<Series>& series) {
  if (series.empty()) throw DegenerateInputError("render_line_chart: no series");
  for (const auto& s : series) {
    if (s.x.empty() || s.x.size() != s.y.size()) {
      throw DegenerateInputError("render_line_chart: series '" + s.label +
                                 "' is empty or ragged");
    }
  }
  const Bounds bx = bounds_of(series, false);
  const Bounds by = bounds_of(series, true);
  const double px_lo = kLeft, px_hi = kWidth - kRight;
  const double py_lo = kHeight - kBottom, py_hi = kTop;  // y grows upward

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) +
         "\" height=\"" + fmt(kHeight) + "\" viewBox=\"0 0 " + fmt(kWidth) + " " +
         fmt(kHeight) + "\">\n";
  svg += "<rect width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) +
         "\" fill=\"#ffffff\"/>\n";
  svg += "<text x=\"" + fmt(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" " + kFont +
         " font-size=\"15\" fill=\"#202020\">" + escape_xml(title) + "</text>\n";

  // Axes frame, ticks, and grid.
  svg += "<rect x=\"" + fmt(px_lo) + "\" y=\"" + fmt(py_hi) + "\" width=\"" +
         fmt(px_hi - px_lo) + "\" height=\"" + fmt(py_lo - py_hi) +
         "\" fill=\"none\" stroke=\"#404040\" stroke-width=\"1\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double xv = bx.lo + i * (bx.hi - bx.lo) / 4.0;
    const double yv = by.lo + i * (by.hi - by.lo) / 4.0;
    const double xp = bx.map(xv, px_lo, px_hi);
    const double yp = by.map(yv, py_lo, py_hi);
    if (i > 0 && i < 4) {
      svg += "<line x1=\"" + fmt(xp) + "\" y1=\"" + fmt(py_lo) + "\" x2=\"" + fmt(xp) +
             "\" y2=\"" + fmt(py_hi) + "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
      svg += "<line x1=\"" + fmt(px_lo) + "\" y1=\"" + fmt(yp) + "\" x2=\"" + fmt(px_hi) +
             "\" y2=\"" + fmt(yp) + "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
    }
    svg += "<text x=\"" + fmt(xp) + "\" y=\"" + fmt(py_lo + 18) +
           "\" text-anchor=\"middle\" " + kFont + " font-size=\"11\" fill=\"#404040\">" +
           fmt(xv) + "</text>\n";
    svg += "<text x=\"" + fmt(px_lo - 8) + "\" y=\"" + fmt(yp + 4) +
           "\" text-anchor=\"end\" " + kFont + " font-size=\"11\" fill=\"#404040\">" +
           fmt(yv) + "</text>\n";
  }
  svg += "<text x=\"" + fmt((px_lo + px_hi) / 2) + "\" y=\"" + fmt(kHeight - 14) +
         "\" text-anchor=\"middle\" " + kFont + " font-size=\"12\" fill=\"#202020\">" +
         escape_xml(x_label) + "</text>\n";
  svg += "<text x=\"18\" y=\"" + fmt((py_lo + py_hi) / 2) + "\" text-anchor=\"middle\" " +
         kFont + " font-size=\"12\" fill=\"#202020\" transform=\"rotate(-90 18 " +
         fmt((py_lo + py_hi) / 2) + ")\">" + escape_xml(y_label) + "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const char* color = kPalette[si % (sizeof kPalette / sizeof kPalette[0])];
    std::string points;
    for (std::size_t i = 0; i < series[si].x.size(); ++i) {
      if (i > 0) points += " ";
      points += fmt(bx.map(series[si].x[i], px_lo, px_hi)) + "," +
                fmt(by.map(series[si].y[i], py_lo, py_hi));
    }
    svg += "<polyline points=\"" + points + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    for (std::size_t i = 0; i < series[si].x.size(); ++i) {
      svg += "<circle cx=\"" + fmt(bx.map(series[si].x[i], px_lo, px_hi)) + "\" cy=\"" +
             fmt(by.map(series[si].y[i], py_lo, py_hi)) + "\" r=\"2.5\" fill=\"" + color +
             "\"/>\n";
    }
    // Legend entry, top-right stack.
    const double ly = py_hi + 14 + 16.0 * static_cast<double>(si);
    svg += "<line x1=\"" + fmt(px_hi - 130) + "\" y1=\"" + fmt(ly - 4) + "\" x2=\"" +
           fmt(px_hi - 106) + "\" y2=\"" + fmt(ly - 4) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    svg += "<text x=\"" + fmt(px_hi - 100) + "\" y=\"" + fmt(ly) + "\" " + kFont +
           " font-size=\"11\" fill=\"#202020\">" + escape_xml(series[si].label) +
           "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace wirefit
