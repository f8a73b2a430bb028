#pragma once

// Minimal static SVG output: multi-line plots and a log-scale heatmap.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace dtmsas::svg {

struct Line {
  std::string label;
  std::vector<double> x, y;
};

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string palette(std::size_t i) {
  static const char* c[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                            "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return c[i % 10];
}

inline void line_plot(std::ostream& out, const std::vector<Line>& lines, const std::string& title,
                      const std::string& xlabel, const std::string& ylabel, const std::vector<double>& vmarks = {}) {
  const double W = 900, H = 500, L = 70, R = 150, T = 40, B = 50;
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& l : lines)
    for (std::size_t i = 0; i < l.x.size(); ++i) {
      if (!std::isfinite(l.y[i])) continue;
      x0 = std::min(x0, l.x[i]);
      x1 = std::max(x1, l.x[i]);
      y0 = std::min(y0, l.y[i]);
      y1 = std::max(y1, l.y[i]);
    }
  if (!(x1 > x0)) x1 = x0 + 1.0;
  if (!(y1 > y0)) {
    y0 -= 0.5;
    y1 += 0.5;
  }
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << title << "</text>\n";
  out << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double xv = x0 + (x1 - x0) * i / 5.0, yv = y0 + (y1 - y0) * i / 5.0;
    out << "<text x=\"" << px(xv) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\">" << num(xv) << "</text>\n";
    out << "<text x=\"" << L - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << num(yv) << "</text>\n";
  }
  out << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  out << "<text x=\"16\" y=\"" << (T + H - B) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << (T + H - B) / 2 << ")\">" << ylabel << "</text>\n";
  for (double m : vmarks)
    out << "<line x1=\"" << px(m) << "\" x2=\"" << px(m) << "\" y1=\"" << T << "\" y2=\"" << H - B
        << "\" stroke=\"#ccc\" stroke-dasharray=\"3,3\"/>\n";
  for (std::size_t k = 0; k < lines.size(); ++k) {
    const auto& l = lines[k];
    out << "<polyline fill=\"none\" stroke=\"" << palette(k) << "\" stroke-width=\"1.3\" points=\"";
    for (std::size_t i = 0; i < l.x.size(); ++i)
      if (std::isfinite(l.y[i])) out << num(px(l.x[i])) << ',' << num(py(l.y[i])) << ' ';
    out << "\"/>\n";
    const double ly = T + 14 + 16 * static_cast<double>(k);
    out << "<line x1=\"" << W - R + 10 << "\" x2=\"" << W - R + 30 << "\" y1=\"" << ly - 4 << "\" y2=\"" << ly - 4
        << "\" stroke=\"" << palette(k) << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << W - R + 36 << "\" y=\"" << ly << "\">" << l.label << "</text>\n";
  }
  out << "</svg>\n";
}

/// Cells (col, row, value); colour by log10(value), non-finite drawn black.
struct Cell {
  std::size_t col, row;
  double value;
};

inline void heatmap(std::ostream& out, const std::vector<Cell>& cells, const std::vector<std::string>& col_labels,
                    const std::vector<std::string>& row_labels, const std::string& title, const std::string& xlabel,
                    const std::string& ylabel) {
  const double cw = 44, ch = 24, L = 90, T = 40;
  const double W = L + cw * static_cast<double>(col_labels.size()) + 120;
  const double H = T + ch * static_cast<double>(row_labels.size()) + 60;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& c : cells)
    if (std::isfinite(c.value) && c.value > 0) {
      lo = std::min(lo, std::log10(c.value));
      hi = std::max(hi, std::log10(c.value));
    }
  if (!(hi > lo)) hi = lo + 1.0;
  auto colour = [&](double v) -> std::string {
    if (!std::isfinite(v)) return "#000000";
    const double f = v > 0 ? std::clamp((std::log10(v) - lo) / (hi - lo), 0.0, 1.0) : 0.0;
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(255 * f), static_cast<int>(80 + 100 * (1 - f)),
                  static_cast<int>(255 * (1 - f)));
    return buf;
  };
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << title << "</text>\n";
  const auto nrow = row_labels.size();
  for (const auto& c : cells) {
    const double x = L + cw * static_cast<double>(c.col);
    const double y = T + ch * static_cast<double>(nrow - 1 - c.row);
    out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cw << "\" height=\"" << ch << "\" fill=\""
        << colour(c.value) << "\"><title>" << num(c.value) << "</title></rect>\n";
  }
  for (std::size_t i = 0; i < col_labels.size(); ++i)
    out << "<text x=\"" << L + cw * (static_cast<double>(i) + 0.5) << "\" y=\""
        << T + ch * static_cast<double>(nrow) + 14 << "\" text-anchor=\"middle\">" << col_labels[i] << "</text>\n";
  for (std::size_t r = 0; r < nrow; ++r)
    out << "<text x=\"" << L - 6 << "\" y=\"" << T + ch * (static_cast<double>(nrow - 1 - r) + 0.65)
        << "\" text-anchor=\"end\">" << row_labels[r] << "</text>\n";
  out << "<text x=\"" << L + cw * static_cast<double>(col_labels.size()) / 2 << "\" y=\"" << H - 12
      << "\" text-anchor=\"middle\">" << xlabel << "</text>\n";
  out << "<text x=\"14\" y=\"" << T + ch * static_cast<double>(nrow) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
      << T + ch * static_cast<double>(nrow) / 2 << ")\">" << ylabel << "</text>\n";
  out << "<text x=\"" << W - 110 << "\" y=\"" << T + 10 << "\">log10 err: " << num(lo) << " .. " << num(hi)
      << "</text>\n";
  out << "</svg>\n";
}

}  // namespace dtmsas::svg
