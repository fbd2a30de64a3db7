#include "eosprobe/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "eosprobe/errors.hpp"

namespace eosprobe::plot {

namespace {

constexpr double kW = 860, kH = 540;
constexpr double kL = 78, kR = 230, kT = 46, kB = 64;  // margins (legend on the right)

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
constexpr int kPaletteSize = 8;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

struct AxisRange {
  double lo = 0, hi = 1;
  bool log = false;
  double map(double v, double px0, double px1) const {
    const double a = log ? std::log10(v) : v;
    const double l = log ? std::log10(lo) : lo;
    const double h = log ? std::log10(hi) : hi;
    const double f = (a - l) / (h - l);
    return px0 + f * (px1 - px0);
  }
};

bool usable(double v, bool log) { return std::isfinite(v) && (!log || v > 0.0); }

AxisRange fit_axis(const Figure& fig, bool is_x) {
  const bool log = is_x ? fig.logx : fig.logy;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& s : fig.series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double xv = s.x[i], yv = s.y[i];
      if (!usable(xv, fig.logx) || !usable(yv, fig.logy)) continue;
      const double v = is_x ? xv : yv;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(lo <= hi)) throw IoError("plot '" + fig.title + "': no drawable points");
  if (log) {
    if (lo == hi) {
      lo /= 2;
      hi *= 2;
    }
  } else {
    if (lo == hi) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.04 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  return {lo, hi, log};
}

std::vector<double> linear_ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) {
      step = m * mag;
      break;
    }
  }
  std::vector<double> ticks;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-12 * span; v += step)
    ticks.push_back(std::abs(v) < 1e-12 * span ? 0.0 : v);
  return ticks;
}

std::vector<double> log_ticks(double lo, double hi) {
  std::vector<double> ticks;
  const int d0 = static_cast<int>(std::ceil(std::log10(lo) - 1e-9));
  const int d1 = static_cast<int>(std::floor(std::log10(hi) + 1e-9));
  for (int d = d0; d <= d1; ++d) ticks.push_back(std::pow(10.0, d));
  if (ticks.empty()) ticks = {lo, hi};
  return ticks;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&')
      out += "&amp;";
    else if (c == '<')
      out += "&lt;";
    else if (c == '>')
      out += "&gt;";
    else
      out += c;
  }
  return out;
}

}  // namespace

void write_svg(const Figure& fig, const std::filesystem::path& path) {
  if (fig.series.empty()) throw IoError("plot '" + fig.title + "': no series to draw");
  const AxisRange xa = fit_axis(fig, true);
  const AxisRange ya = fit_axis(fig, false);

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
      << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
  svg << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";
  svg << "<text x=\"" << (kL + (kW - kR - kL) / 2) << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << escape(fig.title) << "</text>\n";

  const double px0 = kL, px1 = kW - kR, py0 = kH - kB, py1 = kT;

  // Ticks and grid.
  const auto xticks = xa.log ? log_ticks(xa.lo, xa.hi) : linear_ticks(xa.lo, xa.hi);
  const auto yticks = ya.log ? log_ticks(ya.lo, ya.hi) : linear_ticks(ya.lo, ya.hi);
  svg << "<g font-family=\"sans-serif\" font-size=\"11\" fill=\"#444\">\n";
  for (double v : xticks) {
    const double px = xa.map(v, px0, px1);
    svg << "<line x1=\"" << px << "\" y1=\"" << py0 << "\" x2=\"" << px << "\" y2=\"" << py1
        << "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << px << "\" y=\"" << (py0 + 18) << "\" text-anchor=\"middle\">" << num(v)
        << "</text>\n";
  }
  for (double v : yticks) {
    const double py = ya.map(v, py0, py1);
    svg << "<line x1=\"" << px0 << "\" y1=\"" << py << "\" x2=\"" << px1 << "\" y2=\"" << py
        << "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n";
    svg << "<text x=\"" << (px0 - 6) << "\" y=\"" << (py + 4) << "\" text-anchor=\"end\">" << num(v)
        << "</text>\n";
  }
  svg << "</g>\n";

  // Axes.
  svg << "<line x1=\"" << px0 << "\" y1=\"" << py0 << "\" x2=\"" << px1 << "\" y2=\"" << py0
      << "\" stroke=\"black\" stroke-width=\"1.2\"/>\n";
  svg << "<line x1=\"" << px0 << "\" y1=\"" << py0 << "\" x2=\"" << px0 << "\" y2=\"" << py1
      << "\" stroke=\"black\" stroke-width=\"1.2\"/>\n";
  svg << "<text x=\"" << (px0 + (px1 - px0) / 2) << "\" y=\"" << (kH - 18)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
      << escape(fig.xlabel) << "</text>\n";
  svg << "<text x=\"20\" y=\"" << (py1 + (py0 - py1) / 2)
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
      << "transform=\"rotate(-90 20 " << (py1 + (py0 - py1) / 2) << ")\">" << escape(fig.ylabel)
      << "</text>\n";

  // Series.
  bool any_points = false;
  for (const auto& s : fig.series) {
    if (s.x.size() != s.y.size())
      throw IoError("plot '" + fig.title + "': series '" + s.label + "' x/y length mismatch");
    const char* color = kPalette[((s.color % kPaletteSize) + kPaletteSize) % kPaletteSize];
    std::ostringstream points;
    bool open = false;
    auto flush = [&]() {
      if (!open) return;
      svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.8\"";
      if (s.style == LineStyle::dotted) svg << " stroke-dasharray=\"2.5,3.5\"";
      svg << " points=\"" << points.str() << "\"/>\n";
      points.str("");
      open = false;
    };
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!usable(s.x[i], xa.log) || !usable(s.y[i], ya.log)) {
        flush();
        continue;
      }
      points << xa.map(s.x[i], px0, px1) << "," << ya.map(s.y[i], py0, py1) << " ";
      open = true;
      any_points = true;
    }
    flush();
  }
  if (!any_points) throw IoError("plot '" + fig.title + "': no drawable points");

  // Legend.
  double ly = kT + 10;
  svg << "<g font-family=\"sans-serif\" font-size=\"12\">\n";
  for (const auto& s : fig.series) {
    const char* color = kPalette[((s.color % kPaletteSize) + kPaletteSize) % kPaletteSize];
    svg << "<line x1=\"" << (kW - kR + 14) << "\" y1=\"" << ly << "\" x2=\"" << (kW - kR + 44)
        << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"1.8\"";
    if (s.style == LineStyle::dotted) svg << " stroke-dasharray=\"2.5,3.5\"";
    svg << "/>\n";
    svg << "<text x=\"" << (kW - kR + 50) << "\" y=\"" << (ly + 4) << "\">" << escape(s.label)
        << "</text>\n";
    ly += 18;
  }
  svg << "</g>\n</svg>\n";

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << svg.str();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace eosprobe::plot
