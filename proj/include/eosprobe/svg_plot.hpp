#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace eosprobe::plot {

enum class LineStyle { solid, dotted };

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  LineStyle style = LineStyle::solid;
  int color = 0;  // palette index; same color for solid/dotted pairs
};

struct Figure {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool logx = false;
  bool logy = false;  // use for axes spanning decades (rho, gradient norms)
  std::vector<Series> series;
};

/// Minimal static SVG renderer: axes, ticks, polylines, legend. NaN points
/// (and non-positive points on log axes) split the polyline. Throws if there
/// is nothing to draw.
void write_svg(const Figure& fig, const std::filesystem::path& path);

}  // namespace eosprobe::plot
