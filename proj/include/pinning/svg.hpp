#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace pinning::plot {

struct Series {
  enum class Kind { Line, Points };
  std::string label;
  Kind kind = Kind::Line;
  /// CSS class of the glyphs; series with the same class share a style.
  std::string css_class;
  std::vector<std::pair<double, double>> points;
};

struct Style {
  std::string title;
  std::string x_label = "x";
  std::string y_label = "y";
  int width = 900;
  int height = 500;
  /// Adds a generation-time comment. Off by default so reruns are
  /// byte-identical.
  bool timestamp = false;
};

/// Self-contained SVG document (inline CSS, no external references).
/// Throws InvalidArgument when there is nothing to draw.
std::string render_svg(std::span<const Series> series, const Style& style);

}  // namespace pinning::plot
