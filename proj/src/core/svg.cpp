#include "pinning/svg.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <limits>
#include <sstream>

#include "pinning/error.hpp"

namespace pinning::plot {

namespace {

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string class_name(const Series& s, std::size_t index) {
  return s.css_class.empty() ? "s" + std::to_string(index) : s.css_class;
}

}  // namespace

std::string render_svg(std::span<const Series> series, const Style& style) {
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  std::size_t total = 0;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      x_lo = std::min(x_lo, x);
      x_hi = std::max(x_hi, x);
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
      ++total;
    }
  }
  require(total > 0, "render_svg: nothing to plot");
  require(style.width > 100 && style.height > 100, "render_svg: canvas too small");
  if (x_hi == x_lo) x_hi = x_lo + 1;
  if (y_hi == y_lo) y_hi = y_lo + 1;

  const double left = 70, right = 20, top = 40, bottom = 50;
  const double pw = style.width - left - right;
  const double ph = style.height - top - bottom;
  auto px = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double y) { return top + (1 - (y - y_lo) / (y_hi - y_lo)) * ph; };

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << style.width << "\" height=\"" << style.height
     << "\" viewBox=\"0 0 " << style.width << ' ' << style.height << "\">\n";
  if (style.timestamp) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    os << "<!-- generated " << buf << " -->\n";
  }
  os << "<style>\n";
  os << "text{font-family:sans-serif;font-size:12px}\n.axis{stroke:#333;stroke-width:1;fill:none}\n";
  std::vector<std::string> styled;
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::string cls = class_name(series[i], i);
    if (std::find(styled.begin(), styled.end(), cls) != styled.end()) continue;
    styled.push_back(cls);
    const char* color = kPalette[(styled.size() - 1) % std::size(kPalette)];
    if (series[i].kind == Series::Kind::Line) {
      os << '.' << cls << "{stroke:" << color << ";stroke-width:1.5;fill:none}\n";
    } else {
      os << '.' << cls << "{fill:" << color << ";stroke:none}\n";
    }
  }
  os << "</style>\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << style.width << "\" height=\"" << style.height << "\" fill=\"white\"/>\n";
  if (!style.title.empty()) {
    os << "<text x=\"" << num(style.width / 2.0) << "\" y=\"22\" text-anchor=\"middle\">" << escape(style.title)
       << "</text>\n";
  }
  os << "<rect class=\"axis\" x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(pw)
     << "\" height=\"" << num(ph) << "\"/>\n";
  os << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(style.height - 12.0)
     << "\" text-anchor=\"middle\">" << escape(style.x_label) << "</text>\n";
  os << "<text x=\"16\" y=\"" << num(top + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << num(top + ph / 2) << ")\">" << escape(style.y_label) << "</text>\n";
  auto tick = [&](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return std::string(buf);
  };
  os << "<text x=\"" << num(left) << "\" y=\"" << num(top + ph + 16) << "\" text-anchor=\"start\">" << tick(x_lo)
     << "</text>\n";
  os << "<text x=\"" << num(left + pw) << "\" y=\"" << num(top + ph + 16) << "\" text-anchor=\"end\">"
     << tick(x_hi) << "</text>\n";
  os << "<text x=\"" << num(left - 6) << "\" y=\"" << num(top + ph) << "\" text-anchor=\"end\">" << tick(y_lo)
     << "</text>\n";
  os << "<text x=\"" << num(left - 6) << "\" y=\"" << num(top + 10) << "\" text-anchor=\"end\">" << tick(y_hi)
     << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    if (s.points.empty()) continue;
    const std::string cls = class_name(s, i);
    os << "<g><title>" << escape(s.label) << "</title>\n";
    if (s.kind == Series::Kind::Line) {
      os << "<polyline class=\"" << cls << "\" points=\"";
      bool first = true;
      for (const auto& [x, y] : s.points) {
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        os << (first ? "" : " ") << num(px(x)) << ',' << num(py(y));
        first = false;
      }
      os << "\"/>\n";
    } else {
      for (const auto& [x, y] : s.points) {
        if (!std::isfinite(x) || !std::isfinite(y)) continue;
        os << "<circle class=\"" << cls << "\" cx=\"" << num(px(x)) << "\" cy=\"" << num(py(y)) << "\" r=\"2\"/>\n";
      }
    }
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace pinning::plot
