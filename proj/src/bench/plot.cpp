#include "sop/bench/plot.hpp"

#include "sop/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace sop::bench {

namespace {

constexpr double kPanelWidth = 480.0;
constexpr double kPanelHeight = 360.0;
constexpr double kMarginLeft = 70.0;
constexpr double kMarginRight = 20.0;
constexpr double kMarginTop = 40.0;
constexpr double kMarginBottom = 50.0;

constexpr std::array<const char*, 8> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                "#9467bd", "#8c564b", "#e377c2", "#17becf"};

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void add(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool empty() const { return !(lo <= hi); }
};

bool usable(double v) { return std::isfinite(v) && v > 0.0; }

// Decade bounds of the log10 range, widened to at least one decade.
Range decades(const Range& r) {
  Range out;
  if (r.empty()) {
    out.lo = 0.0;
    out.hi = 1.0;
    return out;
  }
  out.lo = std::floor(std::log10(r.lo));
  out.hi = std::ceil(std::log10(r.hi));
  if (out.hi <= out.lo) out.hi = out.lo + 1.0;
  return out;
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

void render_panel(std::ostringstream& svg, const Panel& panel, double x0) {
  Range xr, yr;
  for (const auto& s : panel.series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      if (usable(s.x[i]) && usable(s.y[i])) {
        xr.add(s.x[i]);
        yr.add(s.y[i]);
      }
  const Range xd = decades(xr), yd = decades(yr);
  const double w = kPanelWidth - kMarginLeft - kMarginRight;
  const double h = kPanelHeight - kMarginTop - kMarginBottom;
  auto px = [&](double x) { return x0 + kMarginLeft + (std::log10(x) - xd.lo) / (xd.hi - xd.lo) * w; };
  auto py = [&](double y) { return kMarginTop + (yd.hi - std::log10(y)) / (yd.hi - yd.lo) * h; };

  svg << "<g>\n";
  svg << "<text x=\"" << fmt(x0 + kPanelWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << xml_escape(panel.title) << "</text>\n";
  svg << "<rect x=\"" << fmt(x0 + kMarginLeft) << "\" y=\"" << fmt(kMarginTop) << "\" width=\"" << fmt(w)
      << "\" height=\"" << fmt(h) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double d = xd.lo; d <= xd.hi + 1e-9; d += 1.0) {
    const double x = x0 + kMarginLeft + (d - xd.lo) / (xd.hi - xd.lo) * w;
    svg << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(kMarginTop) << "\" x2=\"" << fmt(x) << "\" y2=\""
        << fmt(kMarginTop + h) << "\" stroke=\"#ddd\"/>\n";
    svg << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(kMarginTop + h + 16)
        << "\" text-anchor=\"middle\" font-size=\"10\">1e" << fmt(d) << "</text>\n";
  }
  for (double d = yd.lo; d <= yd.hi + 1e-9; d += 1.0) {
    const double y = kMarginTop + (yd.hi - d) / (yd.hi - yd.lo) * h;
    svg << "<line x1=\"" << fmt(x0 + kMarginLeft) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(x0 + kMarginLeft + w)
        << "\" y2=\"" << fmt(y) << "\" stroke=\"#ddd\"/>\n";
    svg << "<text x=\"" << fmt(x0 + kMarginLeft - 6) << "\" y=\"" << fmt(y + 3)
        << "\" text-anchor=\"end\" font-size=\"10\">1e" << fmt(d) << "</text>\n";
  }
  svg << "<text x=\"" << fmt(x0 + kMarginLeft + w / 2) << "\" y=\"" << fmt(kPanelHeight - 12)
      << "\" text-anchor=\"middle\" font-size=\"12\">" << xml_escape(panel.x_label) << "</text>\n";
  svg << "<text x=\"" << fmt(x0 + 16) << "\" y=\"" << fmt(kMarginTop + h / 2) << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 "
      << fmt(x0 + 16) << " " << fmt(kMarginTop + h / 2) << ")\">" << xml_escape(panel.y_label) << "</text>\n";

  for (std::size_t k = 0; k < panel.series.size(); ++k) {
    const auto& s = panel.series[k];
    const char* color = kColors[k % kColors.size()];
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i)
      if (usable(s.x[i]) && usable(s.y[i])) svg << fmt(px(s.x[i])) << "," << fmt(py(s.y[i])) << " ";
    svg << "\"/>\n";
    const double ly = kMarginTop + 14.0 + 14.0 * double(k);
    svg << "<line x1=\"" << fmt(x0 + kMarginLeft + w - 120) << "\" y1=\"" << fmt(ly - 4) << "\" x2=\""
        << fmt(x0 + kMarginLeft + w - 100) << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/>\n";
    svg << "<text x=\"" << fmt(x0 + kMarginLeft + w - 95) << "\" y=\"" << fmt(ly)
        << "\" font-size=\"10\">" << xml_escape(s.label) << "</text>\n";
  }
  svg << "</g>\n";
}

}  // namespace

std::string xml_escape(const std::string& s) {
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

std::string render_loglog_svg(const std::vector<Panel>& panels) {
  std::ostringstream svg;
  const double width = kPanelWidth * double(std::max<std::size_t>(1, panels.size()));
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width) << "\" height=\""
      << fmt(kPanelHeight) << "\" viewBox=\"0 0 " << fmt(width) << " " << fmt(kPanelHeight) << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t p = 0; p < panels.size(); ++p) render_panel(svg, panels[p], kPanelWidth * double(p));
  svg << "</svg>\n";
  return svg.str();
}

void write_loglog_svg(const std::filesystem::path& path, const std::vector<Panel>& panels) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << render_loglog_svg(panels);
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace sop::bench
