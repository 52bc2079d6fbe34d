#pragma once

// Minimal native SVG line plots with log-scaled axes.

#include <filesystem>
#include <string>
#include <vector>

namespace sop::bench {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Panel {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
};

// Panels are laid out side by side. Non-positive or non-finite points are
// dropped since both axes are logarithmic.
std::string render_loglog_svg(const std::vector<Panel>& panels);
void write_loglog_svg(const std::filesystem::path& path, const std::vector<Panel>& panels);

// Escapes &, <, >, " for XML text and attributes.
std::string xml_escape(const std::string& s);

}  // namespace sop::bench
