#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "cardioreg/types.hpp"

namespace cardioreg::plot {

struct Line {
  std::string label;
  std::vector<double> values;
};

/// Static SVG line chart of values against frame index.
std::string line_chart_svg(const std::string& title, const std::string& y_label, const std::vector<Line>& lines);

/// A labelled set of attribute series, e.g. "gt", "pred" or "cx".
struct SeriesSet {
  std::string label;
  std::vector<AttributeSeries> series;
};

/// Writes `<attribute>.svg` for every attribute present in any set.
std::vector<std::filesystem::path> write_attribute_plots(const std::vector<SeriesSet>& sets,
                                                         const std::filesystem::path& out_dir);

}  // namespace cardioreg::plot
