#include "cardioreg/svg_plot.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

#include "cardioreg/error.hpp"
#include "cardioreg/seqio.hpp"

namespace cardioreg::plot {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 360.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 130.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;
constexpr std::array<const char*, 6> kColors = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

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

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

}  // namespace

std::string line_chart_svg(const std::string& title, const std::string& y_label, const std::vector<Line>& lines) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  std::size_t n = 0;
  for (const auto& l : lines) {
    n = std::max(n, l.values.size());
    for (double v : l.values) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  const double xmax = n > 1 ? static_cast<double>(n - 1) : 1.0;
  auto px = [&](double t) { return kLeft + pw * t / xmax; };
  auto py = [&](double v) { return kTop + ph * (hi - v) / (hi - lo); };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) + "\" height=\"" + num(kHeight) +
       "\" viewBox=\"0 0 " + num(kWidth) + " " + num(kHeight) + "\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + num(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
       escape(title) + "</text>\n";
  s += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" + num(pw) + "\" height=\"" + num(ph) +
       "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = lo + (hi - lo) * i / 4.0;
    s += "<text x=\"" + num(kLeft - 6) + "\" y=\"" + num(py(v) + 4) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" + tick(v) + "</text>\n";
    s += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(py(v)) + "\" x2=\"" + num(kLeft + pw) + "\" y2=\"" + num(py(v)) +
         "\" stroke=\"#ddd\"/>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double t = xmax * i / 4.0;
    s += "<text x=\"" + num(px(t)) + "\" y=\"" + num(kTop + ph + 16) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + tick(t) + "</text>\n";
  }
  s += "<text x=\"" + num(kLeft + pw / 2) + "\" y=\"" + num(kHeight - 10) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">frame</text>\n";
  s += "<text x=\"16\" y=\"" + num(kTop + ph / 2) + "\" transform=\"rotate(-90 16 " + num(kTop + ph / 2) +
       ")\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" + escape(y_label) + "</text>\n";
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& l = lines[i];
    const char* color = kColors[i % kColors.size()];
    std::string pts;
    for (std::size_t t = 0; t < l.values.size(); ++t) {
      if (!std::isfinite(l.values[t])) continue;
      pts += num(px(static_cast<double>(t))) + "," + num(py(l.values[t])) + " ";
    }
    s += "<polyline fill=\"none\" stroke=\"" + std::string(color) + "\" stroke-width=\"1.8\" points=\"" + pts + "\"/>\n";
    const double ly = kTop + 14 + 18 * static_cast<double>(i);
    s += "<line x1=\"" + num(kWidth - kRight + 12) + "\" y1=\"" + num(ly) + "\" x2=\"" + num(kWidth - kRight + 36) +
         "\" y2=\"" + num(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    s += "<text x=\"" + num(kWidth - kRight + 42) + "\" y=\"" + num(ly + 4) +
         "\" font-family=\"sans-serif\" font-size=\"12\">" + escape(l.label) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

std::vector<std::filesystem::path> write_attribute_plots(const std::vector<SeriesSet>& sets,
                                                         const std::filesystem::path& out_dir) {
  if (sets.empty()) throw Error(ErrorCode::empty_input, "nothing to plot");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<std::filesystem::path> written;
  for (auto a : kAllAttributes) {
    std::vector<Line> lines;
    for (const auto& set : sets)
      for (const auto& s : set.series)
        if (s.attribute == a) lines.push_back({set.label, s.values});
    if (lines.empty()) continue;
    const std::string name(attribute_name(a));
    const auto path = out_dir / (name + ".svg");
    const bool normalized = std::all_of(sets.begin(), sets.end(), [&](const SeriesSet& set) {
      return std::all_of(set.series.begin(), set.series.end(), [](const AttributeSeries& s) { return s.normalized; });
    });
    seqio::write_text_file(path, line_chart_svg(name, normalized ? name + " (normalized)" : name, lines));
    written.push_back(path);
  }
  return written;
}

}  // namespace cardioreg::plot
