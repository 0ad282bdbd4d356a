#include "cardioreg/consistency.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "cardioreg/error.hpp"
#include "cardioreg/seqio.hpp"

namespace cardioreg::consistency {

double Thresholds::at(Attribute a) const {
  const auto& v = tau[static_cast<std::size_t>(a)];
  if (!v) throw Error(ErrorCode::missing_threshold, "no threshold for " + std::string(attribute_name(a)));
  return *v;
}

void Thresholds::set(Attribute a, double value) {
  if (!(value > 0.0) || !std::isfinite(value))
    throw Error(ErrorCode::invalid_argument, "threshold must be positive and finite");
  tau[static_cast<std::size_t>(a)] = value;
}

std::vector<double> laplacian(std::span<const double> s) {
  const std::size_t n = s.size();
  if (n < 3) throw Error(ErrorCode::sequence_too_short, "laplacian needs at least 3 frames, got " + std::to_string(n));
  std::vector<double> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double prev = s[t == 0 ? 0 : t - 1];
    const double next = s[t + 1 == n ? n - 1 : t + 1];
    out[t] = next + prev - 2.0 * s[t];
  }
  return out;
}

std::vector<double> laplacian(const AttributeSeries& s) {
  if (!s.normalized) throw Error(ErrorCode::invalid_argument, "laplacian expects a normalized series");
  return laplacian(std::span<const double>(s.values));
}

std::vector<bool> indicator(std::span<const double> s, double tau) {
  const auto lap = laplacian(s);
  std::vector<bool> out(lap.size());
  for (std::size_t t = 0; t < lap.size(); ++t) out[t] = std::abs(lap[t]) > tau;
  return out;
}

std::vector<bool> indicator(const AttributeSeries& s, const Thresholds& tau) {
  if (!s.normalized) throw Error(ErrorCode::invalid_argument, "indicator expects a normalized series");
  return indicator(std::span<const double>(s.values), tau.at(s.attribute));
}

bool any_flag(std::span<const double> s, double tau) {
  const auto flags = indicator(s, tau);
  return std::find(flags.begin(), flags.end(), true) != flags.end();
}

Thresholds calibrate_thresholds(std::span<const AttributeSeries> reference, double safety, double floor) {
  if (reference.empty()) throw Error(ErrorCode::empty_input, "calibration needs reference series");
  if (!(safety >= 1.0)) throw Error(ErrorCode::invalid_argument, "safety factor must be >= 1");
  if (!(floor > 0.0)) throw Error(ErrorCode::invalid_argument, "threshold floor must be positive");
  std::array<std::optional<double>, kNumAttributes> peak{};
  for (const auto& s : reference) {
    const auto lap = laplacian(s);
    double m = 0.0;
    for (double v : lap) m = std::max(m, std::abs(v));
    auto& slot = peak[static_cast<std::size_t>(s.attribute)];
    slot = std::max(slot.value_or(0.0), m);
  }
  Thresholds out;
  out.floor = floor;
  for (auto a : kAllAttributes) {
    const auto& p = peak[static_cast<std::size_t>(a)];
    if (p) out.set(a, std::max(safety * *p, floor));
  }
  return out;
}

std::size_t ConsistencyReport::flagged_frame_count() const {
  std::size_t count = 0;
  for (std::size_t t = 0; t < frames; ++t) {
    for (const auto& a : attributes) {
      if (a.flags[t]) {
        ++count;
        break;
      }
    }
  }
  return count;
}

ConsistencyReport report(std::span<const AttributeSeries> normalized, const Thresholds& tau) {
  if (normalized.empty()) throw Error(ErrorCode::empty_input, "no series to report on");
  ConsistencyReport r;
  r.frames = normalized.front().values.size();
  double ratio_sum = 0.0;
  std::size_t ratio_n = 0;
  for (const auto& s : normalized) {
    if (s.values.size() != r.frames) throw Error(ErrorCode::length_mismatch, "series lengths differ");
    AttributeReport a;
    a.attribute = s.attribute;
    a.tau = tau.at(s.attribute);
    a.laplacian = laplacian(s);
    a.flags.resize(r.frames);
    for (std::size_t t = 0; t < r.frames; ++t) {
      const double mag = std::abs(a.laplacian[t]);
      a.flags[t] = mag > a.tau;
      a.flagged_frames += a.flags[t] ? 1 : 0;
      ratio_sum += mag / a.tau;
      ++ratio_n;
    }
    r.any_inconsistent = r.any_inconsistent || a.flagged_frames > 0;
    r.attributes.push_back(std::move(a));
  }
  r.ratio_stat = ratio_sum / static_cast<double>(ratio_n);
  return r;
}

ConsistencyReport check(std::span<const AttributeSeries> raw, const attributes::NormalizationStats& stats,
                        const Thresholds& tau) {
  std::vector<AttributeSeries> normalized;
  normalized.reserve(raw.size());
  for (const auto& s : raw) normalized.push_back(attributes::normalize_series(s, stats));
  return report(normalized, tau);
}

void write_thresholds(const Thresholds& tau, const std::filesystem::path& path) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (auto a : kAllAttributes)
    if (tau.has(a)) j[std::string(attribute_name(a))] = tau.at(a);
  seqio::write_text_file(path, j.dump(2) + "\n");
}

Thresholds read_thresholds(const std::filesystem::path& path) {
  Thresholds tau;
  try {
    const auto j = nlohmann::json::parse(seqio::read_text_file(path));
    for (const auto& [key, value] : j.items()) {
      const auto a = attribute_from_name(key);
      if (!a) throw Error(ErrorCode::parse, path.string() + ": unknown attribute " + key);
      tau.set(*a, value.get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, path.string() + ": " + e.what());
  }
  return tau;
}

std::string report_json(const ConsistencyReport& r, int indent) {
  nlohmann::ordered_json j;
  j["frames"] = r.frames;
  j["any_inconsistent"] = r.any_inconsistent;
  j["ratio_stat"] = r.ratio_stat;
  j["flagged_frames"] = r.flagged_frame_count();
  auto& attrs = j["attributes"];
  attrs = nlohmann::ordered_json::object();
  for (const auto& a : r.attributes) {
    nlohmann::ordered_json e;
    e["tau"] = a.tau;
    e["flagged_frames"] = a.flagged_frames;
    std::vector<std::size_t> frames;
    for (std::size_t t = 0; t < a.flags.size(); ++t)
      if (a.flags[t]) frames.push_back(t);
    e["flagged"] = frames;
    attrs[std::string(attribute_name(a.attribute))] = e;
  }
  return j.dump(indent);
}

void write_flags_csv(const ConsistencyReport& r, const std::filesystem::path& path) {
  std::string out = "frame";
  for (const auto& a : r.attributes) {
    const auto name = std::string(attribute_name(a.attribute));
    out += "," + name + "_lap," + name + "_flag";
  }
  out += '\n';
  for (std::size_t t = 0; t < r.frames; ++t) {
    out += std::to_string(t);
    for (const auto& a : r.attributes) {
      out += ',' + seqio::format_double(a.laplacian[t]);
      out += a.flags[t] ? ",1" : ",0";
    }
    out += '\n';
  }
  seqio::write_text_file(path, out);
}

}  // namespace cardioreg::consistency
