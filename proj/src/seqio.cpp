#include "cardioreg/seqio.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cardioreg/error.hpp"

namespace cardioreg::seqio {

using nlohmann::json;

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorCode::io, "cannot create " + path.parent_path().string() + ": " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::io, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::io, "write failed for " + path.string());
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw Error(ErrorCode::invalid_argument, "cannot format number");
  return std::string(buf, ptr);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      break;
    }
    cells.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return cells;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;  // numeric cells after the frame column
};

CsvTable read_csv(const fs::path& path) {
  const auto text = read_text_file(path);
  CsvTable table;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = trim(line);
    if (view.empty()) continue;
    const auto cells = split_commas(view);
    if (!have_header) {
      if (cells.empty() || cells.front() != "frame")
        throw Error(ErrorCode::parse, path.string() + ": header must start with 'frame'");
      for (std::size_t i = 1; i < cells.size(); ++i) {
        if (cells[i].empty()) throw Error(ErrorCode::parse, path.string() + ": empty column name");
        table.header.emplace_back(cells[i]);
      }
      have_header = true;
      continue;
    }
    if (cells.size() != table.header.size() + 1)
      throw Error(ErrorCode::parse, path.string() + ":" + std::to_string(line_no) + ": expected " +
                                        std::to_string(table.header.size() + 1) + " cells, got " +
                                        std::to_string(cells.size()));
    try {
      (void)parse_double(cells[0]);
      std::vector<double> row;
      row.reserve(cells.size() - 1);
      for (std::size_t i = 1; i < cells.size(); ++i) row.push_back(parse_double(cells[i]));
      table.rows.push_back(std::move(row));
    } catch (const Error& e) {
      throw Error(ErrorCode::parse, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw Error(ErrorCode::parse, path.string() + ": missing header");
  return table;
}

void ensure_parent(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorCode::io, "cannot create " + path.parent_path().string() + ": " + ec.message());
}

}  // namespace

double parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty())
    throw Error(ErrorCode::parse, "not a number: '" + std::string(text) + "'");
  if (!std::isfinite(v)) throw Error(ErrorCode::parse, "non-finite value: '" + std::string(text) + "'");
  return v;
}

SequenceManifest read_manifest(const fs::path& manifest_path) {
  SequenceManifest m;
  try {
    const auto j = json::parse(read_text_file(manifest_path));
    m.patient_id = j.value("patient_id", std::string{});
    m.width = j.at("width").get<int>();
    m.height = j.at("height").get<int>();
    const auto& sp = j.at("spacing_mm");
    if (!sp.is_array() || sp.size() != 2) throw Error(ErrorCode::parse, "spacing_mm must be [sx, sy]");
    m.spacing = {sp[0].get<double>(), sp[1].get<double>()};
    if (j.contains("frame_period_s") && !j["frame_period_s"].is_null())
      m.frame_period_s = j["frame_period_s"].get<double>();
    m.frame_files = j.at("frame_files").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::parse, manifest_path.string() + ": " + e.what());
  }
  if (m.frame_files.empty()) throw Error(ErrorCode::parse, manifest_path.string() + ": no frames listed");
  if (m.width <= 0 || m.height <= 0) throw Error(ErrorCode::parse, manifest_path.string() + ": bad frame size");
  if (!(m.spacing.sx > 0.0) || !(m.spacing.sy > 0.0))
    throw Error(ErrorCode::parse, manifest_path.string() + ": spacing must be positive");
  return m;
}

void write_manifest(const SequenceManifest& m, const fs::path& manifest_path) {
  json j;
  j["patient_id"] = m.patient_id;
  j["width"] = m.width;
  j["height"] = m.height;
  j["spacing_mm"] = {m.spacing.sx, m.spacing.sy};
  if (m.frame_period_s) j["frame_period_s"] = *m.frame_period_s;
  j["frame_files"] = m.frame_files;
  write_text_file(manifest_path, j.dump(2) + "\n");
}

LabelMap read_pgm(const fs::path& path, Spacing spacing) {
  const auto bytes = read_text_file(path);
  std::size_t pos = 0;
  auto next_token = [&]() -> std::string {
    while (pos < bytes.size()) {
      const char c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos;
      } else {
        break;
      }
    }
    const auto start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    return bytes.substr(start, pos - start);
  };
  if (next_token() != "P5") throw Error(ErrorCode::parse, path.string() + ": not a binary PGM (P5)");
  int width = 0;
  int height = 0;
  int maxval = 0;
  try {
    width = std::stoi(next_token());
    height = std::stoi(next_token());
    maxval = std::stoi(next_token());
  } catch (const std::exception&) {
    throw Error(ErrorCode::parse, path.string() + ": malformed PGM header");
  }
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255)
    throw Error(ErrorCode::parse, path.string() + ": unsupported PGM geometry or depth");
  ++pos;  // single whitespace byte after maxval
  const auto n = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (bytes.size() < pos + n) throw Error(ErrorCode::parse, path.string() + ": truncated pixel data");
  std::vector<std::uint8_t> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto v = static_cast<std::uint8_t>(bytes[pos + i]);
    if (v > kMaxLabel)
      throw Error(ErrorCode::invalid_label, path.string() + ": label " + std::to_string(v) + " outside {0,1,2}");
    labels[i] = v;
  }
  return LabelMap(width, height, spacing, std::move(labels));
}

void write_pgm(const LabelMap& map, const fs::path& path) {
  std::string out = "P5\n" + std::to_string(map.width()) + " " + std::to_string(map.height()) + "\n255\n";
  const auto labels = map.labels();
  out.append(reinterpret_cast<const char*>(labels.data()), labels.size());
  write_text_file(path, out);
}

SegSequence load_sequence(const fs::path& manifest_path) {
  const fs::path file = fs::is_directory(manifest_path) ? manifest_path / kManifestName : manifest_path;
  if (!fs::exists(file)) throw Error(ErrorCode::io, "missing manifest " + file.string());
  const auto m = read_manifest(file);
  SegSequence seq;
  seq.patient_id = m.patient_id;
  seq.frame_period_s = m.frame_period_s;
  seq.frames.reserve(m.frame_files.size());
  const auto base = file.parent_path();
  for (std::size_t t = 0; t < m.frame_files.size(); ++t) {
    const auto path = base / m.frame_files[t];
    if (!fs::exists(path)) throw Error(ErrorCode::io, "frame " + std::to_string(t) + ": missing " + path.string());
    auto frame = read_pgm(path, m.spacing);
    if (frame.width() != m.width || frame.height() != m.height)
      throw Error(ErrorCode::dimension_mismatch, "frame " + std::to_string(t) + ": " + std::to_string(frame.width()) +
                                                     "x" + std::to_string(frame.height()) + " but manifest says " +
                                                     std::to_string(m.width) + "x" + std::to_string(m.height));
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

fs::path save_sequence(const SegSequence& seq, const fs::path& dir) {
  if (seq.frames.empty()) throw Error(ErrorCode::empty_input, "cannot save an empty sequence");
  validate_uniform_geometry(seq);
  std::error_code ec;
  fs::create_directories(dir / "frames", ec);
  if (ec) throw Error(ErrorCode::io, "cannot create " + (dir / "frames").string() + ": " + ec.message());
  SequenceManifest m;
  m.patient_id = seq.patient_id;
  m.width = seq.frames.front().width();
  m.height = seq.frames.front().height();
  m.spacing = seq.frames.front().spacing();
  m.frame_period_s = seq.frame_period_s;
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    char name[32];
    std::snprintf(name, sizeof name, "frames/frame_%04zu.pgm", t);
    write_pgm(seq.frames[t], dir / name);
    m.frame_files.emplace_back(name);
  }
  const auto manifest = dir / kManifestName;
  write_manifest(m, manifest);
  return manifest;
}

bool is_sequence_dir(const fs::path& dir) { return fs::is_regular_file(dir / kManifestName); }

std::vector<fs::path> find_sequences(const fs::path& dir) {
  if (is_sequence_dir(dir)) return {dir};
  if (!fs::is_directory(dir)) throw Error(ErrorCode::io, "not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() == kManifestName) out.push_back(entry.path().parent_path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<AttributeSeries> read_series_table(const fs::path& path) {
  const auto table = read_csv(path);
  std::vector<AttributeSeries> out;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    const auto attr = attribute_from_name(table.header[c]);
    if (!attr) throw Error(ErrorCode::parse, path.string() + ": unknown attribute column '" + table.header[c] + "'");
    for (const auto& s : out)
      if (s.attribute == *attr) throw Error(ErrorCode::parse, path.string() + ": duplicate column " + table.header[c]);
    AttributeSeries s;
    s.attribute = *attr;
    s.values.reserve(table.rows.size());
    for (const auto& row : table.rows) s.values.push_back(row[c]);
    out.push_back(std::move(s));
  }
  return out;
}

fs::path write_series_table(std::span<const AttributeSeries> series, const fs::path& path) {
  if (series.empty()) throw Error(ErrorCode::empty_input, "no series to write");
  const auto n = series.front().values.size();
  for (const auto& s : series)
    if (s.values.size() != n) throw Error(ErrorCode::length_mismatch, "series lengths differ");
  std::string out = "frame";
  for (const auto& s : series) {
    out += ',';
    out += attribute_name(s.attribute);
  }
  out += '\n';
  for (std::size_t t = 0; t < n; ++t) {
    out += std::to_string(t);
    for (const auto& s : series) {
      if (!std::isfinite(s.values[t])) throw Error(ErrorCode::non_finite, "non-finite value in series");
      out += ',';
      out += format_double(s.values[t]);
    }
    out += '\n';
  }
  ensure_parent(path);
  write_text_file(path, out);
  return path;
}

LatentTrajectory read_latent_table(const fs::path& path) {
  const auto table = read_csv(path);
  if (table.header.size() != static_cast<std::size_t>(kLatentDims))
    throw Error(ErrorCode::parse, path.string() + ": expected " + std::to_string(kLatentDims) + " latent columns, got " +
                                      std::to_string(table.header.size()));
  std::vector<LatentVector> rows;
  rows.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    LatentVector z{};
    std::copy(r.begin(), r.end(), z.begin());
    rows.push_back(z);
  }
  return LatentTrajectory(std::move(rows));
}

fs::path write_latent_table(const LatentTrajectory& traj, const fs::path& path) {
  std::string out = "frame";
  for (int j = 0; j < kLatentDims; ++j) {
    char name[8];
    std::snprintf(name, sizeof name, ",z%02d", j);
    out += name;
  }
  out += '\n';
  for (std::size_t t = 0; t < traj.length(); ++t) {
    out += std::to_string(t);
    for (double v : traj[t]) {
      if (!std::isfinite(v)) throw Error(ErrorCode::non_finite, "non-finite latent value");
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  ensure_parent(path);
  write_text_file(path, out);
  return path;
}

}  // namespace cardioreg::seqio
