#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cardioreg/types.hpp"

namespace cardioreg::seqio {

namespace fs = std::filesystem;

inline constexpr const char* kManifestName = "manifest.json";
inline constexpr const char* kAttributesName = "attributes.csv";
inline constexpr const char* kLatentName = "latent.csv";

struct SequenceManifest {
  std::string patient_id;
  std::vector<std::string> frame_files;  // relative to the manifest directory
  int width = 0;
  int height = 0;
  Spacing spacing;
  std::optional<double> frame_period_s;
};

SequenceManifest read_manifest(const fs::path& manifest_path);
void write_manifest(const SequenceManifest& manifest, const fs::path& manifest_path);

/// Binary 8-bit PGM (P5). Pixel values are the raw class codes.
LabelMap read_pgm(const fs::path& path, Spacing spacing);
void write_pgm(const LabelMap& map, const fs::path& path);

/// Accepts either the manifest file or the directory that holds it.
SegSequence load_sequence(const fs::path& manifest_path);

/// Writes `dir/manifest.json` and `dir/frames/frame_####.pgm`; returns the manifest path.
fs::path save_sequence(const SegSequence& seq, const fs::path& dir);

/// True when `dir` holds a manifest.json.
bool is_sequence_dir(const fs::path& dir);

/// `dir` itself when it is a sequence, else every sequence directory below it, sorted.
std::vector<fs::path> find_sequences(const fs::path& dir);

/// Header `frame,<attribute names...>`, one row per frame.
std::vector<AttributeSeries> read_series_table(const fs::path& path);
fs::path write_series_table(std::span<const AttributeSeries> series, const fs::path& path);

/// Header `frame,z00,...,z15`.
LatentTrajectory read_latent_table(const fs::path& path);
fs::path write_latent_table(const LatentTrajectory& traj, const fs::path& path);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);
/// Strict finite-number parse; throws parse on anything else (including NaN/Inf).
double parse_double(std::string_view text);

std::string read_text_file(const fs::path& path);
void write_text_file(const fs::path& path, std::string_view text);

}  // namespace cardioreg::seqio
