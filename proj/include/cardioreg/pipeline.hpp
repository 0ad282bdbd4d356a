#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cardioreg/attributes.hpp"
#include "cardioreg/codec.hpp"
#include "cardioreg/consistency.hpp"
#include "cardioreg/regularizer.hpp"
#include "cardioreg/types.hpp"

namespace cardioreg::pipeline {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline constexpr const char* kThresholdsImage = "thresholds_image.json";
inline constexpr const char* kThresholdsLatent = "thresholds_latent.json";
inline constexpr const char* kStatsImage = "stats_image.json";
inline constexpr const char* kStatsLatent = "stats_latent.json";
inline constexpr const char* kModelName = "codec_model.json";

/// Thresholds and normalization stats for both domains.
struct Calibration {
  attributes::NormalizationStats stats_image{Domain::image, {}};
  attributes::NormalizationStats stats_latent{Domain::latent, {}};
  consistency::Thresholds tau_image;
  consistency::Thresholds tau_latent;
};

/// Image-domain series come from the frames, latent-domain series from the
/// encoded trajectories.
Calibration calibrate(std::span<const std::vector<AttributeSeries>> image_series,
                      std::span<const std::vector<AttributeSeries>> latent_series,
                      double safety = consistency::kDefaultSafety);
/// Both pools hold each reference and its codec reconstruction.
Calibration calibrate_sequences(std::span<const SegSequence> references, const codec::CodecModel& model,
                                double safety = consistency::kDefaultSafety, int jobs = 1);

void write_calibration(const Calibration& c, const fs::path& dir);
/// Throws config when a file is missing.
Calibration read_calibration(const fs::path& dir);

/// One threshold of each attribute in raw image units: tau * (max - min).
std::array<double, kNumAttributes> raw_thresholds(const Calibration& c);

/// `base` with the geometry of `seq`'s frames.
codec::CodecModel model_for(const codec::CodecModel& base, const SegSequence& seq);

/// Columns 0-6 of a trajectory as raw latent-domain series.
std::vector<AttributeSeries> latent_series(const LatentTrajectory& traj);

consistency::ConsistencyReport check_image(const SegSequence& seq, const Calibration& c);
consistency::ConsistencyReport check_latent(const LatentTrajectory& traj, const Calibration& c);

/// Fraction of tau that flagged latent series are smoothed to, leaving room
/// for the raster noise of the decoder.
inline constexpr double kPipelineTargetFraction = 0.8;

/// Regularizer defaults used by cmd_regularize.
inline regularizer::RegularizerConfig pipeline_config() {
  regularizer::RegularizerConfig cfg;
  cfg.target_fraction = kPipelineTargetFraction;
  return cfg;
}

/// Extra passes over attributes that the decoded output still flags.
inline constexpr int kRepairRounds = 3;
/// Each pass smooths such an attribute below this fraction of its current
/// largest |laplacian| (or of tau when that is smaller).
inline constexpr double kRepairShrink = 0.8;

struct RegularizeResult {
  SegSequence output;
  LatentTrajectory latent_in;
  LatentTrajectory latent_out;
  regularizer::TrajectoryDiagnostics diagnostics;
  int repair_rounds = 0;
  double seconds = 0.0;
};

/// Encode, regularize every latent dimension, decode. Frames around image-domain
/// flags are first re-decoded from other search starts. While the output is
/// still flagged, the flagged attribute columns are smoothed further and
/// decoded again, up to kRepairRounds times.
RegularizeResult regularize_sequence(const SegSequence& seq, const codec::CodecModel& model, const Calibration& c,
                                     const regularizer::RegularizerConfig& cfg);

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads; rethrows the first error.
void parallel_for(std::size_t n, int jobs, const std::function<void(std::size_t)>& fn);

/// Relative output location of each input sequence.
std::vector<std::pair<fs::path, fs::path>> sequence_jobs(const fs::path& input, const fs::path& output);

struct SynthOptions {
  fs::path out_dir;
  int sequences = 50;
  int references = 30;
  int frames = 40;
  std::uint64_t seed = 0;
  double safety = consistency::kDefaultSafety;
  codec::CodecModel model;
  int jobs = 1;
};

/// Writes reference/, clean/, corrupted/, calibration/ and codec_model.json.
json cmd_synth(const SynthOptions& o);

struct CalibrateOptions {
  fs::path reference_dir;
  fs::path out_dir;
  std::optional<fs::path> model_path;
  double safety = consistency::kDefaultSafety;
  int jobs = 1;
};

json cmd_calibrate(const CalibrateOptions& o);

struct CheckOptions {
  fs::path input;
  fs::path calibration_dir;
  Domain domain = Domain::image;
  std::optional<fs::path> out_dir;
  int jobs = 1;
};

json cmd_check(const CheckOptions& o);

enum class CodecChoice { reference, external };

struct RegularizeOptions {
  fs::path input;
  fs::path output;
  std::optional<fs::path> model_path;
  fs::path calibration_dir;
  regularizer::RegularizerConfig config = pipeline_config();
  CodecChoice codec = CodecChoice::reference;
  std::optional<fs::path> latent_in;
  std::optional<fs::path> latent_out;
  int jobs = 1;
};

json cmd_regularize(const RegularizeOptions& o);

struct BaselineOptions {
  fs::path input;
  fs::path output;
  std::optional<double> sigma;
  int jobs = 1;
};

json cmd_baseline(const BaselineOptions& o);

struct EvaluateOptions {
  fs::path pred;
  fs::path gt;
  std::optional<fs::path> calibration_dir;
  std::optional<fs::path> out_dir;
  int jobs = 1;
};

json cmd_evaluate(const EvaluateOptions& o);

struct PlotOptions {
  /// (label, attributes.csv or sequence dir)
  std::vector<std::pair<std::string, fs::path>> inputs;
  fs::path out_dir;
  std::optional<fs::path> stats_path;
};

json cmd_plot(const PlotOptions& o);

}  // namespace cardioreg::pipeline
