#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cardioreg/types.hpp"

namespace cardioreg::codec {

/// Parametric shape codec. Latent dims 0-6 are the raw attributes; dims 7-15
/// are harmonic coefficients of the endocardial contour's normal deviation
/// from the attribute-only shape, in units of `residual_scale_mm`.
struct CodecModel {
  int width = 256;
  int height = 256;
  Spacing spacing{0.6, 0.6};
  int contour_samples = 64;
  int harmonics = kResidualDims;
  double residual_scale_mm = 10.0;
  int render_samples = 720;
  int max_iterations = 12;

  void validate() const;
};

void write_model(const CodecModel& model, const std::filesystem::path& path);
CodecModel read_model(const std::filesystem::path& path);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Endocardial contour from one base corner, around the apex, to the other.
struct Contour {
  std::vector<Point> points;   // image mm
  std::vector<Point> normals;  // outward unit normals
  std::vector<double> u;       // arc-length fraction in [0, 1]
};

/// Shape controls handed to the contour builder. Start equal to the target
/// attributes and are corrected for rasterization effects.
struct ShapeControls : AttributeVector {
  /// Extra half-width of the first base corner only.
  double skew_mm = 0.0;

  ShapeControls() = default;
  ShapeControls(const AttributeVector& a) : AttributeVector(a) {}
};

/// Attribute-only contour resampled to `samples` points by arc length.
Contour canonical_contour(const ShapeControls& g, int samples);

/// Normal offsets (mm) at `samples` arc-length positions for residual
/// coefficients. The basis depends on the attributes `a`: sine harmonics
/// with the contour motions of the attributes projected out.
std::vector<double> residual_profile(const AttributeVector& a, std::span<const double> residuals,
                                     const CodecModel& model, int samples);

/// Canonical contour displaced along its normals by `profile`.
Contour deformed_contour(const ShapeControls& g, std::span<const double> profile);

/// Rasterizes LV from the deformed contour and grows the MYO ring to the
/// requested area. Throws decode when the shape leaves the field of view.
LabelMap render(const ShapeControls& g, std::span<const double> profile, const CodecModel& model);

/// Least-squares residual coefficients of `mask`'s LV contour against the
/// canonical contour of `g`, in the basis of attributes `a`. Throws fit when
/// too few rays hit the contour.
std::vector<double> fit_residuals(const LabelMap& mask, const ShapeControls& g, const AttributeVector& a,
                                  const CodecModel& model);

LatentVector encode(const LabelMap& mask, const CodecModel& model);
LabelMap decode(const LatentVector& z, const CodecModel& model);

/// Search starts available to decode_from.
inline constexpr int kDecodeStarts = 9;
/// decode with a single control search from start `start`: 0 is the target
/// itself, the others are offset by half a pixel on the centroid controls.
LabelMap decode_from(const LatentVector& z, const CodecModel& model, int start);

LatentTrajectory encode_sequence(const SegSequence& seq, const CodecModel& model);
SegSequence decode_sequence(const LatentTrajectory& traj, const CodecModel& model, std::string patient_id = {});

/// Throws decode when z cannot describe a valid shape.
void validate_latent(const LatentVector& z);

}  // namespace cardioreg::codec
