#include "cardioreg/codec.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>

#include <Eigen/Dense>
#include <json.hpp>

#include "cardioreg/attributes.hpp"
#include "cardioreg/error.hpp"
#include "cardioreg/image_ops.hpp"
#include "cardioreg/seqio.hpp"

namespace cardioreg::codec {

namespace {

constexpr double kPi = std::numbers::pi;
// Integral over [0,1] of sqrt(1-x^2) * 4x(1-x).
constexpr double kBulgeIntegral = 4.0 / 3.0 - kPi / 4.0;
constexpr int kDenseSamplesPerSide = 1000;
// The control search stops once its gain falls below this.
constexpr double kMinGain = 1.0 / 16.0;
// decode tries another start while some attribute misses by more than this
// many tolerances.
constexpr double kRestartRatio = 2.0;
// decode tries at most this many of the starts.
constexpr int kDecodeRestarts = 3;
// MYO is grown at most this far from the LV.
constexpr double kMaxThicknessMm = 30.0;
// Rays search this far on either side of the canonical contour.
constexpr double kRaySearchMm = 25.0;

Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
double norm(Point a) { return std::sqrt(dot(a, a)); }

double wrap_degrees(double d) {
  while (d > 90.0) d -= 180.0;
  while (d <= -90.0) d += 180.0;
  return d;
}

double lateral_radius(double area, double width, double length) {
  return width / 2.0 + (area / (2.0 * length) - width * kPi / 8.0) / kBulgeIntegral;
}

/// Local frame: v runs from the base midpoint towards the apex, w is lateral.
struct Placement {
  Point base_mid;
  Point axis;
  Point lateral;

  Point to_image(double v, double w) const { return base_mid + v * axis + w * lateral; }
};

struct DenseContour {
  std::vector<Point> local;  // (v, w) stored in (x, y)
  std::vector<double> arc;   // cumulative length
  Placement place;
};

DenseContour build_dense(const ShapeControls& g) {
  const double area = g[Attribute::lv_area];
  const double width = g[Attribute::lv_base_width];
  const double length = g[Attribute::lv_length];
  if (!(area > 0.0) || !(width > 0.0) || !(length > 0.0))
    throw Error(ErrorCode::decode, "LV area, base width and length must be positive");
  const double half = width / 2.0;
  const double radius = std::max(lateral_radius(area, width, length), width / 4.0);

  DenseContour dc;
  const int n = kDenseSamplesPerSide;
  dc.local.reserve(2 * n + 1);
  auto half_width = [&](double phi, double skew) {
    const double x = std::sin(phi);
    // the skew term is confined to the region next to the corner
    return std::cos(phi) * (half + (radius - half) * 4.0 * x * (1.0 - x)) + skew * std::pow(1.0 - x, 8);
  };
  for (int i = 0; i <= n; ++i) {
    const double phi = 0.5 * kPi * i / n;
    dc.local.push_back({length * std::sin(phi), -half_width(phi, g.skew_mm)});
  }
  for (int i = n - 1; i >= 0; --i) {
    const double phi = 0.5 * kPi * i / n;
    dc.local.push_back({length * std::sin(phi), half_width(phi, 0.0)});
  }
  dc.arc.resize(dc.local.size());
  dc.arc[0] = 0.0;
  for (std::size_t i = 1; i < dc.local.size(); ++i) dc.arc[i] = dc.arc[i - 1] + norm(dc.local[i] - dc.local[i - 1]);

  // centroid of the closed polygon (base segment closes it), local coordinates
  double a2 = 0.0;
  double cv = 0.0;
  const auto& p = dc.local;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& p0 = p[i];
    const auto& p1 = p[(i + 1) % p.size()];
    const double cross = p0.x * p1.y - p1.x * p0.y;
    a2 += cross;
    cv += (p0.x + p1.x) * cross;
  }
  const double v_bar = cv / (3.0 * a2);

  const double theta = g[Attribute::lv_orientation] * kPi / 180.0;
  dc.place.axis = {std::sin(theta), -std::cos(theta)};
  dc.place.lateral = {std::cos(theta), std::sin(theta)};
  const Point target{g[Attribute::epi_cx], g[Attribute::epi_cy]};
  dc.place.base_mid = target - v_bar * dc.place.axis;
  return dc;
}

Contour resample(const DenseContour& dc, int samples) {
  Contour c;
  c.points.reserve(static_cast<std::size_t>(samples));
  c.normals.reserve(static_cast<std::size_t>(samples));
  c.u.reserve(static_cast<std::size_t>(samples));
  const double total = dc.arc.back();
  const auto& p = dc.local;
  const std::size_t last = p.size() - 1;
  auto tangent_at = [&](std::size_t i) {
    const std::size_t i0 = i == 0 ? 0 : i - 1;
    const std::size_t i1 = i == last ? last : i + 1;
    return p[i1] - p[i0];
  };
  for (int k = 0; k < samples; ++k) {
    const double u = samples == 1 ? 0.0 : static_cast<double>(k) / (samples - 1);
    const double s = u * total;
    auto it = std::upper_bound(dc.arc.begin(), dc.arc.end(), s);
    std::size_t i1 = static_cast<std::size_t>(std::min<std::ptrdiff_t>(it - dc.arc.begin(), static_cast<std::ptrdiff_t>(last)));
    if (i1 == 0) i1 = 1;
    const std::size_t i0 = i1 - 1;
    const double seg = dc.arc[i1] - dc.arc[i0];
    const double f = seg > 0.0 ? std::clamp((s - dc.arc[i0]) / seg, 0.0, 1.0) : 0.0;
    const Point local = p[i0] + f * (p[i1] - p[i0]);
    const Point t = tangent_at(i0) + f * (tangent_at(i1) - tangent_at(i0));
    const double tn = norm(t);
    const Point n_local{t.y / tn, -t.x / tn};
    c.points.push_back(dc.place.to_image(local.x, local.y));
    c.normals.push_back(n_local.x * dc.place.axis + n_local.y * dc.place.lateral);
    c.u.push_back(u);
  }
  // corners are exact
  c.points.front() = dc.place.to_image(p.front().x, p.front().y);
  c.points.back() = dc.place.to_image(p.back().x, p.back().y);
  return c;
}

constexpr int kFieldCount = 6;

/// 0 at the base corners, 1 away from them.
double corner_taper(double u) {
  const double t = std::min(1.0, std::min(u, 1.0 - u) / 0.1);
  return t * t * (3.0 - 2.0 * t);
}

/// Normal displacement of the canonical contour per unit change of each
/// shape attribute, tapered to 0 at the corners, sampled at `samples`
/// arc-length positions.
Eigen::MatrixXd attribute_fields(const AttributeVector& a, const Contour& base, int samples) {
  static constexpr std::array<Attribute, kFieldCount> params = {Attribute::lv_area,  Attribute::lv_base_width,
                                                                Attribute::lv_length, Attribute::lv_orientation,
                                                                Attribute::epi_cx,   Attribute::epi_cy};
  Eigen::MatrixXd d(samples, kFieldCount);
  for (int j = 0; j < kFieldCount; ++j) {
    const Attribute p = params[static_cast<std::size_t>(j)];
    double h = 0.0;
    switch (p) {
      case Attribute::lv_orientation: h = 0.05; break;
      case Attribute::epi_cx:
      case Attribute::epi_cy: h = 0.05; break;
      default: h = 1e-3 * std::abs(a[p]); break;
    }
    AttributeVector b = a;
    b[p] += h;
    const auto moved = resample(build_dense(b), samples);
    for (int i = 0; i < samples; ++i) {
      const auto k = static_cast<std::size_t>(i);
      d(i, j) = corner_taper(base.u[k]) * dot(moved.points[k] - base.points[k], base.normals[k]) / h;
    }
  }
  return d;
}

// Frequencies of the residual harmonics. 1 and 3 are left out: they nearly
// coincide with the area and length motions.
constexpr std::array<int, kResidualDims> kFrequencies = {2, 4, 5, 6, 7, 8, 9, 10, 11};

Eigen::MatrixXd sine_matrix(const std::vector<double>& u) {
  Eigen::MatrixXd s(static_cast<Eigen::Index>(u.size()), kResidualDims);
  for (std::size_t i = 0; i < u.size(); ++i)
    for (int k = 0; k < kResidualDims; ++k)
      s(static_cast<Eigen::Index>(i), k) = std::sin(kFrequencies[static_cast<std::size_t>(k)] * kPi * u[i]);
  return s;
}

/// Residual basis for attributes `a`, evaluated at `samples` points: the
/// sines Gram-Schmidt orthonormalized (in frequency order) after the
/// attribute fields, so residuals leave the attributes unchanged to first
/// order. Scaled to the RMS of a unit sine.
Eigen::MatrixXd residual_basis(const AttributeVector& a, const CodecModel& model, int samples) {
  const int n = model.contour_samples;
  const auto coarse = resample(build_dense(a), n);
  Eigen::MatrixXd cols(n, kFieldCount + kResidualDims);
  cols << attribute_fields(a, coarse, n), sine_matrix(coarse.u);
  const Eigen::Index m = cols.cols();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(n, m);
  Eigen::MatrixXd coef = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    Eigen::VectorXd v = cols.col(j);
    Eigen::VectorXd c = Eigen::VectorXd::Unit(m, j);
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index i = 0; i < j; ++i) {
        const double r = q.col(i).dot(v);
        v -= r * q.col(i);
        c -= r * coef.col(i);
      }
    }
    const double len = v.norm();
    if (!(len > 1e-9 * cols.col(j).norm())) throw Error(ErrorCode::fit, "degenerate residual basis");
    q.col(j) = v / len;
    coef.col(j) = c / len;
  }
  const Eigen::MatrixXd mix = coef.rightCols(kResidualDims) * std::sqrt(0.5 * n);
  if (samples == n) return cols * mix;
  const auto fine = resample(build_dense(a), samples);
  Eigen::MatrixXd fine_cols(samples, m);
  fine_cols << attribute_fields(a, fine, samples), sine_matrix(fine.u);
  return fine_cols * mix;
}

std::vector<double> profile_from(const Eigen::MatrixXd& basis, std::span<const double> residuals, double scale) {
  Eigen::VectorXd c(static_cast<Eigen::Index>(residuals.size()));
  for (std::size_t k = 0; k < residuals.size(); ++k) c(static_cast<Eigen::Index>(k)) = residuals[k];
  const Eigen::VectorXd d = scale * (basis * c);
  return std::vector<double>(d.data(), d.data() + d.size());
}

imaging::Mask rasterize(const std::vector<Point>& poly, int width, int height, Spacing sp) {
  for (const auto& q : poly) {
    if (q.x < 0.0 || q.y < 0.0 || q.x > width * sp.sx || q.y > height * sp.sy)
      throw Error(ErrorCode::decode, "LV contour leaves the field of view");
  }
  imaging::Mask mask(width, height);
  std::vector<double> xs;
  double ymin = poly.front().y;
  double ymax = ymin;
  for (const auto& q : poly) {
    ymin = std::min(ymin, q.y);
    ymax = std::max(ymax, q.y);
  }
  const int row0 = std::max(0, static_cast<int>(std::floor(ymin / sp.sy - 0.5)));
  const int row1 = std::min(height - 1, static_cast<int>(std::ceil(ymax / sp.sy - 0.5)));
  const std::size_t n = poly.size();
  for (int row = row0; row <= row1; ++row) {
    const double yc = (row + 0.5) * sp.sy;
    xs.clear();
    for (std::size_t i = 0; i < n; ++i) {
      const Point& a = poly[i];
      const Point& b = poly[(i + 1) % n];
      if ((a.y <= yc && yc < b.y) || (b.y <= yc && yc < a.y)) xs.push_back(a.x + (yc - a.y) * (b.x - a.x) / (b.y - a.y));
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const int c0 = std::max(0, static_cast<int>(std::ceil(xs[k] / sp.sx - 0.5)));
      const int c1 = std::min(width - 1, static_cast<int>(std::ceil(xs[k + 1] / sp.sx - 0.5)) - 1);
      for (int col = c0; col <= c1; ++col) mask.set(col, row, true);
    }
  }
  return mask;
}

/// Bilinear sample of a binary mask at a point in mm; outside reads 0.
double sample_bilinear(const imaging::Mask& m, Spacing sp, Point p) {
  const double fx = p.x / sp.sx - 0.5;
  const double fy = p.y / sp.sy - 0.5;
  const int x0 = static_cast<int>(std::floor(fx));
  const int y0 = static_cast<int>(std::floor(fy));
  const double ax = fx - x0;
  const double ay = fy - y0;
  const double v00 = m.get(x0, y0) ? 1.0 : 0.0;
  const double v10 = m.get(x0 + 1, y0) ? 1.0 : 0.0;
  const double v01 = m.get(x0, y0 + 1) ? 1.0 : 0.0;
  const double v11 = m.get(x0 + 1, y0 + 1) ? 1.0 : 0.0;
  return (1 - ay) * ((1 - ax) * v00 + ax * v10) + ay * ((1 - ax) * v01 + ax * v11);
}

/// Signed offset along the normal to the nearest inside->outside transition.
std::optional<double> ray_crossing(const imaging::Mask& lv, Spacing sp, Point origin, Point normal) {
  const double step = 0.25 * std::min(sp.sx, sp.sy);
  const int steps = static_cast<int>(std::ceil(kRaySearchMm / step));
  auto level = [&](double t) { return sample_bilinear(lv, sp, origin + t * normal) - 0.5; };
  const double f0 = level(0.0);
  // inside: march outwards for the exit; outside: march inwards for the entry
  const double dir = f0 >= 0.0 ? 1.0 : -1.0;
  double t_prev = 0.0;
  double f_prev = f0;
  for (int k = 1; k <= steps; ++k) {
    const double t = dir * k * step;
    const double f = level(t);
    if ((f_prev >= 0.0) != (f >= 0.0)) {
      const double frac = f_prev / (f_prev - f);
      return t_prev + frac * (t - t_prev);
    }
    t_prev = t;
    f_prev = f;
  }
  return std::nullopt;
}

struct Tolerances {
  std::array<double, kNumAttributes> tol;
};

Tolerances tolerances(Spacing sp) {
  const double px = std::max(sp.sx, sp.sy);
  return {{4.0 * sp.sx * sp.sy, 0.5 * px, 0.5 * px, 0.02, 1.0 * sp.sx * sp.sy, 0.01, 0.01}};
}

double mismatch(const AttributeVector& target, const AttributeVector& got, const Tolerances& tol, double* worst) {
  double score = 0.0;
  double w = 0.0;
  for (std::size_t i = 0; i < kNumAttributes; ++i) {
    double d = got.values[i] - target.values[i];
    if (i == static_cast<std::size_t>(Attribute::lv_orientation)) d = wrap_degrees(d);
    const double r = d / tol.tol[i];
    score += r * r;
    w = std::max(w, std::abs(r));
  }
  if (worst) *worst = w;
  return score;
}

/// Attribute (other than the MYO area) furthest outside its tolerance.
Attribute worst_attribute(const AttributeVector& target, const AttributeVector& got, const Tolerances& tol) {
  Attribute worst = Attribute::lv_area;
  double worst_r = -1.0;
  for (auto a : kAllAttributes) {
    if (a == Attribute::myo_area) continue;
    double d = got[a] - target[a];
    if (a == Attribute::lv_orientation) d = wrap_degrees(d);
    const double r = std::abs(d) / tol.tol[static_cast<std::size_t>(index_of(a))];
    if (r > worst_r) {
      worst_r = r;
      worst = a;
    }
  }
  return worst;
}

void correct_controls(ShapeControls& g, const AttributeVector& target, const AttributeVector& got, double gain,
                      std::optional<Attribute> only = std::nullopt) {
  for (auto a : kAllAttributes) {
    if (a == Attribute::myo_area) continue;  // matched exactly by the ring growth
    if (only && a != *only) continue;
    if (a == Attribute::lv_base_width) {
      // one corner at a time halves the raster step of the width
      g.skew_mm += gain * (target[a] - got[a]);
      continue;
    }
    if (a == Attribute::lv_orientation) {
      g[a] = wrap_degrees(g[a] + gain * wrap_degrees(target[a] - got[a]));
    } else {
      g[a] += gain * (target[a] - got[a]);
    }
  }
}


/// Damped fixed-point search on the shape controls. Every step corrects the
/// best iterate so far. When a full step does not improve, the worst
/// attribute alone is corrected; when that fails too the gain is halved.
class ControlSearch {
 public:
  ControlSearch(const AttributeVector& target, Spacing sp) : ControlSearch(target, sp, ShapeControls(target)) {}
  ControlSearch(const AttributeVector& target, Spacing sp, const ShapeControls& start)
      : target_(target), tol_(tolerances(sp)), next_(start) {}

  const ShapeControls& next() const { return next_; }
  bool done() const { return done_; }
  double best_score() const { return best_score_; }
  /// Largest |error| / tolerance of the best iterate.
  double best_worst() const { return best_worst_; }

  /// Attributes measured for next(); true when they are the best so far.
  bool offer(const AttributeVector& got) {
    double worst = 0.0;
    const double score = mismatch(target_, got, tol_, &worst);
    const bool improved = !has_best_ || score < best_score_;
    if (improved) {
      best_ = next_;
      best_got_ = got;
      best_score_ = score;
      best_worst_ = worst;
      has_best_ = true;
      single_ = false;
    } else {
      fail();
    }
    done_ = improved && worst <= 1.0;
    step();
    return improved;
  }

  /// next() could not be rendered.
  void reject() {
    if (!has_best_) done_ = true;
    fail();
    step();
  }

 private:
  void fail() {
    if (single_) gain_ *= 0.5;
    single_ = !single_;
  }

  void step() {
    if (gain_ < kMinGain) done_ = true;
    if (done_ || !has_best_) return;
    next_ = best_;
    if (single_) {
      correct_controls(next_, target_, best_got_, gain_, worst_attribute(target_, best_got_, tol_));
    } else {
      correct_controls(next_, target_, best_got_, gain_);
    }
  }

  AttributeVector target_;
  Tolerances tol_;
  ShapeControls next_;
  ShapeControls best_;
  AttributeVector best_got_;
  double best_score_ = 0.0;
  double best_worst_ = 0.0;
  double gain_ = 1.0;
  bool has_best_ = false;
  bool single_ = false;
  bool done_ = false;
};

LabelMap render_with_geometry(const ShapeControls& g, std::span<const double> profile, int width, int height,
                              Spacing sp) {
  const auto dense = build_dense(g);
  auto contour = resample(dense, static_cast<int>(profile.size()));
  for (std::size_t i = 0; i < contour.points.size(); ++i)
    contour.points[i] = contour.points[i] + profile[i] * contour.normals[i];
  const auto lv = rasterize(contour.points, width, height, sp);
  const std::size_t lv_count = lv.count();
  if (lv_count == 0) throw Error(ErrorCode::decode, "LV rasterizes to nothing");

  // window around the LV, padded by the maximal ring thickness
  int x0 = width;
  int y0 = height;
  int x1 = -1;
  int y1 = -1;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if (lv.at(x, y)) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
  const int pad_x = static_cast<int>(std::ceil(kMaxThicknessMm / sp.sx)) + 1;
  const int pad_y = static_cast<int>(std::ceil(kMaxThicknessMm / sp.sy)) + 1;
  x0 = std::max(0, x0 - pad_x);
  y0 = std::max(0, y0 - pad_y);
  x1 = std::min(width - 1, x1 + pad_x);
  y1 = std::min(height - 1, y1 + pad_y);
  const int ww = x1 - x0 + 1;
  const int wh = y1 - y0 + 1;
  imaging::Mask window(ww, wh);
  for (int y = 0; y < wh; ++y)
    for (int x = 0; x < ww; ++x) window.set(x, y, lv.at(x + x0, y + y0));
  const auto dist2 = imaging::squared_distance_transform(window, sp.sx, sp.sy);

  const Point base_mid = dense.place.base_mid;
  const Point axis = dense.place.axis;
  const double cap2 = kMaxThicknessMm * kMaxThicknessMm;
  struct Candidate {
    double d2;
    int index;
  };
  std::vector<Candidate> candidates;
  for (int y = 0; y < wh; ++y) {
    for (int x = 0; x < ww; ++x) {
      const int i = y * ww + x;
      if (window.data[static_cast<std::size_t>(i)]) continue;
      const double d2 = dist2[static_cast<std::size_t>(i)];
      if (d2 > cap2) continue;
      const Point p{(x + x0 + 0.5) * sp.sx, (y + y0 + 0.5) * sp.sy};
      if (dot(p - base_mid, axis) <= 0.0) continue;
      candidates.push_back({d2, i});
    }
  }
  const double myo_area = g[Attribute::myo_area];
  if (!(myo_area > 0.0)) throw Error(ErrorCode::decode, "MYO area must be positive");
  const auto target = static_cast<std::size_t>(std::llround(myo_area / (sp.sx * sp.sy)));
  if (target == 0 || target > candidates.size())
    throw Error(ErrorCode::decode, "cannot grow a MYO ring of the requested area");
  auto less = [](const Candidate& a, const Candidate& b) { return a.d2 < b.d2 || (a.d2 == b.d2 && a.index < b.index); };
  std::nth_element(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(target - 1), candidates.end(),
                   less);

  LabelMap out(width, height, sp);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if (lv.at(x, y)) out.set(x, y, Label::lv);
  for (std::size_t k = 0; k < target; ++k) {
    const int i = candidates[k].index;
    out.set(i % ww + x0, i / ww + y0, Label::myo);
  }
  for (int x = 0; x < width; ++x)
    if (out.at(x, 0) != 0 || out.at(x, height - 1) != 0) throw Error(ErrorCode::decode, "shape touches the image border");
  for (int y = 0; y < height; ++y)
    if (out.at(0, y) != 0 || out.at(width - 1, y) != 0) throw Error(ErrorCode::decode, "shape touches the image border");
  return out;
}

std::vector<double> fit_residuals_impl(const imaging::Mask& lv, Spacing sp, const ShapeControls& g,
                                       const Eigen::MatrixXd& basis, const CodecModel& model) {
  const auto contour = resample(build_dense(g), model.contour_samples);
  const int h = model.harmonics;
  std::vector<Eigen::Index> rows;
  std::vector<double> offsets;
  for (std::size_t i = 1; i + 1 < contour.points.size(); ++i) {
    const auto t = ray_crossing(lv, sp, contour.points[i], contour.normals[i]);
    if (!t) continue;
    offsets.push_back(*t);
    rows.push_back(static_cast<Eigen::Index>(i));
  }
  if (static_cast<int>(offsets.size()) < 2 * h)
    throw Error(ErrorCode::fit, "only " + std::to_string(offsets.size()) + " contour samples usable for the fit");
  Eigen::MatrixXd a(static_cast<Eigen::Index>(offsets.size()), h);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(offsets.size()));
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    a.row(static_cast<Eigen::Index>(i)) = model.residual_scale_mm * basis.row(rows[i]);
    rhs(static_cast<Eigen::Index>(i)) = offsets[i];
  }
  const auto qr = a.colPivHouseholderQr();
  if (qr.rank() < h) throw Error(ErrorCode::fit, "ill-conditioned harmonic fit");
  const Eigen::VectorXd coef = qr.solve(rhs);
  return std::vector<double>(coef.data(), coef.data() + h);
}

AttributeVector attributes_of(const LatentVector& z) {
  AttributeVector a;
  std::copy(z.begin(), z.begin() + kNumAttributes, a.values.begin());
  return a;
}

}  // namespace

void CodecModel::validate() const {
  if (width < 8 || height < 8) throw Error(ErrorCode::config, "codec image size too small");
  if (!(spacing.sx > 0.0) || !(spacing.sy > 0.0)) throw Error(ErrorCode::config, "codec spacing must be positive");
  if (harmonics != kResidualDims)
    throw Error(ErrorCode::config, "harmonic count must equal the residual dimension count (9)");
  if (contour_samples < 2 * harmonics + 2) throw Error(ErrorCode::config, "contour_samples must be at least 2H + 2");
  if (!(residual_scale_mm > 0.0)) throw Error(ErrorCode::config, "residual_scale_mm must be positive");
  if (render_samples < contour_samples) throw Error(ErrorCode::config, "render_samples must be >= contour_samples");
  if (max_iterations < 1) throw Error(ErrorCode::config, "max_iterations must be >= 1");
}

void write_model(const CodecModel& m, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["width"] = m.width;
  j["height"] = m.height;
  j["spacing_mm"] = {m.spacing.sx, m.spacing.sy};
  j["contour_samples"] = m.contour_samples;
  j["harmonics"] = m.harmonics;
  j["residual_scale_mm"] = m.residual_scale_mm;
  j["render_samples"] = m.render_samples;
  j["max_iterations"] = m.max_iterations;
  seqio::write_text_file(path, j.dump(2) + "\n");
}

CodecModel read_model(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::config, "codec model not found: " + path.string());
  CodecModel m;
  try {
    const auto j = nlohmann::json::parse(seqio::read_text_file(path));
    m.width = j.value("width", m.width);
    m.height = j.value("height", m.height);
    if (j.contains("spacing_mm")) m.spacing = {j["spacing_mm"].at(0).get<double>(), j["spacing_mm"].at(1).get<double>()};
    m.contour_samples = j.value("contour_samples", m.contour_samples);
    m.harmonics = j.value("harmonics", m.harmonics);
    m.residual_scale_mm = j.value("residual_scale_mm", m.residual_scale_mm);
    m.render_samples = j.value("render_samples", m.render_samples);
    m.max_iterations = j.value("max_iterations", m.max_iterations);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config, path.string() + ": " + e.what());
  }
  m.validate();
  return m;
}

Contour canonical_contour(const ShapeControls& g, int samples) { return resample(build_dense(g), samples); }

std::vector<double> residual_profile(const AttributeVector& a, std::span<const double> residuals,
                                     const CodecModel& model, int samples) {
  if (static_cast<int>(residuals.size()) != model.harmonics)
    throw Error(ErrorCode::dimension_mismatch, "expected " + std::to_string(model.harmonics) + " residuals");
  return profile_from(residual_basis(a, model, samples), residuals, model.residual_scale_mm);
}

Contour deformed_contour(const ShapeControls& g, std::span<const double> profile) {
  auto c = canonical_contour(g, static_cast<int>(profile.size()));
  for (std::size_t i = 0; i < c.points.size(); ++i) c.points[i] = c.points[i] + profile[i] * c.normals[i];
  return c;
}

LabelMap render(const ShapeControls& g, std::span<const double> profile, const CodecModel& model) {
  return render_with_geometry(g, profile, model.width, model.height, model.spacing);
}

std::vector<double> fit_residuals(const LabelMap& mask, const ShapeControls& g, const AttributeVector& a,
                                  const CodecModel& model) {
  const auto lv = imaging::largest_component(imaging::class_mask(mask, Label::lv), imaging::Connectivity::eight);
  return fit_residuals_impl(lv, mask.spacing(), g, residual_basis(a, model, model.contour_samples), model);
}

void validate_latent(const LatentVector& z) {
  for (double v : z)
    if (!std::isfinite(v)) throw Error(ErrorCode::decode, "latent vector has non-finite entries");
  const double area = z[index_of(Attribute::lv_area)];
  const double width = z[index_of(Attribute::lv_base_width)];
  const double length = z[index_of(Attribute::lv_length)];
  if (!(area > 0.0)) throw Error(ErrorCode::decode, "lv_area must be positive");
  if (!(width > 0.0)) throw Error(ErrorCode::decode, "lv_base_width must be positive");
  if (!(length > 0.0)) throw Error(ErrorCode::decode, "lv_length must be positive");
  if (!(z[index_of(Attribute::myo_area)] > 0.0)) throw Error(ErrorCode::decode, "myo_area must be positive");
  if (lateral_radius(area, width, length) < width / 4.0)
    throw Error(ErrorCode::decode, "lv_area too small for the requested base width and length");
}

namespace {

struct SearchOutcome {
  std::optional<LabelMap> map;
  double score = 0.0;
  double worst = 0.0;
};

/// One control search from `start`. Render errors before any success are
/// rethrown when `rethrow` is set and otherwise leave the outcome empty.
SearchOutcome search_from(const AttributeVector& target, std::span<const double> profile, const ShapeControls& start,
                          const CodecModel& model, bool rethrow) {
  ControlSearch search(target, model.spacing, start);
  SearchOutcome out;
  for (int it = 0; it < model.max_iterations && !search.done(); ++it) {
    std::optional<LabelMap> map;
    AttributeVector got;
    try {
      map = render(search.next(), profile, model);
      got = attributes::extract_attributes(*map);
    } catch (const Error&) {
      if (!out.map && rethrow) throw;
      if (!out.map) break;
      search.reject();
      continue;
    }
    if (search.offer(got)) out.map = std::move(map);
  }
  out.score = search.best_score();
  out.worst = search.best_worst();
  return out;
}

ShapeControls start_controls(const AttributeVector& target, Spacing sp, int start) {
  // start 0 is the target itself; the others sit half a pixel off on the
  // centroid controls, on a different raster phase
  static constexpr std::array<std::array<int, 2>, kDecodeStarts> kOffsets{
      {{0, 0}, {1, 1}, {-1, 1}, {1, -1}, {-1, -1}, {1, 0}, {0, 1}, {-1, 0}, {0, -1}}};
  ShapeControls g(target);
  g[Attribute::epi_cx] += 0.5 * sp.sx * kOffsets[static_cast<std::size_t>(start)][0];
  g[Attribute::epi_cy] += 0.5 * sp.sy * kOffsets[static_cast<std::size_t>(start)][1];
  return g;
}

}  // namespace

LabelMap decode(const LatentVector& z, const CodecModel& model) {
  model.validate();
  validate_latent(z);
  const AttributeVector target = attributes_of(z);
  const std::span<const double> residuals(z.data() + kNumAttributes, kResidualDims);
  const auto profile = residual_profile(target, residuals, model, model.render_samples);
  SearchOutcome best;
  for (int k = 0; k < kDecodeRestarts; ++k) {
    auto o = search_from(target, profile, start_controls(target, model.spacing, k), model, k == 0);
    const double worst = o.worst;
    if (o.map && (!best.map || o.score < best.score)) best = std::move(o);
    if (worst <= kRestartRatio) break;
  }
  return std::move(*best.map);
}

LabelMap decode_from(const LatentVector& z, const CodecModel& model, int start) {
  model.validate();
  validate_latent(z);
  if (start < 0 || start >= kDecodeStarts) throw Error(ErrorCode::config, "decode start out of range");
  const AttributeVector target = attributes_of(z);
  const std::span<const double> residuals(z.data() + kNumAttributes, kResidualDims);
  const auto profile = residual_profile(target, residuals, model, model.render_samples);
  return std::move(*search_from(target, profile, start_controls(target, model.spacing, start), model, true).map);
}

LatentVector encode(const LabelMap& mask, const CodecModel& model) {
  model.validate();
  const auto observed = attributes::extract_attributes(mask);
  const auto lv = imaging::largest_component(imaging::class_mask(mask, Label::lv), imaging::Connectivity::eight);
  const auto coarse_basis = residual_basis(observed, model, model.contour_samples);
  const auto fine_basis = residual_basis(observed, model, model.render_samples);

  ControlSearch search(observed, mask.spacing());
  std::vector<double> best_residuals;
  for (int it = 0; it < model.max_iterations && !search.done(); ++it) {
    auto residuals = fit_residuals_impl(lv, mask.spacing(), search.next(), coarse_basis, model);
    if (best_residuals.empty()) best_residuals = residuals;
    std::optional<AttributeVector> got;
    try {
      const auto profile = profile_from(fine_basis, residuals, model.residual_scale_mm);
      got = attributes::extract_attributes(
          render_with_geometry(search.next(), profile, mask.width(), mask.height(), mask.spacing()));
    } catch (const Error&) {
      search.reject();
      continue;
    }
    if (search.offer(*got)) best_residuals = std::move(residuals);
  }

  LatentVector z{};
  std::copy(observed.values.begin(), observed.values.end(), z.begin());
  std::copy(best_residuals.begin(), best_residuals.end(), z.begin() + kNumAttributes);
  return z;
}

LatentTrajectory encode_sequence(const SegSequence& seq, const CodecModel& model) {
  std::vector<LatentVector> rows;
  rows.reserve(seq.frames.size());
  for (std::size_t t = 0; t < seq.frames.size(); ++t) {
    try {
      rows.push_back(encode(seq.frames[t], model));
    } catch (const Error& e) {
      rethrow_with_frame(e, t);
    }
  }
  return LatentTrajectory(std::move(rows));
}

SegSequence decode_sequence(const LatentTrajectory& traj, const CodecModel& model, std::string patient_id) {
  SegSequence seq;
  seq.patient_id = std::move(patient_id);
  seq.frames.reserve(traj.length());
  for (std::size_t t = 0; t < traj.length(); ++t) {
    try {
      seq.frames.push_back(decode(traj[t], model));
    } catch (const Error& e) {
      rethrow_with_frame(e, t);
    }
  }
  return seq;
}

}  // namespace cardioreg::codec
