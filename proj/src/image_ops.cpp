#include "cardioreg/image_ops.hpp"

#include <algorithm>
#include <limits>

namespace cardioreg::imaging {

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count_if(data.begin(), data.end(), [](std::uint8_t v) { return v != 0; }));
}

Mask class_mask(const LabelMap& map, Label label) {
  Mask m(map.width(), map.height());
  const auto src = map.labels();
  const auto code = static_cast<std::uint8_t>(label);
  for (std::size_t i = 0; i < src.size(); ++i) m.data[i] = src[i] == code ? 1 : 0;
  return m;
}

Mask foreground_mask(const LabelMap& map) {
  Mask m(map.width(), map.height());
  const auto src = map.labels();
  for (std::size_t i = 0; i < src.size(); ++i) m.data[i] = src[i] != 0 ? 1 : 0;
  return m;
}

Components connected_components(const Mask& mask, Connectivity conn) {
  Components out;
  out.labels.assign(mask.data.size(), -1);
  std::vector<int> stack;
  const int w = mask.width;
  const int h = mask.height;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto seed = static_cast<std::size_t>(y) * w + x;
      if (!mask.data[seed] || out.labels[seed] >= 0) continue;
      const int id = out.count();
      out.sizes.push_back(0);
      out.labels[seed] = id;
      stack.assign(1, static_cast<int>(seed));
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        ++out.sizes.back();
        const int px = p % w;
        const int py = p / w;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            if (dx == 0 && dy == 0) continue;
            if (conn == Connectivity::four && dx != 0 && dy != 0) continue;
            const int nx = px + dx;
            const int ny = py + dy;
            if (!mask.inside(nx, ny)) continue;
            const auto q = static_cast<std::size_t>(ny) * w + nx;
            if (mask.data[q] && out.labels[q] < 0) {
              out.labels[q] = id;
              stack.push_back(static_cast<int>(q));
            }
          }
        }
      }
    }
  }
  return out;
}

Mask largest_component(const Mask& mask, Connectivity conn) {
  const auto comps = connected_components(mask, conn);
  Mask out(mask.width, mask.height);
  if (comps.count() == 0) return out;
  const auto best = static_cast<int>(std::max_element(comps.sizes.begin(), comps.sizes.end()) - comps.sizes.begin());
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = comps.labels[i] == best ? 1 : 0;
  return out;
}

int count_holes(const Mask& mask) {
  Mask complement(mask.width, mask.height);
  for (std::size_t i = 0; i < mask.data.size(); ++i) complement.data[i] = mask.data[i] ? 0 : 1;
  const auto comps = connected_components(complement, Connectivity::four);
  std::vector<bool> touches(static_cast<std::size_t>(comps.count()), false);
  const int w = mask.width;
  const int h = mask.height;
  auto mark = [&](int x, int y) {
    const int id = comps.labels[static_cast<std::size_t>(y) * w + x];
    if (id >= 0) touches[static_cast<std::size_t>(id)] = true;
  };
  for (int x = 0; x < w; ++x) {
    mark(x, 0);
    mark(x, h - 1);
  }
  for (int y = 0; y < h; ++y) {
    mark(0, y);
    mark(w - 1, y);
  }
  return static_cast<int>(std::count(touches.begin(), touches.end(), false));
}

std::vector<std::pair<int, int>> boundary_pixels(const Mask& mask) {
  std::vector<std::pair<int, int>> out;
  for (int y = 0; y < mask.height; ++y) {
    for (int x = 0; x < mask.width; ++x) {
      if (!mask.at(x, y)) continue;
      if (!mask.get(x - 1, y) || !mask.get(x + 1, y) || !mask.get(x, y - 1) || !mask.get(x, y + 1))
        out.emplace_back(x, y);
    }
  }
  return out;
}

namespace {

// Lower envelope of parabolas w*(p-q)^2 + f(q) (Felzenszwalb & Huttenlocher).
void distance_1d(const std::vector<double>& f, std::vector<double>& d, double weight, std::vector<int>& v,
                 std::vector<double>& z) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const int n = static_cast<int>(f.size());
  v.assign(static_cast<std::size_t>(n), 0);
  z.assign(static_cast<std::size_t>(n) + 1, 0.0);
  int k = -1;
  for (int q = 0; q < n; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s = 0.0;
    while (true) {
      const int r = v[k];
      s = ((f[q] + weight * q * q) - (f[r] + weight * r * r)) / (2.0 * weight * (q - r));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    if (s <= z[k]) {  // k == 0 and the new parabola dominates everywhere
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  d.assign(static_cast<std::size_t>(n), kInf);
  if (k < 0) return;
  int j = 0;
  for (int p = 0; p < n; ++p) {
    while (z[j + 1] < p) ++j;
    const double dp = p - v[j];
    d[p] = weight * dp * dp + f[v[j]];
  }
}

}  // namespace

std::vector<double> squared_distance_transform(const Mask& features, double sx, double sy) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const int w = features.width;
  const int h = features.height;
  std::vector<double> grid(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = features.data[i] ? 0.0 : kInf;

  std::vector<double> f;
  std::vector<double> d;
  std::vector<int> v;
  std::vector<double> z;

  f.resize(static_cast<std::size_t>(h));
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) f[y] = grid[static_cast<std::size_t>(y) * w + x];
    distance_1d(f, d, sy * sy, v, z);
    for (int y = 0; y < h; ++y) grid[static_cast<std::size_t>(y) * w + x] = d[y];
  }
  f.resize(static_cast<std::size_t>(w));
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) f[x] = grid[static_cast<std::size_t>(y) * w + x];
    distance_1d(f, d, sx * sx, v, z);
    for (int x = 0; x < w; ++x) grid[static_cast<std::size_t>(y) * w + x] = d[x];
  }
  return grid;
}

}  // namespace cardioreg::imaging
