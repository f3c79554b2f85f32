/*
 * SPDX-FileCopyrightText: Copyright (c) 2026 pactrec authors. All rights reserved.
 * SPDX-License-Identifier: Apache-2.0
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef PACT_CORE_HPP
#define PACT_CORE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace pact {

/// Bad inputs, malformed files, inconsistent configuration. CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite values produced during computation. CLI maps this to exit code 3.
class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
};

/// Raster geometry: pixel (0,0) center sits at `origin` in the world frame
/// (ring center = world origin, x rightward, y upward, all lengths in mm).
struct GridSpec {
  int width = 0;
  int height = 0;
  double pitch = 0.0;  // mm per pixel
  Vec2 origin;         // world position of pixel (0,0) center, mm

  void validate() const {
    if (width < 1 || height < 1) throw ValidationError("grid: width and height must be >= 1");
    if (!(pitch > 0.0)) throw ValidationError("grid: pitch must be > 0");
  }

  /// Continuous pixel coordinates -> world mm.
  Vec2 world(double ix, double iy) const { return {origin.x + ix * pitch, origin.y + iy * pitch}; }
  /// World mm -> continuous pixel coordinates. Exact inverse of world().
  Vec2 pixel(Vec2 p) const { return {(p.x - origin.x) / pitch, (p.y - origin.y) / pitch}; }

  bool same_geometry(const GridSpec& o) const {
    return width == o.width && height == o.height && pitch == o.pitch &&
           origin.x == o.origin.x && origin.y == o.origin.y;
  }

  /// Grid centered on the world origin.
  static GridSpec centered(int width, int height, double pitch) {
    GridSpec g;
    g.width = width;
    g.height = height;
    g.pitch = pitch;
    g.origin = {-0.5 * (width - 1) * pitch, -0.5 * (height - 1) * pitch};
    g.validate();
    return g;
  }
};

/// 2D scalar field (pressure image, SOS map, or mask raster) on a GridSpec.
/// Values are stored row-major: values[iy * width + ix].
struct RasterGrid {
  int width = 0;
  int height = 0;
  double pitch = 0.0;
  Vec2 origin;
  std::vector<double> values;

  static RasterGrid zeros(const GridSpec& g) {
    g.validate();
    RasterGrid r;
    r.width = g.width;
    r.height = g.height;
    r.pitch = g.pitch;
    r.origin = g.origin;
    r.values.assign(static_cast<size_t>(g.width) * g.height, 0.0);
    return r;
  }

  static RasterGrid constant(const GridSpec& g, double value) {
    RasterGrid r = zeros(g);
    std::fill(r.values.begin(), r.values.end(), value);
    return r;
  }

  GridSpec spec() const { return {width, height, pitch, origin}; }

  double& at(int ix, int iy) { return values[static_cast<size_t>(iy) * width + ix]; }
  double at(int ix, int iy) const { return values[static_cast<size_t>(iy) * width + ix]; }

  Vec2 world(double ix, double iy) const { return spec().world(ix, iy); }
  Vec2 pixel(Vec2 p) const { return spec().pixel(p); }

  bool in_bounds(int ix, int iy) const { return ix >= 0 && ix < width && iy >= 0 && iy < height; }

  /// Bilinear sample at a world point; coordinates are clamped to the grid.
  double sample_bilinear(Vec2 p) const {
    Vec2 q = pixel(p);
    double fx = std::clamp(q.x, 0.0, static_cast<double>(width - 1));
    double fy = std::clamp(q.y, 0.0, static_cast<double>(height - 1));
    int ix = std::min(static_cast<int>(fx), width - 2 >= 0 ? width - 2 : 0);
    int iy = std::min(static_cast<int>(fy), height - 2 >= 0 ? height - 2 : 0);
    if (width == 1) ix = 0;
    if (height == 1) iy = 0;
    double ax = fx - ix;
    double ay = fy - iy;
    int ix1 = std::min(ix + 1, width - 1);
    int iy1 = std::min(iy + 1, height - 1);
    return (1 - ax) * (1 - ay) * at(ix, iy) + ax * (1 - ay) * at(ix1, iy) +
           (1 - ax) * ay * at(ix, iy1) + ax * ay * at(ix1, iy1);
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values) m = std::max(m, std::abs(v));
    return m;
  }
};

/// Evenly spaced transducer ring. Transducer n sits at angle 2*pi*n/N + offset.
struct RingGeometry {
  int n_transducers = 0;
  double radius = 0.0;       // mm
  double angle_offset = 0.0; // radians

  void validate() const {
    if (n_transducers < 3) throw ValidationError("ring: need at least 3 transducers");
    if (!(radius > 0.0)) throw ValidationError("ring: radius must be > 0");
  }

  Vec2 transducer_position(int n) const {
    double a = 2.0 * std::numbers::pi * n / n_transducers + angle_offset;
    return {radius * std::cos(a), radius * std::sin(a)};
  }
};

inline std::vector<Vec2> transducer_positions(const RingGeometry& geom) {
  geom.validate();
  std::vector<Vec2> pos(geom.n_transducers);
  for (int n = 0; n < geom.n_transducers; ++n) pos[n] = geom.transducer_position(n);
  return pos;
}

struct CircularMask {
  Vec2 center;
  double radius = 0.0;  // mm

  bool contains(Vec2 p) const { return (p - center).norm() <= radius; }
};

/// Intersection of the segment a->b with a disc, returned as the arclength
/// interval [t0, t1] measured from a (clamped to [0, |b-a|]). Empty -> t0 > t1.
inline std::pair<double, double> segment_circle_intersection(Vec2 a, Vec2 b, Vec2 center,
                                                             double radius) {
  Vec2 d = b - a;
  double len = d.norm();
  if (len == 0.0) {
    bool inside = (a - center).norm() <= radius;
    return inside ? std::make_pair(0.0, 0.0) : std::make_pair(1.0, 0.0);
  }
  Vec2 u = d * (1.0 / len);
  Vec2 m = a - center;
  // |m + t u|^2 = r^2  ->  t^2 + 2 t (m.u) + |m|^2 - r^2 = 0
  double bq = m.dot(u);
  double cq = m.dot(m) - radius * radius;
  double disc = bq * bq - cq;
  if (disc < 0.0) return {1.0, 0.0};
  double s = std::sqrt(disc);
  double t0 = std::max(-bq - s, 0.0);
  double t1 = std::min(-bq + s, len);
  if (t0 > t1) return {1.0, 0.0};
  return {t0, t1};
}

/// Speed of sound in pure water (m/s) as a fifth-order polynomial in
/// temperature (deg C), valid on [0, 95].
inline double water_sos(double temperature_celsius) {
  double t = temperature_celsius;
  if (!(t >= 0.0 && t <= 95.0))
    throw ValidationError("water_sos: temperature " + std::to_string(t) +
                          " outside valid range [0, 95] C");
  return 1.402385e3 + t * (5.038813 +
         t * (-5.799136e-2 +
         t * (3.287156e-4 +
         t * (-1.398845e-6 +
         t * 2.787860e-9))));
}

/// Square patches tiled over a grid. Boundary patches are clamped inward so
/// every patch holds real data; centers are recorded after clamping.
struct PatchLayout {
  GridSpec grid;
  double patch_mm = 0.0;
  double overlap = 0.0;
  int patch_pixels = 0;
  int stride_pixels = 0;
  int nx = 0;  // patches per row
  int ny = 0;  // patches per column
  std::vector<std::pair<int, int>> offsets;  // (ox, oy) pixel offset of each patch
  std::vector<Vec2> centers;                 // world mm, row-major order

  int n_patches() const { return static_cast<int>(offsets.size()); }
};

namespace detail {

inline std::vector<int> patch_offsets_1d(int extent, int patch, int stride) {
  std::vector<int> off;
  if (extent <= patch) {
    off.push_back(0);
    return off;
  }
  int last = extent - patch;
  for (int o = 0; o < last; o += stride) off.push_back(o);
  off.push_back(last);
  return off;
}

}  // namespace detail

inline PatchLayout make_patch_layout(const GridSpec& grid, double patch_mm, double overlap) {
  grid.validate();
  if (!(overlap >= 0.0 && overlap < 1.0))
    throw ValidationError("patch layout: overlap must be in [0, 1)");
  int patch_px = static_cast<int>(std::lround(patch_mm / grid.pitch));
  if (patch_px < 1) throw ValidationError("patch layout: patch smaller than one pixel");
  if (patch_px > grid.width || patch_px > grid.height)
    throw ValidationError("patch layout: patch of " + std::to_string(patch_px) +
                          " px exceeds grid extent");
  int stride = std::max(1, static_cast<int>(std::lround(patch_px * (1.0 - overlap))));

  PatchLayout lay;
  lay.grid = grid;
  lay.patch_mm = patch_mm;
  lay.overlap = overlap;
  lay.patch_pixels = patch_px;
  lay.stride_pixels = stride;

  std::vector<int> xs = detail::patch_offsets_1d(grid.width, patch_px, stride);
  std::vector<int> ys = detail::patch_offsets_1d(grid.height, patch_px, stride);
  lay.nx = static_cast<int>(xs.size());
  lay.ny = static_cast<int>(ys.size());
  double half = 0.5 * (patch_px - 1);
  for (int oy : ys)
    for (int ox : xs) {
      lay.offsets.emplace_back(ox, oy);
      lay.centers.push_back(grid.world(ox + half, oy + half));
    }
  return lay;
}

/// PA signal matrix: n_transducers x n_samples, transducer-major.
struct SignalSet {
  RingGeometry geom;
  int n_samples = 0;
  double dt = 0.0;  // s
  double t0 = 0.0;  // s
  double background_sos = 0.0;  // m/s
  std::vector<double> data;

  double& at(int ch, int s) { return data[static_cast<size_t>(ch) * n_samples + s]; }
  double at(int ch, int s) const { return data[static_cast<size_t>(ch) * n_samples + s]; }

  /// Linearly interpolated sample at time t (seconds); zero outside the window.
  double sample(int ch, double t) const {
    double s = (t - t0) / dt;
    if (s < 0.0 || s > n_samples - 1) return 0.0;
    int i = static_cast<int>(s);
    if (i >= n_samples - 1) return at(ch, n_samples - 1);
    double f = s - i;
    const double* row = data.data() + static_cast<size_t>(ch) * n_samples;
    return (1.0 - f) * row[i] + f * row[i + 1];
  }

  void validate() const {
    geom.validate();
    if (n_samples < 2) throw ValidationError("signals: need at least 2 samples");
    if (!(dt > 0.0)) throw ValidationError("signals: dt must be > 0");
    if (data.size() != static_cast<size_t>(geom.n_transducers) * n_samples)
      throw ValidationError("signals: data size does not match N_t x n_samples");
  }
};

}  // namespace pact

#endif  // PACT_CORE_HPP
