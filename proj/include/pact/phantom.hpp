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

#ifndef PACT_PHANTOM_HPP
#define PACT_PHANTOM_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "pact/aberration.hpp"
#include "pact/core.hpp"
#include "pact/parallel.hpp"

// Numerical phantoms (initial pressure + SOS map) and the straight-ray signal
// simulator. The simulator deliberately shares the time-of-flight kernel with
// the reconstruction so forward-model identities are exactly testable;
// physically faithful wave propagation is out of scope and externally
// simulated signals enter through the SIGSET file format instead.

namespace pact {

struct DiscSpec {
  Vec2 center;
  double radius = 0.0;   // mm
  double sos = 0.0;      // m/s; set equal to background for pressure-only discs
  double pressure = 0.0; // fill amplitude, arbitrary units
};

struct VesselSpec {
  Vec2 a, b;
  double radius = 0.0;  // capsule half-width, mm
  double pressure = 0.0;
};

struct RingSpec {
  Vec2 center;
  double radius = 0.0;
  double width = 0.0;  // full annulus width, mm
  double pressure = 0.0;
};

struct PointSpec {
  Vec2 pos;
  double amplitude = 0.0;
};

struct PhantomSpec {
  double background_sos = 1499.4;  // m/s
  CircularMask mask{{0.0, 0.0}, 10.0};
  std::vector<DiscSpec> discs;
  std::vector<VesselSpec> vessels;
  std::vector<RingSpec> rings;
  std::vector<PointSpec> points;
  double jitter_mm = 0.0;  // seed-driven perturbation of vessels and points
  bool antialias = true;
};

struct Phantom {
  RasterGrid pressure;
  RasterGrid sos;
  CircularMask mask;
  double background_sos = 0.0;
};

namespace detail {

constexpr double kSosMin = 1300.0;
constexpr double kSosMax = 1800.0;

/// Region indicator prefiltered with the bilinear reconstruction kernel: a
/// tent-weighted average over the 2x2 pixel footprint centered at `c`. Line
/// integrals through the bilinearly sampled raster then match the sharp
/// region to high order.
template <typename Pred>
double pixel_coverage(Vec2 c, double pitch, const Pred& inside, int S) {
  double acc = 0.0, wsum = 0.0;
  for (int sy = 0; sy < S; ++sy)
    for (int sx = 0; sx < S; ++sx) {
      double dx = 2.0 * (sx + 0.5) / S - 1.0;  // in [-1, 1] pixel units
      double dy = 2.0 * (sy + 0.5) / S - 1.0;
      double w = (1.0 - std::abs(dx)) * (1.0 - std::abs(dy));
      Vec2 p{c.x + dx * pitch, c.y + dy * pitch};
      acc += w * (inside(p) ? 1.0 : 0.0);
      wsum += w;
    }
  return acc / wsum;
}

template <typename Pred>
void paint_region(RasterGrid& target, Vec2 lo, Vec2 hi, const Pred& inside, double value,
                  bool blend_sos, bool antialias, const CircularMask* sos_clip) {
  const GridSpec gs = target.spec();
  Vec2 plo = gs.pixel(lo);
  Vec2 phi = gs.pixel(hi);
  int x0 = std::max(0, static_cast<int>(std::floor(plo.x)) - 1);
  int y0 = std::max(0, static_cast<int>(std::floor(plo.y)) - 1);
  int x1 = std::min(gs.width - 1, static_cast<int>(std::ceil(phi.x)) + 1);
  int y1 = std::min(gs.height - 1, static_cast<int>(std::ceil(phi.y)) + 1);
  const int S = antialias ? 32 : 1;
  for (int iy = y0; iy <= y1; ++iy)
    for (int ix = x0; ix <= x1; ++ix) {
      Vec2 c = gs.world(ix, iy);
      if (sos_clip && !sos_clip->contains(c)) continue;
      double cov = pixel_coverage(c, gs.pitch, inside, S);
      if (cov <= 0.0) continue;
      double& px = target.at(ix, iy);
      if (blend_sos)
        px = (1.0 - cov) * px + cov * value;         // SOS: coverage blend
      else
        px = std::max(px, value * cov);              // pressure: max composite
    }
}

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  Vec2 d = b - a;
  double len2 = d.dot(d);
  if (len2 == 0.0) return (p - a).norm();
  double t = std::clamp((p - a).dot(d) / len2, 0.0, 1.0);
  return (p - (a + d * t)).norm();
}

}  // namespace detail

/// Built-in phantom families: "default" (liver-like slice: body disc, organ
/// blob, water hole, stiff inclusions, vessels, point targets), "twobody"
/// (single body disc in water), "empty".
inline PhantomSpec builtin_phantom_spec(const std::string& name,
                                        double background_sos = 1499.4) {
  PhantomSpec s;
  s.background_sos = background_sos;
  s.mask = {{0.0, 0.0}, 10.0};
  if (name == "empty") return s;
  if (name == "twobody") {
    s.discs.push_back({{0.0, 0.0}, 9.0, 1561.0, 0.05});
    s.rings.push_back({{0.0, 0.0}, 9.0, 0.25, 0.8});
    s.points.push_back({{0.0, 0.0}, 1.5});
    s.points.push_back({{4.5, 1.0}, 1.5});
    s.points.push_back({{-3.0, -4.0}, 1.5});
    return s;
  }
  if (name == "default" || name == "liver") {
    s.jitter_mm = 0.35;
    s.discs.push_back({{0.0, 0.0}, 9.0, 1545.0, 0.02});       // body
    s.discs.push_back({{-2.0, 1.5}, 4.8, 1590.0, 0.05});      // liver-like organ
    s.discs.push_back({{4.5, 3.5}, 1.8, background_sos, 0.0}); // water hole, upper right
    s.discs.push_back({{3.0, -4.0}, 1.2, 1650.0, 0.3});       // stiff inclusions
    s.discs.push_back({{-5.5, -2.5}, 1.5, 1620.0, 0.25});
    s.rings.push_back({{0.0, 0.0}, 9.0, 0.25, 0.8});          // body boundary
    s.rings.push_back({{-2.0, 1.5}, 4.8, 0.2, 0.5});          // organ boundary
    s.rings.push_back({{4.5, 3.5}, 1.8, 0.2, 0.4});           // hole boundary
    s.vessels.push_back({{-6.0, -5.0}, {-1.5, -1.0}, 0.25, 1.0});
    s.vessels.push_back({{-1.5, -1.0}, {2.5, -2.5}, 0.22, 0.9});
    s.vessels.push_back({{-1.5, -1.0}, {0.5, 2.8}, 0.2, 0.9});
    s.vessels.push_back({{1.0, 4.5}, {5.0, 1.2}, 0.2, 0.8});
    s.points.push_back({{0.0, 0.0}, 1.5});
    s.points.push_back({{4.8, 0.8}, 1.5});
    s.points.push_back({{-5.2, 1.0}, 1.5});
    s.points.push_back({{0.5, -5.6}, 1.5});
    s.points.push_back({{2.5, 4.2}, 1.5});
    return s;
  }
  throw ValidationError("unknown builtin phantom spec: " + name);
}

/// Rasterize a phantom spec. Deterministic for a fixed seed; the seed drives
/// the jitter applied to vessels and point targets only, so the SOS regions
/// keep their validated margins.
inline Phantom generate_phantom(const GridSpec& grid, const PhantomSpec& spec, uint64_t seed) {
  grid.validate();
  if (!(spec.background_sos >= detail::kSosMin && spec.background_sos <= detail::kSosMax))
    throw ValidationError("phantom: background SOS outside [1300, 1800] m/s");
  for (const auto& d : spec.discs) {
    if (!(d.sos >= detail::kSosMin && d.sos <= detail::kSosMax))
      throw ValidationError("phantom: disc SOS outside [1300, 1800] m/s");
    if ((d.center - spec.mask.center).norm() + d.radius > spec.mask.radius)
      throw ValidationError("phantom: disc region extends outside the mask");
  }
  for (const auto& r : spec.rings)
    if ((r.center - spec.mask.center).norm() + r.radius + 0.5 * r.width > spec.mask.radius)
      throw ValidationError("phantom: ring region extends outside the mask");

  std::mt19937_64 rng(seed);
  auto jitter = [&](Vec2 p) {
    if (spec.jitter_mm <= 0.0) return p;
    std::uniform_real_distribution<double> u(-spec.jitter_mm, spec.jitter_mm);
    return Vec2{p.x + u(rng), p.y + u(rng)};
  };

  std::vector<VesselSpec> vessels = spec.vessels;
  for (auto& v : vessels) {
    v.a = jitter(v.a);
    v.b = jitter(v.b);
    if (detail::point_segment_distance(spec.mask.center, v.a, v.b) + v.radius >
            spec.mask.radius &&
        ((v.a - spec.mask.center).norm() + v.radius > spec.mask.radius ||
         (v.b - spec.mask.center).norm() + v.radius > spec.mask.radius))
      throw ValidationError("phantom: vessel extends outside the mask");
  }
  std::vector<PointSpec> points = spec.points;
  for (auto& p : points) {
    p.pos = jitter(p.pos);
    if (!spec.mask.contains(p.pos))
      throw ValidationError("phantom: point target outside the mask");
  }

  Phantom ph;
  ph.mask = spec.mask;
  ph.background_sos = spec.background_sos;
  ph.sos = RasterGrid::constant(grid, spec.background_sos);
  ph.pressure = RasterGrid::zeros(grid);

  for (const auto& d : spec.discs) {
    auto inside = [&](Vec2 p) { return (p - d.center).norm() <= d.radius; };
    Vec2 lo{d.center.x - d.radius, d.center.y - d.radius};
    Vec2 hi{d.center.x + d.radius, d.center.y + d.radius};
    detail::paint_region(ph.sos, lo, hi, inside, d.sos, true, spec.antialias, &spec.mask);
    if (d.pressure > 0.0)
      detail::paint_region(ph.pressure, lo, hi, inside, d.pressure, false, spec.antialias,
                           nullptr);
  }
  for (const auto& r : spec.rings) {
    double rout = r.radius + 0.5 * r.width;
    auto inside = [&](Vec2 p) {
      return std::abs((p - r.center).norm() - r.radius) <= 0.5 * r.width;
    };
    Vec2 lo{r.center.x - rout, r.center.y - rout};
    Vec2 hi{r.center.x + rout, r.center.y + rout};
    detail::paint_region(ph.pressure, lo, hi, inside, r.pressure, false, spec.antialias,
                         nullptr);
  }
  for (const auto& v : vessels) {
    auto inside = [&](Vec2 p) {
      return detail::point_segment_distance(p, v.a, v.b) <= v.radius;
    };
    Vec2 lo{std::min(v.a.x, v.b.x) - v.radius, std::min(v.a.y, v.b.y) - v.radius};
    Vec2 hi{std::max(v.a.x, v.b.x) + v.radius, std::max(v.a.y, v.b.y) + v.radius};
    detail::paint_region(ph.pressure, lo, hi, inside, v.pressure, false, spec.antialias,
                         nullptr);
  }
  for (const auto& p : points) {
    Vec2 q = grid.pixel(p.pos);
    int ix = static_cast<int>(std::lround(q.x));
    int iy = static_cast<int>(std::lround(q.y));
    if (ix >= 0 && ix < grid.width && iy >= 0 && iy < grid.height)
      ph.pressure.at(ix, iy) += p.amplitude;
  }
  return ph;
}

struct SimulateOptions {
  double pulse_sigma = 100e-9;  // s
  double dt = 25e-9;            // s (40 MHz)
  bool spreading = false;       // 1/sqrt(distance) amplitude falloff
  double t0 = std::numeric_limits<double>::quiet_NaN();  // NaN -> auto window
  int n_samples = 0;                                     // 0 -> auto window
  double ray_step = 0.05;  // mm, straight-ray TOF quadrature step
  int workers = 0;
};

/// Synthesize PA signals from a phantom. Each pressure-bearing pixel emits a
/// Gaussian-derivative pressure pulse delayed by the straight-ray TOF, and the
/// transducer effect S = -2 dp/dt is applied analytically, so each channel
/// records a sum of scaled second-derivative-of-Gaussian pulses.
inline SignalSet simulate_signals(const Phantom& ph, const RingGeometry& geom,
                                  const SimulateOptions& opt = {}) {
  geom.validate();
  if (!(opt.pulse_sigma > 0.0)) throw ValidationError("simulate: pulse_sigma must be > 0");
  if (!(opt.dt > 0.0)) throw ValidationError("simulate: dt must be > 0");

  struct Source {
    Vec2 pos;
    double amp;
  };
  std::vector<Source> sources;
  const GridSpec gs = ph.pressure.spec();
  double max_r = 0.0;
  for (int iy = 0; iy < gs.height; ++iy)
    for (int ix = 0; ix < gs.width; ++ix) {
      double a = ph.pressure.at(ix, iy);
      if (a == 0.0) continue;
      Vec2 p = gs.world(ix, iy);
      if (p.norm() >= geom.radius)
        throw ValidationError("simulate: pressure-bearing pixel outside the transducer ring");
      max_r = std::max(max_r, p.norm());
      sources.push_back({p, a});
    }

  double vmin = ph.sos.values.empty() ? ph.background_sos : ph.sos.values[0];
  double vmax = vmin;
  for (double v : ph.sos.values) {
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  if (!(vmin > 0.0)) throw ValidationError("simulate: non-positive SOS value");
  const bool uniform_bg = (vmin == vmax && vmin == ph.background_sos);

  // Conservative arrival bounds set the auto time window.
  double tau_min = 1e-3 * (geom.radius - max_r) / vmax - 8.0 * opt.pulse_sigma;
  double tau_max = 1e-3 * (geom.radius + max_r) / vmin + 8.0 * opt.pulse_sigma;
  SignalSet sig;
  sig.geom = geom;
  sig.dt = opt.dt;
  sig.background_sos = ph.background_sos;
  if (std::isnan(opt.t0)) {
    sig.t0 = std::floor(tau_min / opt.dt) * opt.dt;
  } else {
    sig.t0 = opt.t0;
  }
  if (opt.n_samples > 0) {
    sig.n_samples = opt.n_samples;
  } else {
    sig.n_samples = static_cast<int>(std::ceil((tau_max - sig.t0) / opt.dt)) + 1;
  }
  if (!sources.empty() && (sig.t0 > tau_min || sig.t0 + (sig.n_samples - 1) * opt.dt < tau_max))
    throw ValidationError("simulate: time window too short, need [" + std::to_string(tau_min) +
                          ", " + std::to_string(tau_max) + "] s");
  sig.data.assign(static_cast<size_t>(geom.n_transducers) * sig.n_samples, 0.0);

  const double sigma = opt.pulse_sigma;
  const double support = 6.0 * sigma;
  parallel_for(geom.n_transducers, opt.workers, [&](int n) {
    Vec2 rn = geom.transducer_position(n);
    double* row = sig.data.data() + static_cast<size_t>(n) * sig.n_samples;
    for (const auto& src : sources) {
      double dist = (rn - src.pos).norm();
      double tau = uniform_bg
                       ? 1e-3 * dist / ph.background_sos
                       : time_of_flight(src.pos, rn, ph.sos, ph.background_sos, ph.mask,
                                        opt.ray_step);
      double amp = src.amp;
      if (opt.spreading) amp /= std::sqrt(std::max(dist, 1e-6));
      // S(t) = -2 d/dt [amp * g'((t-tau)/sigma)] = (2 amp / sigma) (1-u^2) e^{-u^2/2}
      double scale = 2.0 * amp / sigma;
      int i0 = std::max(0, static_cast<int>(std::ceil((tau - support - sig.t0) / opt.dt)));
      int i1 = std::min(sig.n_samples - 1,
                        static_cast<int>(std::floor((tau + support - sig.t0) / opt.dt)));
      for (int i = i0; i <= i1; ++i) {
        double u = (sig.t0 + i * opt.dt - tau) / sigma;
        row[i] += scale * (1.0 - u * u) * std::exp(-0.5 * u * u);
      }
    }
  });
  return sig;
}

}  // namespace pact

#endif  // PACT_PHANTOM_HPP
