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

#ifndef PACT_BEAMFORM_HPP
#define PACT_BEAMFORM_HPP

#include <cmath>
#include <string>
#include <vector>

#include "pact/core.hpp"
#include "pact/parallel.hpp"

// Delay-and-sum reconstruction: y(r; d) = sum_n S((|r - r_n| - d) / v0, n)
// with linear time interpolation and zero for out-of-window lookups. The
// multi-delay stack and the dual-SOS variant share the same pixel loop.

namespace pact {

/// M delay-indexed DAS images over a common grid.
struct DasStack {
  std::vector<double> delays;     // mm, strictly increasing
  std::vector<RasterGrid> images;
  double v0 = 0.0;                // m/s

  int n_delays() const { return static_cast<int>(delays.size()); }
};

/// Circular body region of altered SOS for the dual-SOS DAS baseline.
struct BodyModel {
  Vec2 center;
  double radius = 0.0;    // mm
  double body_sos = 0.0;  // m/s

  void validate() const {
    if (!(radius > 0.0)) throw ValidationError("body model: radius must be > 0");
    if (!(body_sos >= 1300.0 && body_sos <= 1800.0))
      throw ValidationError("body model: SOS outside [1300, 1800] m/s");
  }
};

inline RasterGrid das(const SignalSet& signals, const GridSpec& grid, double v0, double d,
                      int workers = 0) {
  signals.validate();
  grid.validate();
  if (!(v0 > 0.0)) throw ValidationError("das: v0 must be > 0");
  RasterGrid img = RasterGrid::zeros(grid);
  const auto pos = transducer_positions(signals.geom);
  parallel_for(grid.height, workers, [&](int iy) {
    for (int ix = 0; ix < grid.width; ++ix) {
      Vec2 r = grid.world(ix, iy);
      double acc = 0.0;
      for (int n = 0; n < signals.geom.n_transducers; ++n) {
        double dist = (r - pos[n]).norm();
        acc += signals.sample(n, 1e-3 * (dist - d) / v0);
      }
      img.at(ix, iy) = acc;
    }
  });
  return img;
}

inline DasStack das_stack(const SignalSet& signals, const GridSpec& grid, double v0,
                          const std::vector<double>& delays, int workers = 0) {
  if (delays.empty()) throw ValidationError("das_stack: need at least one delay");
  for (size_t j = 1; j < delays.size(); ++j)
    if (!(delays[j] > delays[j - 1]))
      throw ValidationError("das_stack: delays must be strictly increasing");
  signals.validate();
  grid.validate();
  if (!(v0 > 0.0)) throw ValidationError("das_stack: v0 must be > 0");

  DasStack stack;
  stack.delays = delays;
  stack.v0 = v0;
  stack.images.reserve(delays.size());
  for (size_t j = 0; j < delays.size(); ++j) stack.images.push_back(RasterGrid::zeros(grid));

  const auto pos = transducer_positions(signals.geom);
  const int M = static_cast<int>(delays.size());
  // One distance computation per (pixel, transducer), amortized over delays.
  parallel_for(grid.height, workers, [&](int iy) {
    std::vector<double> acc(M);
    for (int ix = 0; ix < grid.width; ++ix) {
      std::fill(acc.begin(), acc.end(), 0.0);
      Vec2 r = grid.world(ix, iy);
      for (int n = 0; n < signals.geom.n_transducers; ++n) {
        double dist = (r - pos[n]).norm();
        for (int j = 0; j < M; ++j)
          acc[j] += signals.sample(n, 1e-3 * (dist - delays[j]) / v0);
      }
      for (int j = 0; j < M; ++j) stack.images[j].at(ix, iy) = acc[j];
    }
  });
  return stack;
}

/// Evenly spaced delay set over [lo, hi] (mm), inclusive.
inline std::vector<double> make_delays(double lo, double hi, int count) {
  if (count < 1) throw ValidationError("delays: count must be >= 1");
  if (count > 1 && !(hi > lo)) throw ValidationError("delays: need hi > lo for count > 1");
  std::vector<double> d(count);
  for (int j = 0; j < count; ++j)
    d[j] = count == 1 ? lo : lo + (hi - lo) * j / (count - 1);
  return d;
}

/// DAS with a two-speed time-of-flight: rays travel at body_sos along their
/// analytic intersection with the body disc and at v0 elsewhere.
inline RasterGrid dual_sos_das(const SignalSet& signals, const GridSpec& grid, double v0,
                               const BodyModel& body, int workers = 0) {
  signals.validate();
  grid.validate();
  body.validate();
  if (!(v0 > 0.0)) throw ValidationError("dual_sos_das: v0 must be > 0");
  if (body.center.norm() + body.radius >= signals.geom.radius)
    throw ValidationError("dual_sos_das: body disc extends outside the transducer ring");

  RasterGrid img = RasterGrid::zeros(grid);
  const auto pos = transducer_positions(signals.geom);
  parallel_for(grid.height, workers, [&](int iy) {
    for (int ix = 0; ix < grid.width; ++ix) {
      Vec2 r = grid.world(ix, iy);
      double acc = 0.0;
      for (int n = 0; n < signals.geom.n_transducers; ++n) {
        double dist = (r - pos[n]).norm();
        auto [s0, s1] = segment_circle_intersection(r, pos[n], body.center, body.radius);
        double inside = std::max(0.0, s1 - s0);
        double t = 1e-3 * ((dist - inside) / v0 + inside / body.body_sos);
        acc += signals.sample(n, t);
      }
      img.at(ix, iy) = acc;
    }
  });
  return img;
}

}  // namespace pact

#endif  // PACT_BEAMFORM_HPP
