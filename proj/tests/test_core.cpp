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

#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "pact/core.hpp"

using namespace pact;

TEST_CASE("water SOS calibration values", "[core]") {
  CHECK(water_sos(26.0) == Catch::Approx(1499.4).margin(0.1));
  CHECK(water_sos(31.0) == Catch::Approx(1511.4).margin(0.1));
  CHECK(water_sos(0.0) == Catch::Approx(1402.385).margin(0.01));
  double v20 = water_sos(20.0);
  CHECK(v20 >= 1480.0);
  CHECK(v20 <= 1485.0);
}

TEST_CASE("water SOS monotone on [0, 40] and rejects out-of-range input", "[core]") {
  double prev = water_sos(0.0);
  for (double t = 0.5; t <= 40.0; t += 0.5) {
    double v = water_sos(t);
    CHECK(v > prev);
    prev = v;
  }
  CHECK_THROWS_AS(water_sos(-0.1), ValidationError);
  CHECK_THROWS_AS(water_sos(95.5), ValidationError);
}

TEST_CASE("transducer positions on the ring", "[core]") {
  RingGeometry g{4, 50.0, 0.0};
  auto pos = transducer_positions(g);
  REQUIRE(pos.size() == 4);
  CHECK(pos[0].x == Catch::Approx(50.0).margin(1e-12));
  CHECK(pos[0].y == Catch::Approx(0.0).margin(1e-12));
  CHECK(pos[1].x == Catch::Approx(0.0).margin(1e-12));
  CHECK(pos[1].y == Catch::Approx(50.0).margin(1e-12));
  CHECK(pos[2].x == Catch::Approx(-50.0).margin(1e-12));
  CHECK(pos[3].y == Catch::Approx(-50.0).margin(1e-12));

  RingGeometry big{512, 50.0, 0.3};
  auto p = transducer_positions(big);
  for (const auto& r : p) CHECK(r.norm() == Catch::Approx(50.0).margin(1e-9));
  // equal consecutive angular gaps
  for (int n = 0; n + 1 < 512; ++n) {
    double a0 = std::atan2(p[n].y, p[n].x);
    double a1 = std::atan2(p[n + 1].y, p[n + 1].x);
    double gap = std::remainder(a1 - a0, 2 * std::numbers::pi);
    CHECK(gap == Catch::Approx(2 * std::numbers::pi / 512).margin(1e-12));
  }

  CHECK_THROWS_AS(transducer_positions(RingGeometry{2, 50.0, 0.0}), ValidationError);
  CHECK_THROWS_AS(transducer_positions(RingGeometry{8, -1.0, 0.0}), ValidationError);
}

TEST_CASE("world/pixel mapping is exactly invertible", "[core]") {
  GridSpec g = GridSpec::centered(256, 256, 0.1);
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dx(0, 255);
  for (int trial = 0; trial < 200; ++trial) {
    double ix = dx(rng), iy = dx(rng);
    Vec2 p = g.pixel(g.world(ix, iy));
    CHECK(p.x == Catch::Approx(ix).margin(1e-10));
    CHECK(p.y == Catch::Approx(iy).margin(1e-10));
  }
  CHECK_THROWS_AS(GridSpec({0, 4, 0.1, {0, 0}}).validate(), ValidationError);
  CHECK_THROWS_AS(GridSpec({4, 4, 0.0, {0, 0}}).validate(), ValidationError);
}

TEST_CASE("patch layout at desk scale", "[core]") {
  GridSpec g = GridSpec::centered(256, 256, 0.1);
  PatchLayout lay = make_patch_layout(g, 3.2, 0.75);
  CHECK(lay.patch_pixels == 32);
  CHECK(lay.stride_pixels == 8);
  CHECK(lay.nx == 29);
  CHECK(lay.ny == 29);
  CHECK(lay.n_patches() == 29 * 29);

  // single patch covering the whole grid
  PatchLayout whole = make_patch_layout(g, 25.6, 0.0);
  CHECK(whole.n_patches() == 1);

  // non-overlapping tiling
  PatchLayout tiles = make_patch_layout(g, 3.2, 0.0);
  CHECK(tiles.nx == 8);
  CHECK(tiles.ny == 8);

  CHECK_THROWS_AS(make_patch_layout(g, 30.0, 0.0), ValidationError);
  CHECK_THROWS_AS(make_patch_layout(g, 3.2, 1.0), ValidationError);
}

TEST_CASE("patch layout covers every pixel and stays in bounds", "[core]") {
  GridSpec g{70, 50, 0.2, {0, 0}};
  PatchLayout lay = make_patch_layout(g, 3.2, 0.3);  // 16 px patch, stride 11
  std::vector<int> cover(static_cast<size_t>(g.width) * g.height, 0);
  for (auto [ox, oy] : lay.offsets) {
    REQUIRE(ox >= 0);
    REQUIRE(oy >= 0);
    REQUIRE(ox + lay.patch_pixels <= g.width);
    REQUIRE(oy + lay.patch_pixels <= g.height);
    for (int y = 0; y < lay.patch_pixels; ++y)
      for (int x = 0; x < lay.patch_pixels; ++x) cover[(oy + y) * g.width + ox + x]++;
  }
  for (int c : cover) CHECK(c >= 1);
}

TEST_CASE("patch tiling round-trip with uniform weights", "[core]") {
  GridSpec g{48, 40, 0.1, {0, 0}};
  RasterGrid img = RasterGrid::zeros(g);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1, 1);
  for (double& v : img.values) v = u(rng);

  PatchLayout lay = make_patch_layout(g, 1.6, 0.5);
  RasterGrid acc = RasterGrid::zeros(g);
  RasterGrid wsum = RasterGrid::zeros(g);
  for (auto [ox, oy] : lay.offsets)
    for (int y = 0; y < lay.patch_pixels; ++y)
      for (int x = 0; x < lay.patch_pixels; ++x) {
        acc.at(ox + x, oy + y) += img.at(ox + x, oy + y);
        wsum.at(ox + x, oy + y) += 1.0;
      }
  for (size_t i = 0; i < acc.values.size(); ++i)
    CHECK(acc.values[i] / wsum.values[i] == Catch::Approx(img.values[i]).margin(1e-12));
}

TEST_CASE("segment-circle intersection", "[core]") {
  // chord through the center has length 2r
  auto [t0, t1] = segment_circle_intersection({-10, 0}, {10, 0}, {0, 0}, 5.0);
  CHECK(t1 - t0 == Catch::Approx(10.0).margin(1e-12));
  CHECK(t0 == Catch::Approx(5.0).margin(1e-12));

  // miss
  auto [m0, m1] = segment_circle_intersection({-10, 7}, {10, 7}, {0, 0}, 5.0);
  CHECK(m0 > m1);

  // segment entirely inside
  auto [i0, i1] = segment_circle_intersection({-1, 0}, {1, 0}, {0, 0}, 5.0);
  CHECK(i0 == Catch::Approx(0.0).margin(1e-12));
  CHECK(i1 == Catch::Approx(2.0).margin(1e-12));

  // off-center chord: analytic half-chord sqrt(r^2 - d^2)
  auto [c0, c1] = segment_circle_intersection({-10, 3}, {10, 3}, {0, 0}, 5.0);
  CHECK(c1 - c0 == Catch::Approx(2.0 * std::sqrt(25.0 - 9.0)).margin(1e-12));
}

TEST_CASE("circular mask containment", "[core]") {
  CircularMask m{{1.0, -2.0}, 3.0};
  CHECK(m.contains({1.0, -2.0}));
  CHECK(m.contains({4.0, -2.0}));
  CHECK_FALSE(m.contains({4.01, -2.0}));
}

TEST_CASE("signal sampling interpolates linearly and reads zero outside", "[core]") {
  SignalSet s;
  s.geom = {4, 50.0, 0.0};
  s.n_samples = 4;
  s.dt = 1e-6;
  s.t0 = 0.0;
  s.background_sos = 1500.0;
  s.data = {0, 1, 2, 3, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0};
  CHECK(s.sample(0, 0.5e-6) == Catch::Approx(0.5));
  CHECK(s.sample(0, 2.25e-6) == Catch::Approx(2.25));
  CHECK(s.sample(0, -0.1e-6) == 0.0);
  CHECK(s.sample(0, 3.1e-6) == 0.0);
}
