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
#include <random>

#include "pact/evaluate.hpp"

using namespace pact;

namespace {

RasterGrid random_image(int n, uint64_t seed) {
  RasterGrid r = RasterGrid::zeros(GridSpec::centered(n, n, 0.1));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  for (double& v : r.values) v = u(rng);
  return r;
}

}  // namespace

TEST_CASE("PSNR reference values", "[evaluate]") {
  RasterGrid truth = random_image(32, 1);
  CHECK(std::isinf(psnr(truth, truth, 1.0)));

  RasterGrid offset = truth;
  for (double& v : offset.values) v += 0.1;
  CHECK(psnr(offset, truth, 1.0) == Catch::Approx(20.0).margin(1e-9));

  // unit-range binary image with half ones vs zeros: 10 log10(1/0.5)
  RasterGrid binary = RasterGrid::zeros(GridSpec::centered(32, 32, 0.1));
  for (int iy = 0; iy < 32; ++iy)
    for (int ix = 0; ix < 16; ++ix) binary.at(ix, iy) = 1.0;
  RasterGrid zeros = RasterGrid::zeros(binary.spec());
  CHECK(psnr(zeros, binary, 1.0) == Catch::Approx(10.0 * std::log10(2.0)).margin(1e-9));

  CHECK_THROWS_AS(psnr(truth, random_image(16, 2), 1.0), ValidationError);
  CHECK_THROWS_AS(psnr(truth, truth, 0.0), ValidationError);
}

TEST_CASE("SSIM reference behavior", "[evaluate]") {
  RasterGrid truth = random_image(32, 3);
  CHECK(ssim(truth, truth, 1.0) == Catch::Approx(1.0).margin(1e-12));

  // zero-mean pattern vs its negative: the structure term flips sign while
  // the window means stay near zero
  RasterGrid zm = RasterGrid::zeros(GridSpec::centered(32, 32, 0.1));
  for (int iy = 0; iy < 32; ++iy)
    for (int ix = 0; ix < 32; ++ix)
      zm.at(ix, iy) = 0.5 * std::sin(2.1 * ix) * std::cos(1.9 * iy);
  RasterGrid neg = zm;
  for (double& v : neg.values) v = -v;
  CHECK(ssim(neg, zm, 1.0) <= 0.0);

  // constant vs constant + delta: pure luminance penalty in (0, 1)
  RasterGrid c1 = RasterGrid::constant(GridSpec::centered(16, 16, 0.1), 0.4);
  RasterGrid c2 = RasterGrid::constant(c1.spec(), 0.6);
  double c1v = 0.4, c2v = 0.6, C1 = 0.01 * 0.01;
  double want = (2 * c1v * c2v + C1) / (c1v * c1v + c2v * c2v + C1);
  CHECK(ssim(c2, c1, 1.0) == Catch::Approx(want).margin(1e-9));
  CHECK(want > 0.0);
  CHECK(want < 1.0);

  CHECK_THROWS_AS(ssim(random_image(8, 4), random_image(8, 4), 1.0), ValidationError);
}

TEST_CASE("both metrics strictly penalize a 5-pixel shift", "[evaluate]") {
  // structured image: a few blobs, so a shift genuinely moves content
  RasterGrid img = RasterGrid::zeros(GridSpec::centered(64, 64, 0.1));
  auto blob = [&](int cx, int cy, double amp) {
    for (int iy = 0; iy < 64; ++iy)
      for (int ix = 0; ix < 64; ++ix) {
        double r2 = (ix - cx) * (ix - cx) + (iy - cy) * (iy - cy);
        img.at(ix, iy) += amp * std::exp(-r2 / 18.0);
      }
  };
  blob(20, 22, 1.0);
  blob(40, 35, 0.8);
  blob(30, 48, 0.6);

  RasterGrid shifted = RasterGrid::zeros(img.spec());
  for (int iy = 0; iy < 64; ++iy)
    for (int ix = 5; ix < 64; ++ix) shifted.at(ix, iy) = img.at(ix - 5, iy);

  CHECK(psnr(shifted, img, 1.0) < psnr(img, img, 1.0));
  CHECK(ssim(shifted, img, 1.0) < ssim(img, img, 1.0) - 0.05);
  CHECK(psnr(shifted, img, 1.0) < 30.0);
}

TEST_CASE("masked SOS RMSE", "[evaluate]") {
  GridSpec g = GridSpec::centered(33, 33, 0.1);
  RasterGrid truth = RasterGrid::constant(g, 1500.0);
  RasterGrid test = RasterGrid::constant(g, 1510.0);
  CircularMask mask{{0, 0}, 1.0};
  CHECK(sos_rmse_masked(test, truth, mask) == Catch::Approx(10.0).margin(1e-12));
}

TEST_CASE("benchmark runs a single method and rejects unknown names", "[evaluate]") {
  GridSpec grid = GridSpec::centered(65, 65, 0.1);
  RingGeometry ring{64, 50.0, 0.0};
  PhantomSpec spec = builtin_phantom_spec("empty", 1500.0);
  spec.mask = {{0, 0}, 2.5};
  spec.discs.push_back({{0.3, -0.2}, 1.5, 1540.0, 0.0});
  spec.points = {{{0.0, 0.0}, 1.0}, {{1.0, 0.5}, 0.7}};
  Phantom ph = generate_phantom(grid, spec, 0);
  SignalSet sig = simulate_signals(ph, ring);

  BenchmarkConfig cfg;
  cfg.grid = grid;
  cfg.das_v0 = 1500.0;
  cfg.workers = 1;
  auto entries = benchmark(sig, ph, {"das"}, cfg);
  REQUIRE(entries.size() == 1);
  CHECK(entries[0].report.method == "das");
  CHECK(std::isfinite(entries[0].report.psnr));
  CHECK(entries[0].report.ssim <= 1.0);
  CHECK(entries[0].report.runtime > 0.0);
  CHECK(entries[0].report.psnr > 10.0);
  CHECK(entries[0].report.psnr < 60.0);
  // implied uniform map vs the disc inclusion
  CHECK(entries[0].report.sos_rmse > 10.0);
  CHECK(entries[0].report.sos_rmse < 40.0);

  CHECK_THROWS_AS(benchmark(sig, ph, {"apact"}, cfg), ValidationError);
}
