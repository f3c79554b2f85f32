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

#include "pact/nfield.hpp"

using namespace pact;

TEST_CASE("default network has exactly 4417 trainable parameters", "[nfield]") {
  SirenParams p = init_siren(0);
  CHECK(p.param_count() == 4417);
  CHECK(p.theta.size() == 4417);
  CHECK(init_siren(0, 16, 2).param_count() == 337);
  CHECK(siren_param_count(2, 64, 2) == 4417);
}

TEST_CASE("parameter count formula holds for arbitrary shapes", "[nfield]") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> hid(1, 40), lay(1, 4);
  for (int t = 0; t < 20; ++t) {
    int h = hid(rng), L = lay(rng);
    size_t want = static_cast<size_t>(h) * 2 + h;
    for (int l = 1; l < L; ++l) want += static_cast<size_t>(h) * h + h;
    want += h + 1;
    SirenParams p = init_siren(t, h, L);
    CHECK(p.param_count() == want);
    CHECK(p.theta.size() == want);
  }
}

TEST_CASE("initialization is deterministic per seed and within SIREN bounds",
          "[nfield]") {
  SirenParams a = init_siren(42);
  SirenParams b = init_siren(42);
  CHECK(a.theta == b.theta);
  SirenParams c = init_siren(43);
  CHECK(a.theta != c.theta);

  // first layer in [-1/2, 1/2]; later layers in +-sqrt(6/fan)/omega0
  auto [r0, c0] = a.layer_shape(0);
  for (size_t i = 0; i < static_cast<size_t>(r0) * c0 + r0; ++i)
    CHECK(std::abs(a.theta[i]) <= 0.5);
  double bound1 = std::sqrt(6.0 / 64.0) / 30.0;
  for (size_t i = a.layer_offset(1); i < a.layer_offset(2); ++i)
    CHECK(std::abs(a.theta[i]) <= bound1);
}

TEST_CASE("zeroed output layer renders the constant background", "[nfield]") {
  SirenParams p = init_siren(1, 16, 2, 30.0, 100.0, 1499.4);
  for (size_t i = p.layer_offset(2); i < p.param_count(); ++i) p.theta[i] = 0.0;
  GridSpec g = GridSpec::centered(33, 33, 0.2);
  CircularMask mask{{0, 0}, 2.5};
  SosField f = render_sos(p, g, mask);
  for (double v : f.raster.values) CHECK(v == 1499.4);

  SirenParams q = init_siren(1, 16, 2, 30.0, 0.0, 1499.4);  // out_scale = 0
  SosField fq = render_sos(q, g, mask);
  for (double v : fq.raster.values) CHECK(v == 1499.4);
}

TEST_CASE("rendered field is v0 outside the mask and varies inside", "[nfield]") {
  SirenParams p = init_siren(7, 32, 2, 30.0, 100.0, 1500.0);
  GridSpec g = GridSpec::centered(65, 65, 0.1);
  CircularMask mask{{0.5, -0.3}, 2.0};
  SosField f = render_sos(p, g, mask);
  REQUIRE(!f.masked_indices.empty());
  double inside_dev = 0.0;
  for (int iy = 0; iy < g.height; ++iy)
    for (int ix = 0; ix < g.width; ++ix) {
      double v = f.raster.at(ix, iy);
      if (mask.contains(g.world(ix, iy)))
        inside_dev = std::max(inside_dev, std::abs(v - 1500.0));
      else
        CHECK(v == 1500.0);
    }
  CHECK(inside_dev > 0.0);
  // coordinates normalized to the mask radius
  for (const auto& c : f.coords) {
    CHECK(std::abs(c.x) <= 1.0 + 1e-12);
    CHECK(std::abs(c.y) <= 1.0 + 1e-12);
  }
}

TEST_CASE("forward rendering is bitwise deterministic", "[nfield]") {
  SirenParams p = init_siren(3);
  GridSpec g = GridSpec::centered(33, 33, 0.2);
  CircularMask mask{{0, 0}, 2.5};
  SosField a = render_sos(p, g, mask);
  SosField b = render_sos(p, g, mask);
  CHECK(a.raster.values == b.raster.values);
}

TEST_CASE("reverse-mode gradients match central finite differences", "[nfield]") {
  SirenParams p = init_siren(9, 8, 2, 30.0, 50.0, 1500.0);
  GridSpec g = GridSpec::centered(17, 17, 0.2);
  CircularMask mask{{0, 0}, 1.5};
  SosField f = render_sos(p, g, mask);
  REQUIRE(f.coords.size() > 10);

  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> gv(f.coords.size());
  for (double& v : gv) v = u(rng);

  std::vector<double> grad = backprop_sos(p, f, gv);
  auto loss = [&](const SirenParams& q) {
    SosField fq = render_sos(q, g, mask);
    double acc = 0.0;
    for (size_t i = 0; i < gv.size(); ++i)
      acc += gv[i] * fq.raster.values[fq.masked_indices[i]];
    return acc;
  };
  std::uniform_int_distribution<size_t> pick(0, p.param_count() - 1);
  // central differences: the sine chain's third derivative dominates at
  // coarser steps, so the step is chosen to test the gradient, not the FD
  const double eps = 1e-5;
  double max_rel = 0.0;
  for (int t = 0; t < 100; ++t) {
    size_t i = pick(rng);
    SirenParams pp = p, pm = p;
    pp.theta[i] += eps;
    pm.theta[i] -= eps;
    double fd = (loss(pp) - loss(pm)) / (2 * eps);
    double scale = std::max({1e-8, std::abs(fd), std::abs(grad[i])});
    max_rel = std::max(max_rel, std::abs(grad[i] - fd) / scale);
  }
  CHECK(max_rel < 1e-4);
}

TEST_CASE("gradients are linear in the upstream signal", "[nfield]") {
  SirenParams p = init_siren(11, 8, 2);
  GridSpec g = GridSpec::centered(17, 17, 0.2);
  CircularMask mask{{0, 0}, 1.5};
  SosField f = render_sos(p, g, mask);

  std::vector<double> zero(f.coords.size(), 0.0);
  for (double gr : backprop_sos(p, f, zero)) CHECK(gr == 0.0);

  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> g1(f.coords.size()), g2(f.coords.size()), g12(f.coords.size());
  for (size_t i = 0; i < g1.size(); ++i) {
    g1[i] = u(rng);
    g2[i] = u(rng);
    g12[i] = g1[i] + g2[i];
  }
  auto a = backprop_sos(p, f, g1);
  auto b = backprop_sos(p, f, g2);
  auto ab = backprop_sos(p, f, g12);
  for (size_t i = 0; i < a.size(); ++i)
    CHECK(ab[i] == Catch::Approx(a[i] + b[i]).margin(1e-10));
}

TEST_CASE("rendered field is continuous in the coordinates", "[nfield]") {
  SirenParams p = init_siren(13);
  const double delta = 1e-6;
  for (double x : {-0.7, -0.1, 0.3, 0.8})
    for (double y : {-0.5, 0.0, 0.6}) {
      double v0 = siren_eval_sos(p, {x, y});
      double v1 = siren_eval_sos(p, {x + delta, y});
      // |dv/dc| is bounded by out_scale * omega0^2 * prod(fan * bound) ~ 1e4
      CHECK(std::abs(v1 - v0) < 1e4 * delta);
    }
}
