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
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include "pact/fft.hpp"

using pact::fft::cplx;

namespace {

// reference DFT, written independently of the implementation under test
std::vector<cplx> reference_dft(const std::vector<cplx>& in, int sign) {
  int n = static_cast<int>(in.size());
  std::vector<cplx> out(n);
  for (int k = 0; k < n; ++k) {
    cplx acc(0.0);
    for (int m = 0; m < n; ++m) {
      double ang = sign * 2.0 * std::numbers::pi * k * m / n;
      acc += in[m] * cplx(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  return out;
}

std::vector<cplx> random_signal(int n, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<cplx> v(n);
  for (auto& x : v) x = cplx(u(rng), u(rng));
  return v;
}

}  // namespace

TEST_CASE("forward FFT matches reference DFT", "[fft]") {
  for (int n : {8, 32, 12, 15}) {
    auto in = random_signal(n, 100 + n);
    auto want = reference_dft(in, -1);
    auto got = in;
    pact::fft::forward(got.data(), n);
    for (int k = 0; k < n; ++k) CHECK(std::abs(got[k] - want[k]) < 1e-9);
  }
}

TEST_CASE("inverse FFT round-trips", "[fft]") {
  for (int n : {16, 32, 12}) {
    auto in = random_signal(n, 200 + n);
    auto buf = in;
    pact::fft::forward(buf.data(), n);
    pact::fft::inverse(buf.data(), n);
    for (int k = 0; k < n; ++k) CHECK(std::abs(buf[k] - in[k]) < 1e-12);
  }
}

TEST_CASE("2D FFT Parseval identity", "[fft]") {
  const int P = 32;
  auto a = random_signal(P * P, 42);
  double spatial = 0.0;
  for (const auto& v : a) spatial += std::norm(v);
  auto spec = a;
  pact::fft::forward_2d(spec, P, P);
  double freq = 0.0;
  for (const auto& v : spec) freq += std::norm(v);
  CHECK(freq / (P * P) == Catch::Approx(spatial).epsilon(1e-12));
}

TEST_CASE("2D round trip", "[fft]") {
  const int w = 12, h = 8;
  auto a = random_signal(w * h, 5);
  auto buf = a;
  pact::fft::forward_2d(buf, w, h);
  pact::fft::inverse_2d(buf, w, h);
  for (size_t i = 0; i < a.size(); ++i) CHECK(std::abs(buf[i] - a[i]) < 1e-12);
}

TEST_CASE("signed frequency index", "[fft]") {
  CHECK(pact::fft::freq_index(0, 8) == 0);
  CHECK(pact::fft::freq_index(3, 8) == 3);
  CHECK(pact::fft::freq_index(4, 8) == 4);  // Nyquist kept positive
  CHECK(pact::fft::freq_index(5, 8) == -3);
  CHECK(pact::fft::freq_index(7, 8) == -1);
}
