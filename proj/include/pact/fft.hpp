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

#ifndef PACT_FFT_HPP
#define PACT_FFT_HPP

#include <bit>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

// Small self-contained FFT for the patch sizes used here (P <= a few hundred).
// Radix-2 iterative Cooley-Tukey for powers of two, direct DFT otherwise.

namespace pact::fft {

using cplx = std::complex<double>;

/// Signed frequency index of FFT bin i for length n: 0..n/2, then negative.
inline int freq_index(int i, int n) { return i <= n / 2 ? i : i - n; }

namespace detail {

inline void radix2(cplx* a, int n, int sign) {
  // bit reversal permutation
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (int len = 2; len <= n; len <<= 1) {
    double ang = sign * 2.0 * std::numbers::pi / len;
    cplx wl(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      cplx w(1.0);
      for (int k = 0; k < len / 2; ++k) {
        cplx u = a[i + k];
        cplx v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

inline void dft_direct(cplx* a, int n, int sign) {
  std::vector<cplx> out(n);
  for (int k = 0; k < n; ++k) {
    cplx acc(0.0);
    for (int m = 0; m < n; ++m) {
      double ang = sign * 2.0 * std::numbers::pi * k * m / n;
      acc += a[m] * cplx(std::cos(ang), std::sin(ang));
    }
    out[k] = acc;
  }
  for (int k = 0; k < n; ++k) a[k] = out[k];
}

inline void transform(cplx* a, int n, int sign) {
  if (n <= 1) return;
  if (std::has_single_bit(static_cast<unsigned>(n)))
    radix2(a, n, sign);
  else
    dft_direct(a, n, sign);
}

}  // namespace detail

/// In-place forward FFT (e^{-i 2 pi k n / N} convention), no scaling.
inline void forward(cplx* a, int n) { detail::transform(a, n, -1); }

/// In-place inverse FFT, scaled by 1/N.
inline void inverse(cplx* a, int n) {
  detail::transform(a, n, +1);
  for (int i = 0; i < n; ++i) a[i] /= n;
}

/// In-place 2D forward FFT of a row-major w x h array.
inline void forward_2d(std::vector<cplx>& a, int w, int h) {
  for (int y = 0; y < h; ++y) forward(a.data() + static_cast<size_t>(y) * w, w);
  std::vector<cplx> col(h);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) col[y] = a[static_cast<size_t>(y) * w + x];
    forward(col.data(), h);
    for (int y = 0; y < h; ++y) a[static_cast<size_t>(y) * w + x] = col[y];
  }
}

/// In-place 2D inverse FFT (scaled by 1/(w*h)).
inline void inverse_2d(std::vector<cplx>& a, int w, int h) {
  for (int y = 0; y < h; ++y) inverse(a.data() + static_cast<size_t>(y) * w, w);
  std::vector<cplx> col(h);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) col[y] = a[static_cast<size_t>(y) * w + x];
    inverse(col.data(), h);
    for (int y = 0; y < h; ++y) a[static_cast<size_t>(y) * w + x] = col[y];
  }
}

}  // namespace pact::fft

#endif  // PACT_FFT_HPP
