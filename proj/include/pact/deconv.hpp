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

#ifndef PACT_DECONV_HPP
#define PACT_DECONV_HPP

#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "pact/aberration.hpp"
#include "pact/beamform.hpp"
#include "pact/core.hpp"
#include "pact/fft.hpp"
#include "pact/parallel.hpp"

// Patch spectra of the DAS stack, the multichannel pseudo-inverse
// deconvolution, and Gaussian-window merging of deconvolved patches.

namespace pact {

/// FFTs of one patch across all delay channels.
struct PatchSpectra {
  int patch_index = 0;
  std::pair<int, int> offset;            // pixel offset of the patch in the grid
  std::vector<std::vector<cplx>> Y;      // per delay, P*P row-major
};

inline PatchSpectra extract_patch_spectra_one(const DasStack& stack, const PatchLayout& layout,
                                              int patch_index) {
  const int P = layout.patch_pixels;
  PatchSpectra ps;
  ps.patch_index = patch_index;
  ps.offset = layout.offsets[patch_index];
  ps.Y.resize(stack.images.size());
  std::vector<cplx> buf(static_cast<size_t>(P) * P);
  for (size_t j = 0; j < stack.images.size(); ++j) {
    const RasterGrid& img = stack.images[j];
    for (int y = 0; y < P; ++y)
      for (int x = 0; x < P; ++x)
        buf[static_cast<size_t>(y) * P + x] = img.at(ps.offset.first + x, ps.offset.second + y);
    fft::forward_2d(buf, P, P);
    ps.Y[j] = buf;
  }
  return ps;
}

inline std::vector<PatchSpectra> extract_patch_spectra(const DasStack& stack,
                                                       const PatchLayout& layout,
                                                       int workers = 0) {
  if (stack.images.empty()) throw ValidationError("extract_patch_spectra: empty stack");
  if (!stack.images[0].spec().same_geometry(layout.grid))
    throw ValidationError("extract_patch_spectra: layout grid does not match stack grid");
  std::vector<PatchSpectra> out(layout.n_patches());
  parallel_for(layout.n_patches(), workers,
               [&](int i) { out[i] = extract_patch_spectra_one(stack, layout, i); });
  return out;
}

/// Per-bin pseudo-inverse across delay channels:
///   X(k) = sum_j conj(H_j) Y_j / (sum_j |H_j|^2 + eps * M).
inline std::vector<cplx> multichannel_deconvolve(const PatchSpectra& ys,
                                                 const TransferStack& hs, double eps) {
  if (ys.Y.size() != hs.spectra.size())
    throw ValidationError("deconvolve: Y and H channel counts differ");
  if (ys.Y.empty()) throw ValidationError("deconvolve: no channels");
  const size_t nbins = ys.Y[0].size();
  const size_t M = ys.Y.size();
  std::vector<cplx> x(nbins);
  for (size_t b = 0; b < nbins; ++b) {
    cplx num(0.0);
    double den = eps * static_cast<double>(M);
    for (size_t j = 0; j < M; ++j) {
      num += std::conj(hs.spectra[j][b]) * ys.Y[j][b];
      den += std::norm(hs.spectra[j][b]);
    }
    x[b] = den > 0.0 ? num / den : cplx(0.0);
  }
  return x;
}

/// Analytic derivative of X(bin) w.r.t. (Re H_j(bin), Im H_j(bin)), for the
/// differentiability contract tests. X depends on H only within the same bin.
inline std::pair<cplx, cplx> deconv_jacobian_H(const PatchSpectra& ys, const TransferStack& hs,
                                               double eps, size_t j, size_t bin) {
  const size_t M = ys.Y.size();
  cplx num(0.0);
  double den = eps * static_cast<double>(M);
  for (size_t m = 0; m < M; ++m) {
    num += std::conj(hs.spectra[m][bin]) * ys.Y[m][bin];
    den += std::norm(hs.spectra[m][bin]);
  }
  cplx h = hs.spectra[j][bin];
  cplx y = ys.Y[j][bin];
  // X = num/den; d num = conj(dH) y; d den = 2 Re(conj(h) dH)
  cplx dre = (y - (num / den) * 2.0 * h.real()) / den;
  cplx dim = (-cplx(0, 1) * y - (num / den) * 2.0 * h.imag()) / den;
  return {dre, dim};
}

/// Gaussian merging window, peak 1 at the patch center.
struct MergeWindow {
  double fwhm_mm = 0.0;
  int patch_pixels = 0;
  std::vector<double> weights;  // P*P, > 0

  static MergeWindow make(double fwhm_mm, int patch_pixels, double pitch) {
    if (!(fwhm_mm > 0.0)) throw ValidationError("merge window: FWHM must be > 0");
    MergeWindow w;
    w.fwhm_mm = fwhm_mm;
    w.patch_pixels = patch_pixels;
    double sigma_px = fwhm_mm / (2.0 * std::sqrt(2.0 * std::log(2.0))) / pitch;
    double c = 0.5 * (patch_pixels - 1);
    w.weights.resize(static_cast<size_t>(patch_pixels) * patch_pixels);
    for (int y = 0; y < patch_pixels; ++y)
      for (int x = 0; x < patch_pixels; ++x) {
        double r2 = (x - c) * (x - c) + (y - c) * (y - c);
        w.weights[static_cast<size_t>(y) * patch_pixels + x] =
            std::exp(-0.5 * r2 / (sigma_px * sigma_px));
      }
    return w;
  }
};

/// Weight-normalized overlap-add of per-patch images back onto the grid.
inline RasterGrid merge_patches(const std::vector<std::vector<double>>& patches,
                                const PatchLayout& layout, const MergeWindow& window) {
  if (patches.size() != static_cast<size_t>(layout.n_patches()))
    throw ValidationError("merge_patches: patch count does not match layout");
  const int P = layout.patch_pixels;
  if (window.patch_pixels != P)
    throw ValidationError("merge_patches: window size does not match layout");
  RasterGrid img = RasterGrid::zeros(layout.grid);
  RasterGrid wsum = RasterGrid::zeros(layout.grid);
  for (int i = 0; i < layout.n_patches(); ++i) {
    auto [ox, oy] = layout.offsets[i];
    const auto& patch = patches[i];
    for (int y = 0; y < P; ++y)
      for (int x = 0; x < P; ++x) {
        double w = window.weights[static_cast<size_t>(y) * P + x];
        img.at(ox + x, oy + y) += w * patch[static_cast<size_t>(y) * P + x];
        wsum.at(ox + x, oy + y) += w;
      }
  }
  for (size_t i = 0; i < img.values.size(); ++i)
    if (wsum.values[i] > 0.0) img.values[i] /= wsum.values[i];
  return img;
}

struct DeconvolveOptions {
  double eps = 1e-3;
  int n_angles = 512;
  double ray_step = 0.05;     // mm
  double merge_fwhm = 1.5;    // mm
  int workers = 0;
};

/// Full per-patch pipeline: wavefront -> transfer stack -> multichannel
/// deconvolution -> inverse FFT -> Gaussian merge.
inline RasterGrid deconvolve_image(const DasStack& stack, const RasterGrid& sos,
                                   const RingGeometry& geom, const CircularMask& mask,
                                   const PatchLayout& layout,
                                   const DeconvolveOptions& opt = {}) {
  if (stack.images.empty()) throw ValidationError("deconvolve_image: empty stack");
  if (!stack.images[0].spec().same_geometry(layout.grid))
    throw ValidationError("deconvolve_image: layout grid does not match stack grid");
  const int P = layout.patch_pixels;
  const double pitch = layout.grid.pitch;
  std::vector<std::vector<double>> patches(layout.n_patches());
  parallel_for(layout.n_patches(), opt.workers, [&](int i) {
    PatchSpectra ys = extract_patch_spectra_one(stack, layout, i);
    WavefrontProfile prof = wavefront_profile(layout.centers[i], geom, sos, stack.v0, mask,
                                              opt.n_angles, opt.ray_step, false);
    TransferStack hs = transfer_stack(prof, stack.delays, P, pitch);
    std::vector<cplx> x = multichannel_deconvolve(ys, hs, opt.eps);
    fft::inverse_2d(x, P, P);
    auto& out = patches[i];
    out.resize(x.size());
    for (size_t b = 0; b < x.size(); ++b) out[b] = x[b].real();
  });
  return merge_patches(patches, layout, MergeWindow::make(opt.merge_fwhm, P, pitch));
}

}  // namespace pact

#endif  // PACT_DECONV_HPP
