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

#ifndef PACT_ABERRATION_HPP
#define PACT_ABERRATION_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "pact/core.hpp"
#include "pact/fft.hpp"

// Differentiable acoustic forward model: straight-ray times of flight,
// per-patch wavefront error profiles with sparse sensitivities w.r.t. the
// masked SOS pixels, and per-delay Fourier transfer functions / PSFs.

namespace pact {

using fft::cplx;

namespace detail {

struct BilinearStencil {
  int idx[4];
  double weight[4];
  double value;
};

/// Bilinear sample of a raster at world point p, with the contributing pixel
/// indices and weights (coordinates clamped to the grid).
inline BilinearStencil bilinear_stencil(const RasterGrid& g, Vec2 p) {
  double fx = (p.x - g.origin.x) / g.pitch;
  double fy = (p.y - g.origin.y) / g.pitch;
  fx = std::clamp(fx, 0.0, static_cast<double>(g.width - 1));
  fy = std::clamp(fy, 0.0, static_cast<double>(g.height - 1));
  int ix = std::min(static_cast<int>(fx), std::max(g.width - 2, 0));
  int iy = std::min(static_cast<int>(fy), std::max(g.height - 2, 0));
  double ax = fx - ix;
  double ay = fy - iy;
  int ix1 = std::min(ix + 1, g.width - 1);
  int iy1 = std::min(iy + 1, g.height - 1);
  BilinearStencil s;
  s.idx[0] = iy * g.width + ix;
  s.idx[1] = iy * g.width + ix1;
  s.idx[2] = iy1 * g.width + ix;
  s.idx[3] = iy1 * g.width + ix1;
  s.weight[0] = (1 - ax) * (1 - ay);
  s.weight[1] = ax * (1 - ay);
  s.weight[2] = (1 - ax) * ay;
  s.weight[3] = ax * ay;
  s.value = s.weight[0] * g.values[s.idx[0]] + s.weight[1] * g.values[s.idx[1]] +
            s.weight[2] * g.values[s.idx[2]] + s.weight[3] * g.values[s.idx[3]];
  return s;
}

}  // namespace detail

/// Straight-ray time of flight (seconds) from src to dst through the SOS map.
/// Decomposed as |dst-src|/v0 plus the in-mask correction integral of
/// (1/v - 1/v0), midpoint rule with bilinear SOS sampling.
inline double time_of_flight(Vec2 src, Vec2 dst, const RasterGrid& sos, double v0,
                             const CircularMask& mask, double step_mm) {
  if (!(step_mm > 0.0)) throw ValidationError("time_of_flight: step must be > 0");
  if (!(v0 > 0.0)) throw ValidationError("time_of_flight: v0 must be > 0");
  Vec2 d = dst - src;
  double len = d.norm();
  if (len == 0.0) return 0.0;
  double correction = 0.0;
  auto [t0, t1] = segment_circle_intersection(src, dst, mask.center, mask.radius);
  if (t0 < t1) {
    Vec2 u = d * (1.0 / len);
    int n = std::max(1, static_cast<int>(std::ceil((t1 - t0) / step_mm)));
    double dl = (t1 - t0) / n;
    double inv_v0 = 1.0 / v0;
    for (int i = 0; i < n; ++i) {
      Vec2 p = src + u * (t0 + (i + 0.5) * dl);
      double v = sos.sample_bilinear(p);
      correction += dl * (1.0 / v - inv_v0);
    }
  }
  return 1e-3 * (len / v0 + correction);  // mm / (m/s) -> s
}

/// Wavefront error sampled at n_angles uniform ray directions from one patch
/// center, with optional sparse Jacobian rows w.r.t. in-mask SOS pixels
/// (pixel = flat row-major index into the SOS grid).
struct WavefrontProfile {
  Vec2 center;
  int n_angles = 0;
  std::vector<double> w;  // mm, w[a] for direction 2*pi*a/n_angles

  struct JacobianEntry {
    int32_t pixel;
    float dw_dv;  // mm per (m/s)
  };
  std::vector<std::vector<JacobianEntry>> jacobian;  // per angle; empty if not requested

  double angle(int a) const { return 2.0 * std::numbers::pi * a / n_angles; }

  /// Periodic linear interpolation of w at an arbitrary angle (radians).
  double interpolate(double theta) const {
    double tau = 2.0 * std::numbers::pi;
    double pos = std::fmod(theta, tau);
    if (pos < 0) pos += tau;
    pos = pos / tau * n_angles;
    int a0 = static_cast<int>(pos) % n_angles;
    double f = pos - std::floor(pos);
    int a1 = (a0 + 1) % n_angles;
    return (1.0 - f) * w[a0] + f * w[a1];
  }
};

/// Wavefront error w(theta) = integral of (1 - v0/v) along the ray from
/// `center` in direction theta out to the transducer ring; the integrand is
/// identically zero outside the mask disc, so integration is clipped to it.
inline WavefrontProfile wavefront_profile(Vec2 center, const RingGeometry& geom,
                                          const RasterGrid& sos, double v0,
                                          const CircularMask& mask, int n_angles,
                                          double step_mm, bool with_jacobian) {
  geom.validate();
  if (n_angles < 4) throw ValidationError("wavefront_profile: need at least 4 angles");
  if (!(step_mm > 0.0)) throw ValidationError("wavefront_profile: step must be > 0");
  if (center.norm() >= geom.radius)
    throw ValidationError("wavefront_profile: patch center outside the transducer ring");

  WavefrontProfile prof;
  prof.center = center;
  prof.n_angles = n_angles;
  prof.w.assign(n_angles, 0.0);
  if (with_jacobian) prof.jacobian.resize(n_angles);

  // In-mask test per grid pixel, shared with the SOS field convention.
  const GridSpec gs = sos.spec();

  for (int a = 0; a < n_angles; ++a) {
    double theta = prof.angle(a);
    Vec2 u{std::cos(theta), std::sin(theta)};
    // exit point of the ray on the ring circle
    double b = center.dot(u);
    double c = center.dot(center) - geom.radius * geom.radius;
    double t_ring = -b + std::sqrt(b * b - c);
    Vec2 end = center + u * t_ring;

    auto [t0, t1] = segment_circle_intersection(center, end, mask.center, mask.radius);
    if (t0 >= t1) continue;
    int n = std::max(1, static_cast<int>(std::ceil((t1 - t0) / step_mm)));
    double dl = (t1 - t0) / n;
    double acc = 0.0;
    auto* jrow = with_jacobian ? &prof.jacobian[a] : nullptr;
    if (jrow) jrow->reserve(4 * n);
    for (int i = 0; i < n; ++i) {
      Vec2 p = center + u * (t0 + (i + 0.5) * dl);
      auto st = detail::bilinear_stencil(sos, p);
      acc += dl * (1.0 - v0 / st.value);
      if (jrow) {
        double f = dl * v0 / (st.value * st.value);
        for (int kcorner = 0; kcorner < 4; ++kcorner) {
          int idx = st.idx[kcorner];
          Vec2 pcenter = gs.world(idx % gs.width, idx / gs.width);
          if (!mask.contains(pcenter)) continue;
          jrow->push_back({idx, static_cast<float>(f * st.weight[kcorner])});
        }
      }
    }
    prof.w[a] = acc;
  }
  return prof;
}

/// Fourier transfer functions of the per-delay PSFs for one patch.
/// spectra[j][by*P + bx] is H(k; d_j) on the P x P FFT frequency grid with
/// k components 2*pi*f/(P*pitch) rad/mm, f the signed FFT frequency index.
struct TransferStack {
  int patch_pixels = 0;
  double pitch = 0.0;
  std::vector<double> delays;              // mm
  std::vector<std::vector<cplx>> spectra;  // per delay, P*P row-major
};

namespace detail {

/// Enforce H(-k) = conj(H(k)) on the self-aliased Nyquist bins of an even-
/// sized grid (the formula below guarantees it everywhere else). The map is
/// linear and self-adjoint, so it doubles as its own gradient pullback.
inline void conj_symmetrize_nyquist(std::vector<cplx>& h, int P) {
  if (P % 2 != 0) return;
  int half = P / 2;
  auto fix_pair = [&](int bx, int by) {
    int nbx = (P - bx) % P;
    int nby = (P - by) % P;
    size_t i = static_cast<size_t>(by) * P + bx;
    size_t j = static_cast<size_t>(nby) * P + nbx;
    if (j < i) return;  // each unordered pair once
    cplx s = 0.5 * (h[i] + std::conj(h[j]));
    h[i] = s;
    h[j] = std::conj(s);
  };
  for (int by = 0; by < P; ++by) fix_pair(half, by);
  for (int bx = 0; bx < P; ++bx) fix_pair(bx, half);
}

struct BinGeometry {
  double kmag;    // rad/mm
  double angle;   // direction of k
};

inline BinGeometry bin_geometry(int bx, int by, int P, double pitch) {
  double scale = 2.0 * std::numbers::pi / (P * pitch);
  double kx = scale * fft::freq_index(bx, P);
  double ky = scale * fft::freq_index(by, P);
  return {std::hypot(kx, ky), std::atan2(ky, kx)};
}

}  // namespace detail

/// H(k; d) = 1/2 (exp(-j|k|(d - w(angle(k)))) + exp(+j|k|(d - w(angle(k)+pi)))),
/// with w interpolated periodically from the profile. DC bin is exactly 1.
inline TransferStack transfer_stack(const WavefrontProfile& profile,
                                    const std::vector<double>& delays, int patch_pixels,
                                    double pitch) {
  if (patch_pixels < 1) throw ValidationError("transfer_stack: patch_pixels must be >= 1");
  if (!(pitch > 0.0)) throw ValidationError("transfer_stack: pitch must be > 0");
  const int P = patch_pixels;
  TransferStack ts;
  ts.patch_pixels = P;
  ts.pitch = pitch;
  ts.delays = delays;
  ts.spectra.assign(delays.size(), std::vector<cplx>(static_cast<size_t>(P) * P));
  for (int by = 0; by < P; ++by)
    for (int bx = 0; bx < P; ++bx) {
      size_t bin = static_cast<size_t>(by) * P + bx;
      auto bg = detail::bin_geometry(bx, by, P, pitch);
      if (bg.kmag == 0.0) {
        for (auto& h : ts.spectra) h[bin] = 1.0;
        continue;
      }
      double w1 = profile.interpolate(bg.angle);
      double w2 = profile.interpolate(bg.angle + std::numbers::pi);
      for (size_t j = 0; j < delays.size(); ++j) {
        cplx e1 = std::polar(0.5, -bg.kmag * (delays[j] - w1));
        cplx e2 = std::polar(0.5, +bg.kmag * (delays[j] - w2));
        ts.spectra[j][bin] = e1 + e2;
      }
    }
  for (auto& h : ts.spectra) detail::conj_symmetrize_nyquist(h, P);
  return ts;
}

/// Pull a gradient w.r.t. the transfer spectra back to the wavefront samples.
/// grad_h[j][bin] holds dL/dRe H + j dL/dIm H for delay j. Returns dL/dw per
/// profile angle, using the same interpolation weights as transfer_stack.
inline std::vector<double> transfer_grad_to_wavefront(
    const WavefrontProfile& profile, const std::vector<double>& delays, int patch_pixels,
    double pitch, const std::vector<std::vector<cplx>>& grad_h) {
  const int P = patch_pixels;
  const int N = profile.n_angles;
  const double tau = 2.0 * std::numbers::pi;
  std::vector<double> dw(N, 0.0);
  auto interp_indices = [&](double theta, int& a0, int& a1, double& f) {
    double pos = std::fmod(theta, tau);
    if (pos < 0) pos += tau;
    pos = pos / tau * N;
    a0 = static_cast<int>(pos) % N;
    f = pos - std::floor(pos);
    a1 = (a0 + 1) % N;
  };
  std::vector<std::vector<cplx>> g = grad_h;
  for (auto& gj : g) detail::conj_symmetrize_nyquist(gj, P);  // self-adjoint pullback
  for (int by = 0; by < P; ++by)
    for (int bx = 0; bx < P; ++bx) {
      auto bg = detail::bin_geometry(bx, by, P, pitch);
      if (bg.kmag == 0.0) continue;
      size_t bin = static_cast<size_t>(by) * P + bx;
      int a0, a1, b0, b1;
      double f1, f2;
      interp_indices(bg.angle, a0, a1, f1);
      interp_indices(bg.angle + std::numbers::pi, b0, b1, f2);
      double w1 = (1 - f1) * profile.w[a0] + f1 * profile.w[a1];
      double w2 = (1 - f2) * profile.w[b0] + f2 * profile.w[b1];
      for (size_t j = 0; j < delays.size(); ++j) {
        cplx gb = g[j][bin];
        if (gb == cplx(0.0, 0.0)) continue;
        // dH/dw1 = +j|k| e1, dH/dw2 = -j|k| e2
        cplx e1 = std::polar(0.5, -bg.kmag * (delays[j] - w1));
        cplx e2 = std::polar(0.5, +bg.kmag * (delays[j] - w2));
        double g1 = bg.kmag * (gb.real() * -e1.imag() + gb.imag() * e1.real());
        double g2 = bg.kmag * (gb.real() * e2.imag() + gb.imag() * -e2.real());
        dw[a0] += (1 - f1) * g1;
        dw[a1] += f1 * g1;
        dw[b0] += (1 - f2) * g2;
        dw[b1] += f2 * g2;
      }
    }
  return dw;
}

/// Accumulate dL/dv += J^T dL/dw into a flat SOS-grid-sized vector.
inline void accumulate_wavefront_grad(const WavefrontProfile& profile,
                                      const std::vector<double>& dw,
                                      std::vector<double>& grad_v) {
  if (profile.jacobian.empty())
    throw ValidationError("accumulate_wavefront_grad: profile has no jacobian");
  for (int a = 0; a < profile.n_angles; ++a) {
    double g = dw[a];
    if (g == 0.0) continue;
    for (const auto& e : profile.jacobian[a]) grad_v[e.pixel] += g * e.dw_dv;
  }
}

/// Backward ray trace for the training loop: re-walks the same quadrature as
/// wavefront_profile and scatters dL/dw[a] * dl * v0/v^2 * beta directly into
/// a grid-sized gradient accumulator, without materializing Jacobian rows.
/// Contributions land on every stencil pixel; out-of-mask entries are simply
/// never read by the masked-field backprop.
inline void wavefront_grad_trace(Vec2 center, const RingGeometry& geom,
                                 const RasterGrid& sos, double v0, const CircularMask& mask,
                                 int n_angles, double step_mm,
                                 const std::vector<double>& dw, std::vector<double>& grad_v) {
  const double tau = 2.0 * std::numbers::pi;
  for (int a = 0; a < n_angles; ++a) {
    double g = dw[a];
    if (g == 0.0) continue;
    double theta = tau * a / n_angles;
    Vec2 u{std::cos(theta), std::sin(theta)};
    double b = center.dot(u);
    double c = center.dot(center) - geom.radius * geom.radius;
    double t_ring = -b + std::sqrt(b * b - c);
    auto [t0, t1] = segment_circle_intersection(center, center + u * t_ring, mask.center,
                                                mask.radius);
    if (t0 >= t1) continue;
    int n = std::max(1, static_cast<int>(std::ceil((t1 - t0) / step_mm)));
    double dl = (t1 - t0) / n;
    for (int i = 0; i < n; ++i) {
      Vec2 p = center + u * (t0 + (i + 0.5) * dl);
      auto st = detail::bilinear_stencil(sos, p);
      double f = g * dl * v0 / (st.value * st.value);
      grad_v[st.idx[0]] += f * st.weight[0];
      grad_v[st.idx[1]] += f * st.weight[1];
      grad_v[st.idx[2]] += f * st.weight[2];
      grad_v[st.idx[3]] += f * st.weight[3];
    }
  }
}

/// Frequency-grid geometry shared by every patch of a layout: |k| plus the
/// periodic interpolation stencil of the wavefront at angle(k) and angle(k)+pi.
struct PatchBinTable {
  int patch_pixels = 0;
  double pitch = 0.0;
  int n_angles = 0;
  struct Bin {
    double kmag;
    int a0, a1, b0, b1;
    double f1, f2;
  };
  std::vector<Bin> bins;

  static PatchBinTable make(int patch_pixels, double pitch, int n_angles) {
    PatchBinTable t;
    t.patch_pixels = patch_pixels;
    t.pitch = pitch;
    t.n_angles = n_angles;
    const int P = patch_pixels;
    const double tau = 2.0 * std::numbers::pi;
    t.bins.resize(static_cast<size_t>(P) * P);
    auto interp = [&](double theta, int& i0, int& i1, double& f) {
      double pos = std::fmod(theta, tau);
      if (pos < 0) pos += tau;
      pos = pos / tau * n_angles;
      i0 = static_cast<int>(pos) % n_angles;
      f = pos - std::floor(pos);
      i1 = (i0 + 1) % n_angles;
    };
    for (int by = 0; by < P; ++by)
      for (int bx = 0; bx < P; ++bx) {
        auto bg = detail::bin_geometry(bx, by, P, pitch);
        Bin& b = t.bins[static_cast<size_t>(by) * P + bx];
        b.kmag = bg.kmag;
        interp(bg.angle, b.a0, b.a1, b.f1);
        interp(bg.angle + std::numbers::pi, b.b0, b.b1, b.f2);
      }
    return t;
  }
};

/// Real PSF from a conjugate-symmetric transfer spectrum. The PSF is centered:
/// the zero-lag tap sits at pixel (P/2, P/2) and the raster origin is chosen
/// so that pixel's world position is (0, 0).
inline RasterGrid psf_from_transfer(const std::vector<cplx>& spectrum, int patch_pixels,
                                    double pitch = 1.0) {
  const int P = patch_pixels;
  if (spectrum.size() != static_cast<size_t>(P) * P)
    throw ValidationError("psf_from_transfer: spectrum size mismatch");
  double max_mag = 0.0;
  for (const auto& v : spectrum) max_mag = std::max(max_mag, std::abs(v));
  double asym = 0.0;
  for (int by = 0; by < P; ++by)
    for (int bx = 0; bx < P; ++bx) {
      size_t i = static_cast<size_t>(by) * P + bx;
      size_t j = static_cast<size_t>((P - by) % P) * P + (P - bx) % P;
      asym = std::max(asym, std::abs(spectrum[i] - std::conj(spectrum[j])));
    }
  if (asym > 1e-9 * std::max(1.0, max_mag))
    throw ValidationError("psf_from_transfer: spectrum not conjugate-symmetric, max asymmetry " +
                          std::to_string(asym));

  std::vector<cplx> buf = spectrum;
  fft::inverse_2d(buf, P, P);
  double max_real = 0.0;
  for (const auto& v : buf) max_real = std::max(max_real, std::abs(v.real()));
  double max_imag = 0.0;
  for (const auto& v : buf) max_imag = std::max(max_imag, std::abs(v.imag()));
  if (max_real > 0.0 && max_imag > 1e-9 * max_real)
    throw NumericalError("psf_from_transfer: imaginary residue " + std::to_string(max_imag) +
                         " exceeds 1e-9 of max " + std::to_string(max_real));

  GridSpec gs;
  gs.width = P;
  gs.height = P;
  gs.pitch = pitch;
  gs.origin = {-(P / 2) * pitch, -(P / 2) * pitch};
  RasterGrid psf = RasterGrid::zeros(gs);
  for (int y = 0; y < P; ++y)
    for (int x = 0; x < P; ++x)
      psf.at((x + P / 2) % P, (y + P / 2) % P) = buf[static_cast<size_t>(y) * P + x].real();
  return psf;
}

struct FourierMode {
  int order = 0;
  double cos_coeff = 0.0;
  double sin_coeff = 0.0;
};

/// Real Fourier series coefficients of the wavefront profile up to max_order.
inline std::vector<FourierMode> wavefront_fourier_modes(const WavefrontProfile& profile,
                                                        int max_order) {
  const int N = profile.n_angles;
  if (N < 2 * max_order + 1)
    throw ValidationError("wavefront_fourier_modes: need n_angles >= 2*max_order+1");
  std::vector<FourierMode> modes;
  modes.reserve(max_order + 1);
  for (int m = 0; m <= max_order; ++m) {
    double ca = 0.0, sa = 0.0;
    for (int a = 0; a < N; ++a) {
      double th = profile.angle(a);
      ca += profile.w[a] * std::cos(m * th);
      sa += profile.w[a] * std::sin(m * th);
    }
    double scale = (m == 0) ? 1.0 / N : 2.0 / N;
    modes.push_back({m, ca * scale, m == 0 ? 0.0 : sa * scale});
  }
  return modes;
}

}  // namespace pact

#endif  // PACT_ABERRATION_HPP
