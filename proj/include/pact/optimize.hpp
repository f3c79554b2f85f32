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

#ifndef PACT_OPTIMIZE_HPP
#define PACT_OPTIMIZE_HPP

#include <chrono>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "pact/aberration.hpp"
#include "pact/beamform.hpp"
#include "pact/core.hpp"
#include "pact/deconv.hpp"
#include "pact/nfield.hpp"
#include "pact/parallel.hpp"

// Self-supervised joint reconstruction: the |k|-weighted multichannel
// residual loss, anisotropic TV on the rendered SOS, Adam, and the
// end-to-end gradient chain  loss -> X -> H -> w -> v -> network parameters.

namespace pact {

struct LossReport {
  int epoch = 0;
  double data_term = 0.0;
  double tv_term = 0.0;
  double total = 0.0;
  double wall_time = 0.0;  // seconds spent in this epoch
};

struct TrainConfig {
  int epochs = 10;
  int steps_per_epoch = 30;  // full-batch Adam steps per reported epoch
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  double lambda_tv = 3e9;
  std::vector<double> delays = make_delays(-0.8, 0.8, 32);
  double eps_deconv = 1e-3;
  int n_angles = 512;
  double ray_step = 0.05;  // mm
  uint64_t seed = 0;
  int hidden = 64;
  int sine_layers = 2;
  double omega0 = 30.0;
  double out_scale = 100.0;  // m/s
  double patch_mm = 3.2;
  double overlap = 0.75;
  double merge_fwhm = 1.5;  // mm
  bool implicit_xhat_grad = true;  // propagate through X's dependence on H
  int workers = 0;

  void validate() const {
    if (epochs < 1) throw ValidationError("train: epochs must be >= 1");
    if (steps_per_epoch < 1) throw ValidationError("train: steps_per_epoch must be >= 1");
    if (!(learning_rate > 0.0)) throw ValidationError("train: learning rate must be > 0");
    if (!(lambda_tv >= 0.0)) throw ValidationError("train: lambda_tv must be >= 0");
    if (delays.empty()) throw ValidationError("train: need at least one delay");
  }
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long t = 0;
};

/// Standard bias-corrected Adam update, in place.
inline void adam_step(std::vector<double>& params, const std::vector<double>& grads,
                      AdamState& state, double lr, double beta1, double beta2, double eps) {
  if (grads.size() != params.size())
    throw ValidationError("adam_step: gradient size does not match parameters");
  if (state.m.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size())
    throw ValidationError("adam_step: state size does not match parameters");
  for (double g : grads)
    if (!std::isfinite(g)) throw NumericalError("adam_step: non-finite gradient");
  state.t += 1;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  for (size_t i = 0; i < params.size(); ++i) {
    double g = grads[i];
    state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
    state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
    double mhat = state.m[i] / bc1;
    double vhat = state.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

struct TvLossResult {
  double value = 0.0;
  std::vector<double> grad;  // per masked pixel, field order
};

/// Anisotropic total variation over the masked region: sum of |forward
/// difference| in x and y counting only pixel pairs that are both in-mask.
/// Subgradient 0 at ties.
inline TvLossResult tv_loss(const SosField& field, double lambda) {
  const RasterGrid& r = field.raster;
  std::vector<int> masked_of_flat(r.values.size(), -1);
  for (size_t i = 0; i < field.masked_indices.size(); ++i)
    masked_of_flat[field.masked_indices[i]] = static_cast<int>(i);
  TvLossResult out;
  out.grad.assign(field.masked_indices.size(), 0.0);
  auto sgn = [](double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); };
  for (size_t i = 0; i < field.masked_indices.size(); ++i) {
    int flat = field.masked_indices[i];
    int ix = flat % r.width;
    int iy = flat / r.width;
    if (ix + 1 < r.width) {
      int mj = masked_of_flat[flat + 1];
      if (mj >= 0) {
        double d = r.values[flat + 1] - r.values[flat];
        out.value += std::abs(d);
        out.grad[mj] += lambda * sgn(d);
        out.grad[i] -= lambda * sgn(d);
      }
    }
    if (iy + 1 < r.height) {
      int mj = masked_of_flat[flat + r.width];
      if (mj >= 0) {
        double d = r.values[flat + r.width] - r.values[flat];
        out.value += std::abs(d);
        out.grad[mj] += lambda * sgn(d);
        out.grad[i] -= lambda * sgn(d);
      }
    }
  }
  out.value *= lambda;
  return out;
}

struct PatchLossResult {
  double value = 0.0;
  std::vector<std::vector<cplx>> grad_h;  // dL/dRe H + j dL/dIm H, per delay per bin
};

/// |k|-weighted residual loss for one patch:
///   sum_j sum_k |k| |Y_j(k) - H_j(k) X(k)|^2 * scale,
/// X from the stabilized pseudo-inverse. The gradient w.r.t. H includes the
/// explicit residual term and (optionally) the implicit term through X.
template <typename YScalar>
PatchLossResult patch_data_loss(const std::vector<std::vector<std::complex<YScalar>>>& Y,
                                const TransferStack& H, double eps, double scale,
                                bool implicit_grad) {
  const size_t M = Y.size();
  if (M != H.spectra.size()) throw ValidationError("data_loss: Y/H channel mismatch");
  if (M == 0) throw ValidationError("data_loss: no channels");
  const int P = H.patch_pixels;
  const size_t nbins = static_cast<size_t>(P) * P;

  PatchLossResult res;
  res.grad_h.assign(M, std::vector<cplx>(nbins, cplx(0.0)));

  std::vector<cplx> y(M), h(M);
  for (int by = 0; by < P; ++by)
    for (int bx = 0; bx < P; ++bx) {
      size_t bin = static_cast<size_t>(by) * P + bx;
      double wk = detail::bin_geometry(bx, by, P, H.pitch).kmag * scale;
      if (wk == 0.0) continue;
      cplx num(0.0);
      double den = eps * static_cast<double>(M);
      for (size_t j = 0; j < M; ++j) {
        y[j] = cplx(Y[j][bin]);
        h[j] = H.spectra[j][bin];
        num += std::conj(h[j]) * y[j];
        den += std::norm(h[j]);
      }
      cplx x = den > 0.0 ? num / den : cplx(0.0);
      cplx big_g(0.0);  // sum_j conj(R_j) H_j
      for (size_t j = 0; j < M; ++j) {
        cplx rj = y[j] - h[j] * x;
        res.value += wk * std::norm(rj);
        cplx z = std::conj(rj) * x;
        res.grad_h[j][bin] += cplx(-2.0 * wk * z.real(), 2.0 * wk * z.imag());
        big_g += std::conj(rj) * h[j];
      }
      if (implicit_grad && den > 0.0) {
        double gx = big_g.real() * x.real() - big_g.imag() * x.imag();  // Re(G X)
        for (size_t j = 0; j < M; ++j) {
          cplx gy = big_g * y[j];
          res.grad_h[j][bin] +=
              cplx(-2.0 * wk * gy.real() / den + 4.0 * wk * gx * h[j].real() / den,
                   -2.0 * wk * gy.imag() / den + 4.0 * wk * gx * h[j].imag() / den);
        }
      }
    }
  return res;
}

namespace detail {

struct FusedScratch {
  std::vector<cplx> h;   // M * P^2 transfer values
  std::vector<cplx> gh;  // M * P^2 loss gradient w.r.t. h
  std::vector<cplx> e1;  // exp(+i k w(angle))
  std::vector<cplx> e2;  // exp(-i k w(angle+pi))
};

/// Per-delay per-bin phase factors exp(-i |k| d_j), fixed across steps.
inline std::vector<std::vector<cplx>> make_delay_phases(const PatchBinTable& table,
                                                        const std::vector<double>& delays) {
  std::vector<std::vector<cplx>> d(delays.size());
  for (size_t j = 0; j < delays.size(); ++j) {
    d[j].resize(table.bins.size());
    for (size_t b = 0; b < table.bins.size(); ++b)
      d[j][b] = std::polar(1.0, -table.bins[b].kmag * delays[j]);
  }
  return d;
}

/// Fused training-path evaluation of one patch: transfer stack from the
/// wavefront samples, |k|-weighted residual loss, and dL/dw, all in one pass.
/// Algebraically identical to transfer_stack + patch_data_loss +
/// transfer_grad_to_wavefront; phase factors are factored as
/// exp(-i|k|(d - w)) = exp(-i|k|d) exp(+i|k|w) so each bin costs two sincos
/// calls per step instead of two per delay.
template <typename YScalar>
double fused_patch_loss_grad(const std::vector<std::vector<std::complex<YScalar>>>& ys,
                             const std::vector<double>& w, const PatchBinTable& table,
                             const std::vector<std::vector<cplx>>& delay_phase, double eps,
                             double scale, bool implicit_grad, FusedScratch& scratch,
                             std::vector<double>& dw_out) {
  const size_t M = ys.size();
  const size_t nbins = table.bins.size();
  const int P = table.patch_pixels;
  scratch.h.resize(M * nbins);
  scratch.gh.assign(M * nbins, cplx(0.0));
  scratch.e1.resize(nbins);
  scratch.e2.resize(nbins);
  dw_out.assign(table.n_angles, 0.0);

  for (size_t b = 0; b < nbins; ++b) {
    const auto& bin = table.bins[b];
    double w1 = (1 - bin.f1) * w[bin.a0] + bin.f1 * w[bin.a1];
    double w2 = (1 - bin.f2) * w[bin.b0] + bin.f2 * w[bin.b1];
    scratch.e1[b] = std::polar(1.0, bin.kmag * w1);
    scratch.e2[b] = std::polar(1.0, -bin.kmag * w2);
  }
  for (size_t j = 0; j < M; ++j) {
    cplx* h = scratch.h.data() + j * nbins;
    const cplx* dp = delay_phase[j].data();
    for (size_t b = 0; b < nbins; ++b)
      h[b] = 0.5 * (dp[b] * scratch.e1[b] + std::conj(dp[b]) * scratch.e2[b]);
    std::vector<cplx> row(h, h + nbins);
    pact::detail::conj_symmetrize_nyquist(row, P);
    std::copy(row.begin(), row.end(), h);
  }

  double value = 0.0;
  for (size_t b = 0; b < nbins; ++b) {
    double wk = table.bins[b].kmag * scale;
    if (wk == 0.0) continue;
    cplx num(0.0);
    double den = eps * static_cast<double>(M);
    for (size_t j = 0; j < M; ++j) {
      cplx hj = scratch.h[j * nbins + b];
      num += std::conj(hj) * cplx(ys[j][b]);
      den += std::norm(hj);
    }
    cplx x = den > 0.0 ? num / den : cplx(0.0);
    cplx big_g(0.0);
    for (size_t j = 0; j < M; ++j) {
      cplx hj = scratch.h[j * nbins + b];
      cplx yj(ys[j][b]);
      cplx rj = yj - hj * x;
      value += wk * std::norm(rj);
      cplx z = std::conj(rj) * x;
      scratch.gh[j * nbins + b] += cplx(-2.0 * wk * z.real(), 2.0 * wk * z.imag());
      big_g += std::conj(rj) * hj;
    }
    if (implicit_grad && den > 0.0) {
      double gx = big_g.real() * x.real() - big_g.imag() * x.imag();
      for (size_t j = 0; j < M; ++j) {
        cplx hj = scratch.h[j * nbins + b];
        cplx gy = big_g * cplx(ys[j][b]);
        scratch.gh[j * nbins + b] +=
            cplx(-2.0 * wk * gy.real() / den + 4.0 * wk * gx * hj.real() / den,
                 -2.0 * wk * gy.imag() / den + 4.0 * wk * gx * hj.imag() / den);
      }
    }
  }

  for (size_t j = 0; j < M; ++j) {
    std::vector<cplx> row(scratch.gh.begin() + j * nbins, scratch.gh.begin() + (j + 1) * nbins);
    pact::detail::conj_symmetrize_nyquist(row, P);  // self-adjoint pullback
    const cplx* dp = delay_phase[j].data();
    for (size_t b = 0; b < nbins; ++b) {
      cplx gb = row[b];
      if (gb == cplx(0.0, 0.0)) continue;
      const auto& bin = table.bins[b];
      cplx t1 = 0.5 * dp[b] * scratch.e1[b];
      cplx t2 = 0.5 * std::conj(dp[b]) * scratch.e2[b];
      double g1 = bin.kmag * (gb.real() * -t1.imag() + gb.imag() * t1.real());
      double g2 = bin.kmag * (gb.real() * t2.imag() + gb.imag() * -t2.real());
      dw_out[bin.a0] += (1 - bin.f1) * g1;
      dw_out[bin.a1] += bin.f1 * g1;
      dw_out[bin.b0] += (1 - bin.f2) * g2;
      dw_out[bin.b1] += bin.f2 * g2;
    }
  }
  return value;
}

}  // namespace detail

struct DataLossResult {
  double value = 0.0;
  std::vector<std::vector<std::vector<cplx>>> grad_h;  // per patch, per delay, per bin
};

/// Loss over all patches, normalized by N * M * P^2 so lambda and the
/// learning rate transfer across grid sizes.
inline DataLossResult data_loss(const std::vector<PatchSpectra>& ys,
                                const std::vector<TransferStack>& hs, double eps,
                                bool implicit_grad = true) {
  if (ys.size() != hs.size()) throw ValidationError("data_loss: patch count mismatch");
  if (ys.empty()) throw ValidationError("data_loss: no patches");
  const size_t N = ys.size();
  const size_t M = ys[0].Y.size();
  const int P = hs[0].patch_pixels;
  double scale = 1.0 / (static_cast<double>(N) * M * P * P);
  DataLossResult out;
  out.grad_h.resize(N);
  for (size_t i = 0; i < N; ++i) {
    auto r = patch_data_loss(ys[i].Y, hs[i], eps, scale, implicit_grad);
    out.value += r.value;
    out.grad_h[i] = std::move(r.grad_h);
  }
  return out;
}

struct JointResult {
  RasterGrid image;
  RasterGrid sos;
  std::vector<LossReport> reports;
  SirenParams params;
};

/// Full self-supervised reconstruction. The DAS stack (and its patch spectra)
/// is built once and stays fixed; each step renders the SOS, rebuilds the
/// wavefronts and transfer stacks for every patch, backpropagates
/// loss -> H -> w -> v -> parameters, and applies one Adam update. The final
/// image is the multichannel deconvolution under the learned SOS.
inline JointResult joint_reconstruct(const SignalSet& signals, const GridSpec& grid,
                                     const CircularMask& mask, const TrainConfig& cfg) {
  cfg.validate();
  signals.validate();
  const double v0 = signals.background_sos;
  if (!(v0 > 0.0)) throw ValidationError("joint_reconstruct: non-positive background SOS");

  PatchLayout layout = make_patch_layout(grid, cfg.patch_mm, cfg.overlap);
  const int P = layout.patch_pixels;
  const int N = layout.n_patches();
  const size_t M = cfg.delays.size();
  const double loss_scale = 1.0 / (static_cast<double>(N) * M * P * P);

  DasStack stack = das_stack(signals, grid, v0, cfg.delays, cfg.workers);

  // Patch spectra are fixed during training; cache them in single precision.
  std::vector<std::vector<std::vector<std::complex<float>>>> ycache(N);
  parallel_for(N, cfg.workers, [&](int i) {
    PatchSpectra ps = extract_patch_spectra_one(stack, layout, i);
    ycache[i].resize(M);
    for (size_t j = 0; j < M; ++j) {
      ycache[i][j].resize(ps.Y[j].size());
      for (size_t b = 0; b < ps.Y[j].size(); ++b)
        ycache[i][j][b] = std::complex<float>(ps.Y[j][b]);
    }
  });

  SirenParams params =
      init_siren(cfg.seed, cfg.hidden, cfg.sine_layers, cfg.omega0, cfg.out_scale, v0);
  AdamState adam;
  std::vector<LossReport> reports;
  reports.reserve(cfg.epochs);

  const int workers = resolve_workers(cfg.workers);
  const int n_chunks = std::min(N, workers * 4);
  const int chunk_len = (N + n_chunks - 1) / n_chunks;

  const PatchBinTable bin_table = PatchBinTable::make(P, grid.pitch, cfg.n_angles);
  const auto delay_phase = detail::make_delay_phases(bin_table, cfg.delays);

  SosField field;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto t_start = std::chrono::steady_clock::now();
    LossReport rep;
    rep.epoch = epoch;
    for (int step = 0; step < cfg.steps_per_epoch; ++step) {
      field = render_sos(params, grid, mask);
      for (double v : field.raster.values)
        if (!std::isfinite(v))
          throw NumericalError("joint_reconstruct: non-finite rendered SOS at epoch " +
                               std::to_string(epoch));

      std::vector<double> patch_loss(N, 0.0);
      std::vector<std::vector<double>> chunk_grad_v(
          n_chunks, std::vector<double>());
      parallel_for(n_chunks, cfg.workers, [&](int c) {
        int lo = c * chunk_len;
        int hi = std::min(N, lo + chunk_len);
        if (lo >= hi) return;
        auto& gv = chunk_grad_v[c];
        gv.assign(field.raster.values.size(), 0.0);
        detail::FusedScratch scratch;
        std::vector<double> dw;
        for (int i = lo; i < hi; ++i) {
          WavefrontProfile prof =
              wavefront_profile(layout.centers[i], signals.geom, field.raster, v0, mask,
                                cfg.n_angles, cfg.ray_step, false);
          patch_loss[i] = detail::fused_patch_loss_grad(
              ycache[i], prof.w, bin_table, delay_phase, cfg.eps_deconv, loss_scale,
              cfg.implicit_xhat_grad, scratch, dw);
          wavefront_grad_trace(layout.centers[i], signals.geom, field.raster, v0, mask,
                               cfg.n_angles, cfg.ray_step, dw, gv);
        }
      });

      double data_term = 0.0;
      for (int i = 0; i < N; ++i) data_term += patch_loss[i];
      if (!std::isfinite(data_term))
        throw NumericalError("joint_reconstruct: non-finite data loss at epoch " +
                             std::to_string(epoch));

      TvLossResult tv = tv_loss(field, cfg.lambda_tv);
      if (!std::isfinite(tv.value))
        throw NumericalError("joint_reconstruct: non-finite TV loss at epoch " +
                             std::to_string(epoch));

      std::vector<double> grad_masked(field.masked_indices.size(), 0.0);
      for (const auto& gv : chunk_grad_v) {
        if (gv.empty()) continue;
        for (size_t i = 0; i < grad_masked.size(); ++i)
          grad_masked[i] += gv[field.masked_indices[i]];
      }
      for (size_t i = 0; i < grad_masked.size(); ++i) grad_masked[i] += tv.grad[i];

      std::vector<double> grads = backprop_sos(params, field, grad_masked);
      for (double g : grads)
        if (!std::isfinite(g))
          throw NumericalError("joint_reconstruct: non-finite parameter gradient at epoch " +
                               std::to_string(epoch));
      adam_step(params.theta, grads, adam, cfg.learning_rate, cfg.beta1, cfg.beta2,
                cfg.adam_eps);

      rep.data_term = data_term;
      rep.tv_term = tv.value;
      rep.total = data_term + tv.value;
    }
    rep.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    reports.push_back(rep);
  }

  field = render_sos(params, grid, mask);
  DeconvolveOptions dopt;
  dopt.eps = cfg.eps_deconv;
  dopt.n_angles = cfg.n_angles;
  dopt.ray_step = cfg.ray_step;
  dopt.merge_fwhm = cfg.merge_fwhm;
  dopt.workers = cfg.workers;
  RasterGrid image =
      deconvolve_image(stack, field.raster, signals.geom, mask, layout, dopt);

  JointResult out;
  out.image = std::move(image);
  out.sos = field.raster;
  out.reports = std::move(reports);
  out.params = std::move(params);
  return out;
}

}  // namespace pact

#endif  // PACT_OPTIMIZE_HPP
