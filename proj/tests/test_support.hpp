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

#ifndef PACT_TESTS_TEST_SUPPORT_HPP
#define PACT_TESTS_TEST_SUPPORT_HPP

#include <vector>

#include "pact/beamform.hpp"
#include "pact/core.hpp"
#include "pact/deconv.hpp"
#include "pact/evaluate.hpp"
#include "pact/nfield.hpp"
#include "pact/optimize.hpp"
#include "pact/phantom.hpp"

// Shared fixtures for the optimizer unit tests and the acceptance suite:
// a small end-to-end instance (64x64 grid, 4 patches, M = 4) and an
// explicit loss(theta) evaluation that re-runs the whole forward pipeline,
// used to finite-difference the full gradient chain.

namespace pact::testsupport {

struct SmallInstance {
  GridSpec grid = GridSpec::centered(64, 64, 0.1);
  CircularMask mask{{0.0, 0.0}, 2.6};
  RingGeometry ring{64, 50.0, 0.0};
  TrainConfig cfg;
  SignalSet signals;
  DasStack stack;
  PatchLayout layout;
  std::vector<PatchSpectra> spectra;
};

inline SmallInstance make_small_instance() {
  SmallInstance si;
  si.cfg.delays = make_delays(-0.4, 0.4, 4);
  si.cfg.n_angles = 32;
  si.cfg.ray_step = 0.1;
  si.cfg.patch_mm = 3.2;   // 32 px -> 2x2 patches at overlap 0
  si.cfg.overlap = 0.0;
  si.cfg.hidden = 8;
  si.cfg.sine_layers = 2;
  si.cfg.out_scale = 60.0;
  si.cfg.lambda_tv = 1e-4;
  si.cfg.workers = 1;

  PhantomSpec spec = builtin_phantom_spec("empty", 1500.0);
  spec.mask = si.mask;
  spec.discs.push_back({{0.4, -0.3}, 1.2, 1560.0, 0.0});
  spec.points.push_back({{0.0, 0.0}, 1.0});
  spec.points.push_back({{1.0, 0.8}, 0.8});
  spec.points.push_back({{-1.2, 0.4}, 0.9});
  Phantom ph = generate_phantom(si.grid, spec, 0);
  si.signals = simulate_signals(ph, si.ring);

  si.stack = das_stack(si.signals, si.grid, 1500.0, si.cfg.delays, 1);
  si.layout = make_patch_layout(si.grid, si.cfg.patch_mm, si.cfg.overlap);
  si.spectra = extract_patch_spectra(si.stack, si.layout, 1);
  return si;
}

/// Total loss (data + TV) for the given parameters, re-running the full
/// forward pipeline. Independent of the fused training-loop implementation.
inline double full_chain_loss(const SmallInstance& si, const SirenParams& params) {
  SosField field = render_sos(params, si.grid, si.mask);
  std::vector<TransferStack> hs;
  hs.reserve(si.layout.n_patches());
  for (int i = 0; i < si.layout.n_patches(); ++i) {
    WavefrontProfile prof =
        wavefront_profile(si.layout.centers[i], si.ring, field.raster, si.stack.v0, si.mask,
                          si.cfg.n_angles, si.cfg.ray_step, false);
    hs.push_back(transfer_stack(prof, si.cfg.delays, si.layout.patch_pixels, si.grid.pitch));
  }
  DataLossResult dl = data_loss(si.spectra, hs, si.cfg.eps_deconv, si.cfg.implicit_xhat_grad);
  TvLossResult tv = tv_loss(field, si.cfg.lambda_tv);
  return dl.value + tv.value;
}

/// Analytic d(total loss)/d(theta) through loss -> H -> w -> v -> theta.
inline std::vector<double> full_chain_grad(const SmallInstance& si,
                                           const SirenParams& params) {
  SosField field = render_sos(params, si.grid, si.mask);
  std::vector<double> grad_v_flat(field.raster.values.size(), 0.0);
  const int P = si.layout.patch_pixels;
  const double scale =
      1.0 / (static_cast<double>(si.layout.n_patches()) * si.cfg.delays.size() * P * P);
  for (int i = 0; i < si.layout.n_patches(); ++i) {
    WavefrontProfile prof =
        wavefront_profile(si.layout.centers[i], si.ring, field.raster, si.stack.v0, si.mask,
                          si.cfg.n_angles, si.cfg.ray_step, true);
    TransferStack hs = transfer_stack(prof, si.cfg.delays, P, si.grid.pitch);
    PatchLossResult pl = patch_data_loss(si.spectra[i].Y, hs, si.cfg.eps_deconv, scale,
                                         si.cfg.implicit_xhat_grad);
    std::vector<double> dw =
        transfer_grad_to_wavefront(prof, si.cfg.delays, P, si.grid.pitch, pl.grad_h);
    accumulate_wavefront_grad(prof, dw, grad_v_flat);
  }
  TvLossResult tv = tv_loss(field, si.cfg.lambda_tv);
  std::vector<double> grad_masked(field.masked_indices.size());
  for (size_t i = 0; i < grad_masked.size(); ++i)
    grad_masked[i] = grad_v_flat[field.masked_indices[i]] + tv.grad[i];
  return backprop_sos(params, field, grad_masked);
}

}  // namespace pact::testsupport

#endif  // PACT_TESTS_TEST_SUPPORT_HPP
