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

#ifndef PACT_EVALUATE_HPP
#define PACT_EVALUATE_HPP

#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "pact/beamform.hpp"
#include "pact/core.hpp"
#include "pact/deconv.hpp"
#include "pact/optimize.hpp"
#include "pact/phantom.hpp"

// Image-quality metrics and the method benchmark harness. PSNR/SSIM follow
// the standard definitions (SSIM: 11x11 Gaussian window, sigma 1.5,
// K1 = 0.01, K2 = 0.03, averaged where the window fits entirely).

namespace pact {

inline double psnr(const RasterGrid& test, const RasterGrid& truth, double data_range) {
  if (!test.spec().same_geometry(truth.spec()))
    throw ValidationError("psnr: image shapes differ");
  if (!(data_range > 0.0)) throw ValidationError("psnr: data_range must be > 0");
  double mse = 0.0;
  for (size_t i = 0; i < test.values.size(); ++i) {
    double d = test.values[i] - truth.values[i];
    mse += d * d;
  }
  mse /= static_cast<double>(test.values.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(data_range * data_range / mse);
}

inline double ssim(const RasterGrid& test, const RasterGrid& truth, double data_range) {
  if (!test.spec().same_geometry(truth.spec()))
    throw ValidationError("ssim: image shapes differ");
  if (!(data_range > 0.0)) throw ValidationError("ssim: data_range must be > 0");
  constexpr int W = 11;
  constexpr double sigma = 1.5;
  if (test.width < W || test.height < W)
    throw ValidationError("ssim: images must be at least 11x11");

  double kern[W];
  double ksum = 0.0;
  for (int i = 0; i < W; ++i) {
    double d = i - (W - 1) / 2.0;
    kern[i] = std::exp(-0.5 * d * d / (sigma * sigma));
    ksum += kern[i];
  }
  for (double& k : kern) k /= ksum;

  const double c1 = (0.01 * data_range) * (0.01 * data_range);
  const double c2 = (0.03 * data_range) * (0.03 * data_range);
  const int hw = W / 2;
  double acc = 0.0;
  long count = 0;
  for (int iy = hw; iy < test.height - hw; ++iy)
    for (int ix = hw; ix < test.width - hw; ++ix) {
      double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
      for (int dy = -hw; dy <= hw; ++dy)
        for (int dx = -hw; dx <= hw; ++dx) {
          double w = kern[dy + hw] * kern[dx + hw];
          double a = test.at(ix + dx, iy + dy);
          double b = truth.at(ix + dx, iy + dy);
          mx += w * a;
          my += w * b;
          mxx += w * a * a;
          myy += w * b * b;
          mxy += w * a * b;
        }
      double vx = mxx - mx * mx;
      double vy = myy - my * my;
      double cxy = mxy - mx * my;
      acc += ((2 * mx * my + c1) * (2 * cxy + c2)) /
             ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  return acc / count;
}

/// RMSE between two SOS rasters over pixels whose centers are in the mask.
inline double sos_rmse_masked(const RasterGrid& test, const RasterGrid& truth,
                              const CircularMask& mask) {
  if (!test.spec().same_geometry(truth.spec()))
    throw ValidationError("sos_rmse: shapes differ");
  double acc = 0.0;
  long n = 0;
  for (int iy = 0; iy < test.height; ++iy)
    for (int ix = 0; ix < test.width; ++ix) {
      if (!mask.contains(test.world(ix, iy))) continue;
      double d = test.at(ix, iy) - truth.at(ix, iy);
      acc += d * d;
      ++n;
    }
  if (n == 0) throw ValidationError("sos_rmse: mask covers no pixels");
  return std::sqrt(acc / n);
}

struct EvalReport {
  std::string method;
  double psnr = 0.0;
  double ssim = 0.0;
  double sos_rmse = 0.0;  // m/s over the mask
  double runtime = 0.0;   // s
};

struct BenchmarkEntry {
  EvalReport report;
  RasterGrid image;
  RasterGrid sos;  // the SOS map the method assumed or recovered
};

struct BenchmarkConfig {
  GridSpec grid;
  double das_v0 = 1510.0;   // conventional-DAS uniform SOS
  double das_delay = 0.0;
  BodyModel body{{0.0, 0.0}, 9.0, 1561.0};
  TrainConfig train;        // drives the stack, deconvolution, and nf paths
  SimulateOptions ref_sim;  // pulse settings for the unaberrated reference
  int workers = 0;
};

/// Normalize by the reference maximum and clip to [0, 1] for metrics.
inline RasterGrid normalize_for_metrics(const RasterGrid& img, double ref_max) {
  RasterGrid out = img;
  for (double& v : out.values) v = std::clamp(v / ref_max, 0.0, 1.0);
  return out;
}

/// The per-method reference is the unaberrated DAS image: the same phantom
/// re-simulated with SOS identically v0, reconstructed at d = 0.
inline RasterGrid unaberrated_reference(const Phantom& truth, const SignalSet& signals,
                                        const GridSpec& grid, const SimulateOptions& sim,
                                        int workers) {
  Phantom uniform = truth;
  uniform.sos = RasterGrid::constant(truth.sos.spec(), truth.background_sos);
  SimulateOptions opt = sim;
  opt.workers = workers;
  SignalSet ref_sig = simulate_signals(uniform, signals.geom, opt);
  return das(ref_sig, grid, truth.background_sos, 0.0, workers);
}

/// Run the requested methods against a ground-truth phantom. Methods run
/// sequentially so wall-clock attribution is clean.
inline std::vector<BenchmarkEntry> benchmark(const SignalSet& signals, const Phantom& truth,
                                             const std::vector<std::string>& methods,
                                             const BenchmarkConfig& cfg) {
  for (const auto& m : methods)
    if (m != "das" && m != "dual_sos" && m != "deconv_true_sos" && m != "nf_apact")
      throw ValidationError("benchmark: unknown method '" + m + "'");
  const double v0 = signals.background_sos;

  RasterGrid ref = unaberrated_reference(truth, signals, cfg.grid, cfg.ref_sim, cfg.workers);
  double ref_max = ref.max_abs();
  if (!(ref_max > 0.0)) throw ValidationError("benchmark: empty reference image");
  RasterGrid ref_norm = normalize_for_metrics(ref, ref_max);

  std::vector<BenchmarkEntry> out;
  for (const auto& m : methods) {
    BenchmarkEntry e;
    e.report.method = m;
    auto t0 = std::chrono::steady_clock::now();
    if (m == "das") {
      e.image = das(signals, cfg.grid, cfg.das_v0, cfg.das_delay, cfg.workers);
      e.sos = RasterGrid::constant(truth.sos.spec(), cfg.das_v0);
    } else if (m == "dual_sos") {
      e.image = dual_sos_das(signals, cfg.grid, v0, cfg.body, cfg.workers);
      e.sos = RasterGrid::constant(truth.sos.spec(), v0);
      GridSpec ss = truth.sos.spec();
      for (int iy = 0; iy < ss.height; ++iy)
        for (int ix = 0; ix < ss.width; ++ix)
          if ((ss.world(ix, iy) - cfg.body.center).norm() <= cfg.body.radius)
            e.sos.at(ix, iy) = cfg.body.body_sos;
    } else if (m == "deconv_true_sos") {
      DasStack stack = das_stack(signals, cfg.grid, v0, cfg.train.delays, cfg.workers);
      PatchLayout layout = make_patch_layout(cfg.grid, cfg.train.patch_mm, cfg.train.overlap);
      DeconvolveOptions dopt;
      dopt.eps = cfg.train.eps_deconv;
      dopt.n_angles = cfg.train.n_angles;
      dopt.ray_step = cfg.train.ray_step;
      dopt.merge_fwhm = cfg.train.merge_fwhm;
      dopt.workers = cfg.workers;
      e.image = deconvolve_image(stack, truth.sos, signals.geom, truth.mask, layout, dopt);
      e.sos = truth.sos;
    } else {  // nf_apact
      TrainConfig tc = cfg.train;
      tc.workers = cfg.workers;
      JointResult jr = joint_reconstruct(signals, cfg.grid, truth.mask, tc);
      e.image = std::move(jr.image);
      e.sos = std::move(jr.sos);
    }
    e.report.runtime =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    RasterGrid test_norm = normalize_for_metrics(e.image, ref_max);
    e.report.psnr = psnr(test_norm, ref_norm, 1.0);
    e.report.ssim = ssim(test_norm, ref_norm, 1.0);
    e.report.sos_rmse = sos_rmse_masked(e.sos, truth.sos, truth.mask);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace pact

#endif  // PACT_EVALUATE_HPP
