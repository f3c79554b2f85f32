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

// pactrec: photoacoustic ring-array reconstruction pipeline.
//
//   pactrec phantom    generate a numerical phantom (pressure + SOS + mask)
//   pactrec simulate   synthesize ring-array signals from a phantom
//   pactrec recon      das | dual-sos | stack | deconv | nf
//   pactrec psf        dump per-patch PSF stacks
//   pactrec eval       benchmark methods against a ground-truth phantom
//
// Option precedence: command-line flag > PACT_* environment variable >
// --config file > built-in default. The fully resolved configuration is
// echoed to <out>/resolved_config.ini for provenance.

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pact/beamform.hpp"
#include "pact/core.hpp"
#include "pact/deconv.hpp"
#include "pact/evaluate.hpp"
#include "pact/io.hpp"
#include "pact/nfield.hpp"
#include "pact/optimize.hpp"
#include "pact/phantom.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;

std::string env_name(const std::string& long_name) {
  std::string s = "PACT_";
  for (char c : long_name) s += (c == '-') ? '_' : static_cast<char>(std::toupper(c));
  return s;
}

template <typename T>
CLI::Option* add_opt(CLI::App* cmd, const std::string& name, T& var,
                     const std::string& desc) {
  auto* o = cmd->add_option("--" + name, var, desc)->capture_default_str();
  o->envname(env_name(name));
  return o;
}

CLI::Option* add_flagopt(CLI::App* cmd, const std::string& name, bool& var,
                         const std::string& desc) {
  auto* o = cmd->add_flag("--" + name + ",!--no-" + name, var, desc)
                ->capture_default_str();
  o->envname(env_name(name));
  return o;
}

struct SceneOpts {
  int grid_size = 256;
  double pitch = 0.1;
  int transducers = 512;
  double ring_radius = 50.0;
  double angle_offset = 0.0;
  double mask_radius = 10.0;
  double mask_x = 0.0;
  double mask_y = 0.0;
  double temperature = 26.0;
  double v0 = 0.0;  // 0 -> derive from temperature

  void add_grid(CLI::App* cmd) {
    add_opt(cmd, "grid-size", grid_size, "image grid size in pixels (square)");
    add_opt(cmd, "pitch", pitch, "pixel pitch in mm");
  }
  void add_ring(CLI::App* cmd) {
    add_opt(cmd, "transducers", transducers, "transducer count on the ring");
    add_opt(cmd, "ring-radius", ring_radius, "ring radius in mm");
    add_opt(cmd, "angle-offset", angle_offset, "ring angular offset in radians");
  }
  void add_mask(CLI::App* cmd) {
    add_opt(cmd, "mask-radius", mask_radius, "sample mask radius in mm");
    add_opt(cmd, "mask-x", mask_x, "mask center x in mm");
    add_opt(cmd, "mask-y", mask_y, "mask center y in mm");
  }
  void add_sos(CLI::App* cmd) {
    add_opt(cmd, "temperature", temperature, "water temperature in deg C");
    add_opt(cmd, "v0", v0, "background SOS in m/s (0 = from temperature)");
  }

  pact::GridSpec grid() const {
    return pact::GridSpec::centered(grid_size, grid_size, pitch);
  }
  pact::RingGeometry ring() const { return {transducers, ring_radius, angle_offset}; }
  pact::CircularMask mask() const { return {{mask_x, mask_y}, mask_radius}; }
  double background_sos() const { return v0 > 0.0 ? v0 : pact::water_sos(temperature); }
};

struct TrainOpts {
  pact::TrainConfig cfg;
  std::string delays = "-0.8:0.8:32";

  void add(CLI::App* cmd, bool with_train = true) {
    add_opt(cmd, "delays", delays, "delay set as min:max:count in mm");
    add_opt(cmd, "eps", cfg.eps_deconv, "deconvolution stabilizer");
    add_opt(cmd, "n-angles", cfg.n_angles, "wavefront angular samples");
    add_opt(cmd, "ray-step", cfg.ray_step, "ray integration step in mm");
    add_opt(cmd, "patch-mm", cfg.patch_mm, "patch side in mm");
    add_opt(cmd, "overlap", cfg.overlap, "patch overlap fraction");
    add_opt(cmd, "merge-fwhm", cfg.merge_fwhm, "Gaussian merge FWHM in mm");
    if (!with_train) return;
    add_opt(cmd, "epochs", cfg.epochs, "training epochs");
    add_opt(cmd, "steps-per-epoch", cfg.steps_per_epoch, "full-batch steps per epoch");
    add_opt(cmd, "lr", cfg.learning_rate, "Adam learning rate");
    add_opt(cmd, "lambda-tv", cfg.lambda_tv, "TV regularization weight");
    add_opt(cmd, "seed", cfg.seed, "network init seed");
    add_opt(cmd, "hidden", cfg.hidden, "hidden width of the SOS network");
    add_opt(cmd, "sine-layers", cfg.sine_layers, "number of sine layers");
    add_opt(cmd, "omega0", cfg.omega0, "first-layer frequency scale");
    add_opt(cmd, "out-scale", cfg.out_scale, "SOS output scale in m/s");
    add_flagopt(cmd, "implicit-grad", cfg.implicit_xhat_grad,
                "propagate gradients through the pseudo-inverse");
  }

  std::vector<double> delay_list() const {
    double lo, hi;
    int count;
    if (std::sscanf(delays.c_str(), "%lf:%lf:%d", &lo, &hi, &count) != 3)
      throw pact::ValidationError("bad --delays, expected min:max:count: " + delays);
    return pact::make_delays(lo, hi, count);
  }
};

void ensure_out_dir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw pact::ValidationError("cannot create output directory " + out);
}

void echo_config(CLI::App& app, const std::string& out) {
  std::string resolved = app.config_to_str(true, true);
  std::ofstream os(fs::path(out) / "resolved_config.ini");
  os << resolved;
  std::cout << "resolved configuration written to " << out << "/resolved_config.ini\n";
}

pact::RasterGrid mask_raster(const pact::GridSpec& grid, const pact::CircularMask& mask) {
  pact::RasterGrid r = pact::RasterGrid::zeros(grid);
  for (int iy = 0; iy < grid.height; ++iy)
    for (int ix = 0; ix < grid.width; ++ix)
      r.at(ix, iy) = mask.contains(grid.world(ix, iy)) ? 1.0 : 0.0;
  return r;
}

pact::Vec2 json_vec2(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 2)
    throw pact::ValidationError("phantom spec: " + what + " must be [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& what) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : allowed)
      if (it.key() == k) ok = true;
    if (!ok)
      throw pact::ValidationError("phantom spec: unknown key '" + it.key() + "' in " + what);
  }
}

pact::PhantomSpec load_phantom_spec(const std::string& name_or_path, double default_bg,
                                    const pact::CircularMask& default_mask) {
  if (name_or_path == "default" || name_or_path == "liver" || name_or_path == "twobody" ||
      name_or_path == "empty") {
    pact::PhantomSpec s = pact::builtin_phantom_spec(name_or_path, default_bg);
    s.mask = default_mask;
    return s;
  }
  std::ifstream is(name_or_path);
  if (!is) throw pact::ValidationError("cannot open phantom spec: " + name_or_path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw pact::ValidationError("bad JSON in " + name_or_path + ": " + e.what());
  }
  check_keys(j, {"background_sos", "mask", "discs", "vessels", "rings", "points",
                 "jitter_mm", "antialias"},
             "top level");
  pact::PhantomSpec s;
  s.background_sos = j.value("background_sos", default_bg);
  s.mask = default_mask;
  if (j.contains("mask")) {
    check_keys(j["mask"], {"center", "radius"}, "mask");
    s.mask.center = json_vec2(j["mask"]["center"], "mask.center");
    s.mask.radius = j["mask"]["radius"].get<double>();
  }
  s.jitter_mm = j.value("jitter_mm", 0.0);
  s.antialias = j.value("antialias", true);
  for (const auto& d : j.value("discs", json::array())) {
    check_keys(d, {"center", "radius", "sos", "pressure"}, "disc");
    s.discs.push_back({json_vec2(d.at("center"), "disc.center"), d.at("radius").get<double>(),
                       d.value("sos", s.background_sos), d.value("pressure", 0.0)});
  }
  for (const auto& v : j.value("vessels", json::array())) {
    check_keys(v, {"a", "b", "radius", "pressure"}, "vessel");
    s.vessels.push_back({json_vec2(v.at("a"), "vessel.a"), json_vec2(v.at("b"), "vessel.b"),
                         v.at("radius").get<double>(), v.value("pressure", 1.0)});
  }
  for (const auto& r : j.value("rings", json::array())) {
    check_keys(r, {"center", "radius", "width", "pressure"}, "ring");
    s.rings.push_back({json_vec2(r.at("center"), "ring.center"), r.at("radius").get<double>(),
                       r.at("width").get<double>(), r.value("pressure", 1.0)});
  }
  for (const auto& p : j.value("points", json::array())) {
    check_keys(p, {"pos", "amplitude"}, "point");
    s.points.push_back({json_vec2(p.at("pos"), "point.pos"), p.value("amplitude", 1.0)});
  }
  return s;
}

pact::Phantom load_phantom_files(const std::string& pressure_path,
                                 const std::string& sos_path,
                                 const pact::CircularMask& mask, double bg) {
  pact::Phantom ph;
  ph.pressure = pact::io::read_pgrid(pressure_path);
  ph.sos = pact::io::read_pgrid(sos_path);
  if (!ph.pressure.spec().same_geometry(ph.sos.spec()))
    throw pact::ValidationError("pressure and SOS rasters have different grids");
  ph.mask = mask;
  ph.background_sos = bg;
  return ph;
}

void write_loss_log(const std::string& path, const std::vector<pact::LossReport>& reports) {
  std::ofstream os(path);
  for (const auto& r : reports) {
    json j{{"epoch", r.epoch},
           {"data_term", r.data_term},
           {"tv_term", r.tv_term},
           {"total", r.total},
           {"seconds", r.wall_time}};
    os << j.dump() << "\n";
  }
}

void print_report_table(std::ostream& os, const std::vector<pact::BenchmarkEntry>& entries) {
  char line[160];
  std::snprintf(line, sizeof line, "%-16s %10s %8s %14s %10s", "method", "psnr_db", "ssim",
                "sos_rmse_mps", "runtime_s");
  os << line << "\n";
  for (const auto& e : entries) {
    std::snprintf(line, sizeof line, "%-16s %10.3f %8.4f %14.3f %10.2f",
                  e.report.method.c_str(), e.report.psnr, e.report.ssim, e.report.sos_rmse,
                  e.report.runtime);
    os << line << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pactrec: photoacoustic ring-array reconstruction"};
  app.set_config("--config", "", "flat key=value configuration file");
  app.allow_config_extras(false);
  app.require_subcommand(1);

  int workers = 0;
  app.add_option("--workers", workers, "worker threads (0 = hardware)")
      ->capture_default_str()
      ->envname("PACT_WORKERS");

  // ---- phantom ----
  auto* cmd_phantom = app.add_subcommand("phantom", "generate a numerical phantom");
  SceneOpts ph_scene;
  std::string ph_spec = "default";
  uint64_t ph_seed = 0;
  std::string ph_out = "out";
  ph_scene.add_grid(cmd_phantom);
  ph_scene.add_mask(cmd_phantom);
  ph_scene.add_sos(cmd_phantom);
  add_opt(cmd_phantom, "spec", ph_spec, "builtin name (default|twobody|empty) or JSON file");
  add_opt(cmd_phantom, "seed", ph_seed, "phantom generation seed");
  add_opt(cmd_phantom, "out", ph_out, "output directory");

  // ---- simulate ----
  auto* cmd_simulate = app.add_subcommand("simulate", "synthesize ring-array PA signals");
  SceneOpts sim_scene;
  std::string sim_pressure = "out/pressure.pgrid";
  std::string sim_sos = "out/sos.pgrid";
  std::string sim_out = "out";
  double sim_pulse_sigma = 100e-9;
  double sim_dt = 25e-9;
  bool sim_spreading = true;
  double sim_ray_step = 0.05;
  sim_scene.add_ring(cmd_simulate);
  sim_scene.add_mask(cmd_simulate);
  sim_scene.add_sos(cmd_simulate);
  add_opt(cmd_simulate, "pressure", sim_pressure, "input pressure PGRID");
  add_opt(cmd_simulate, "sos", sim_sos, "input SOS PGRID");
  add_opt(cmd_simulate, "pulse-sigma", sim_pulse_sigma, "Gaussian pulse sigma in seconds");
  add_opt(cmd_simulate, "dt", sim_dt, "sampling interval in seconds");
  add_flagopt(cmd_simulate, "spreading", sim_spreading, "1/sqrt(r) geometric spreading");
  add_opt(cmd_simulate, "ray-step", sim_ray_step, "TOF ray step in mm");
  add_opt(cmd_simulate, "out", sim_out, "output directory");

  // ---- recon ----
  auto* cmd_recon = app.add_subcommand("recon", "reconstruct an image from signals");
  cmd_recon->require_subcommand(1);

  auto add_recon_common = [&](CLI::App* c, std::string& signals, std::string& out) {
    add_opt(c, "signals", signals, "input SIGSET file");
    add_opt(c, "out", out, "output directory");
  };

  auto* cmd_das = cmd_recon->add_subcommand("das", "delay-and-sum at a single delay");
  SceneOpts das_scene;
  std::string das_signals = "out/signals.sigset", das_out = "out";
  double das_v0 = 0.0, das_delay = 0.0;
  das_scene.add_grid(cmd_das);
  add_recon_common(cmd_das, das_signals, das_out);
  add_opt(cmd_das, "v0", das_v0, "assumed uniform SOS in m/s (0 = signal background)");
  add_opt(cmd_das, "delay", das_delay, "extra delay d in mm");

  auto* cmd_dual = cmd_recon->add_subcommand("dual-sos", "dual-SOS DAS with a body disc");
  SceneOpts dual_scene;
  std::string dual_signals = "out/signals.sigset", dual_out = "out";
  double dual_v0 = 0.0;
  double body_x = 0.0, body_y = 0.0, body_radius = 9.0, body_sos = 1561.0;
  dual_scene.add_grid(cmd_dual);
  add_recon_common(cmd_dual, dual_signals, dual_out);
  add_opt(cmd_dual, "v0", dual_v0, "background SOS in m/s (0 = signal background)");
  add_opt(cmd_dual, "body-x", body_x, "body disc center x in mm");
  add_opt(cmd_dual, "body-y", body_y, "body disc center y in mm");
  add_opt(cmd_dual, "body-radius", body_radius, "body disc radius in mm");
  add_opt(cmd_dual, "body-sos", body_sos, "body SOS in m/s");

  auto* cmd_stack = cmd_recon->add_subcommand("stack", "multi-delay DAS stack");
  SceneOpts stack_scene;
  std::string stack_signals = "out/signals.sigset", stack_out = "out";
  double stack_v0 = 0.0;
  TrainOpts stack_opts;
  stack_scene.add_grid(cmd_stack);
  add_recon_common(cmd_stack, stack_signals, stack_out);
  add_opt(cmd_stack, "v0", stack_v0, "assumed uniform SOS (0 = signal background)");
  add_opt(cmd_stack, "delays", stack_opts.delays, "delay set as min:max:count in mm");

  auto* cmd_deconv = cmd_recon->add_subcommand(
      "deconv", "multichannel deconvolution with a known SOS map");
  SceneOpts deconv_scene;
  std::string deconv_signals = "out/signals.sigset", deconv_out = "out";
  std::string deconv_sos = "out/sos.pgrid";
  TrainOpts deconv_opts;
  deconv_scene.add_grid(cmd_deconv);
  deconv_scene.add_mask(cmd_deconv);
  add_recon_common(cmd_deconv, deconv_signals, deconv_out);
  add_opt(cmd_deconv, "sos", deconv_sos, "SOS map PGRID used by the forward model");
  deconv_opts.add(cmd_deconv, false);

  auto* cmd_nf = cmd_recon->add_subcommand(
      "nf", "joint reconstruction with a neural SOS field");
  SceneOpts nf_scene;
  std::string nf_signals = "out/signals.sigset", nf_out = "out";
  TrainOpts nf_opts;
  nf_scene.add_grid(cmd_nf);
  nf_scene.add_mask(cmd_nf);
  add_recon_common(cmd_nf, nf_signals, nf_out);
  nf_opts.add(cmd_nf);

  // ---- psf ----
  auto* cmd_psf = app.add_subcommand("psf", "point-spread-function utilities");
  cmd_psf->require_subcommand(1);
  auto* cmd_psf_dump =
      cmd_psf->add_subcommand("dump", "dump per-patch PSF stacks as PGRIDs");
  SceneOpts psf_scene;
  std::string psf_sos = "out/sos.pgrid", psf_out = "out/psf";
  TrainOpts psf_opts;
  std::vector<int> psf_indices;
  psf_scene.add_ring(cmd_psf_dump);
  psf_scene.add_mask(cmd_psf_dump);
  psf_scene.add_sos(cmd_psf_dump);
  add_opt(cmd_psf_dump, "sos", psf_sos, "SOS map PGRID");
  psf_opts.add(cmd_psf_dump, false);
  cmd_psf_dump->add_option("--index", psf_indices, "patch indices to dump (default: all)")
      ->envname("PACT_INDEX");
  add_opt(cmd_psf_dump, "out", psf_out, "output directory");

  // ---- eval ----
  auto* cmd_eval = app.add_subcommand("eval", "benchmark methods against ground truth");
  SceneOpts eval_scene;
  std::string eval_signals = "out/signals.sigset", eval_out = "out";
  std::string eval_pressure = "out/pressure.pgrid", eval_sos = "out/sos.pgrid";
  std::string eval_methods = "das,dual_sos,deconv_true_sos,nf_apact";
  double eval_das_v0 = 1510.0;
  double eval_body_x = 0.0, eval_body_y = 0.0, eval_body_radius = 9.0,
         eval_body_sos = 1561.0;
  double eval_pulse_sigma = 100e-9, eval_dt = 25e-9;
  bool eval_spreading = true, eval_save_images = false;
  TrainOpts eval_opts;
  eval_scene.add_grid(cmd_eval);
  eval_scene.add_mask(cmd_eval);
  eval_scene.add_sos(cmd_eval);
  add_opt(cmd_eval, "signals", eval_signals, "input SIGSET file");
  add_opt(cmd_eval, "pressure", eval_pressure, "ground-truth pressure PGRID");
  add_opt(cmd_eval, "sos", eval_sos, "ground-truth SOS PGRID");
  add_opt(cmd_eval, "methods", eval_methods, "comma-separated method list");
  add_opt(cmd_eval, "das-v0", eval_das_v0, "uniform SOS for the conventional-DAS baseline");
  add_opt(cmd_eval, "body-x", eval_body_x, "dual-SOS body center x in mm");
  add_opt(cmd_eval, "body-y", eval_body_y, "dual-SOS body center y in mm");
  add_opt(cmd_eval, "body-radius", eval_body_radius, "dual-SOS body radius in mm");
  add_opt(cmd_eval, "body-sos", eval_body_sos, "dual-SOS body SOS in m/s");
  add_opt(cmd_eval, "pulse-sigma", eval_pulse_sigma, "reference pulse sigma in seconds");
  add_opt(cmd_eval, "dt", eval_dt, "reference sampling interval in seconds");
  add_flagopt(cmd_eval, "spreading", eval_spreading, "reference geometric spreading");
  add_flagopt(cmd_eval, "save-images", eval_save_images, "write per-method PGRID outputs");
  add_opt(cmd_eval, "out", eval_out, "output directory");
  eval_opts.add(cmd_eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitValidation;
  }

  try {
    if (*cmd_phantom) {
      ensure_out_dir(ph_out);
      echo_config(app, ph_out);
      pact::PhantomSpec spec =
          load_phantom_spec(ph_spec, ph_scene.background_sos(), ph_scene.mask());
      pact::Phantom ph = pact::generate_phantom(ph_scene.grid(), spec, ph_seed);
      pact::io::write_pgrid((fs::path(ph_out) / "pressure.pgrid").string(), ph.pressure);
      pact::io::write_pgrid((fs::path(ph_out) / "sos.pgrid").string(), ph.sos);
      pact::io::write_pgrid((fs::path(ph_out) / "mask.pgrid").string(),
                            mask_raster(ph_scene.grid(), ph.mask));
      std::cout << "wrote pressure.pgrid, sos.pgrid, mask.pgrid to " << ph_out << "\n";
    } else if (*cmd_simulate) {
      ensure_out_dir(sim_out);
      echo_config(app, sim_out);
      pact::Phantom ph = load_phantom_files(sim_pressure, sim_sos, sim_scene.mask(),
                                            sim_scene.background_sos());
      pact::SimulateOptions opt;
      opt.pulse_sigma = sim_pulse_sigma;
      opt.dt = sim_dt;
      opt.spreading = sim_spreading;
      opt.ray_step = sim_ray_step;
      opt.workers = workers;
      pact::SignalSet sig = pact::simulate_signals(ph, sim_scene.ring(), opt);
      pact::io::write_sigset((fs::path(sim_out) / "signals.sigset").string(), sig);
      std::cout << "wrote signals.sigset (" << sig.geom.n_transducers << " x "
                << sig.n_samples << " samples) to " << sim_out << "\n";
    } else if (*cmd_das) {
      ensure_out_dir(das_out);
      echo_config(app, das_out);
      pact::SignalSet sig = pact::io::read_sigset(das_signals);
      double v0 = das_v0 > 0.0 ? das_v0 : sig.background_sos;
      pact::RasterGrid img = pact::das(sig, das_scene.grid(), v0, das_delay, workers);
      pact::io::write_pgrid((fs::path(das_out) / "image.pgrid").string(), img);
      std::cout << "wrote image.pgrid to " << das_out << "\n";
    } else if (*cmd_dual) {
      ensure_out_dir(dual_out);
      echo_config(app, dual_out);
      pact::SignalSet sig = pact::io::read_sigset(dual_signals);
      double v0 = dual_v0 > 0.0 ? dual_v0 : sig.background_sos;
      pact::BodyModel body{{body_x, body_y}, body_radius, body_sos};
      pact::RasterGrid img = pact::dual_sos_das(sig, dual_scene.grid(), v0, body, workers);
      pact::io::write_pgrid((fs::path(dual_out) / "image.pgrid").string(), img);
      std::cout << "wrote image.pgrid to " << dual_out << "\n";
    } else if (*cmd_stack) {
      ensure_out_dir(stack_out);
      echo_config(app, stack_out);
      pact::SignalSet sig = pact::io::read_sigset(stack_signals);
      double v0 = stack_v0 > 0.0 ? stack_v0 : sig.background_sos;
      pact::DasStack stack =
          pact::das_stack(sig, stack_scene.grid(), v0, stack_opts.delay_list(), workers);
      for (int j = 0; j < stack.n_delays(); ++j) {
        char name[64];
        std::snprintf(name, sizeof name, "stack_%03d.pgrid", j);
        pact::io::write_pgrid((fs::path(stack_out) / name).string(), stack.images[j]);
      }
      std::cout << "wrote " << stack.n_delays() << " stack PGRIDs to " << stack_out << "\n";
    } else if (*cmd_deconv) {
      ensure_out_dir(deconv_out);
      echo_config(app, deconv_out);
      pact::SignalSet sig = pact::io::read_sigset(deconv_signals);
      pact::RasterGrid sos = pact::io::read_pgrid(deconv_sos);
      pact::GridSpec grid = deconv_scene.grid();
      if (!sos.spec().same_geometry(grid))
        throw pact::ValidationError("SOS raster grid does not match --grid-size/--pitch");
      pact::DasStack stack = pact::das_stack(sig, grid, sig.background_sos,
                                             deconv_opts.delay_list(), workers);
      pact::PatchLayout layout =
          pact::make_patch_layout(grid, deconv_opts.cfg.patch_mm, deconv_opts.cfg.overlap);
      pact::DeconvolveOptions dopt;
      dopt.eps = deconv_opts.cfg.eps_deconv;
      dopt.n_angles = deconv_opts.cfg.n_angles;
      dopt.ray_step = deconv_opts.cfg.ray_step;
      dopt.merge_fwhm = deconv_opts.cfg.merge_fwhm;
      dopt.workers = workers;
      pact::RasterGrid img = pact::deconvolve_image(stack, sos, sig.geom,
                                                    deconv_scene.mask(), layout, dopt);
      pact::io::write_pgrid((fs::path(deconv_out) / "image.pgrid").string(), img);
      std::cout << "wrote image.pgrid to " << deconv_out << "\n";
    } else if (*cmd_nf) {
      ensure_out_dir(nf_out);
      echo_config(app, nf_out);
      pact::SignalSet sig = pact::io::read_sigset(nf_signals);
      pact::TrainConfig cfg = nf_opts.cfg;
      cfg.delays = nf_opts.delay_list();
      cfg.workers = workers;
      pact::JointResult jr =
          pact::joint_reconstruct(sig, nf_scene.grid(), nf_scene.mask(), cfg);
      pact::io::write_pgrid((fs::path(nf_out) / "image.pgrid").string(), jr.image);
      pact::io::write_pgrid((fs::path(nf_out) / "sos.pgrid").string(), jr.sos);
      pact::write_sirn((fs::path(nf_out) / "checkpoint.sirn").string(), jr.params);
      write_loss_log((fs::path(nf_out) / "loss_log.jsonl").string(), jr.reports);
      for (const auto& r : jr.reports)
        std::cout << "epoch " << r.epoch << ": data " << r.data_term << "  tv " << r.tv_term
                  << "  total " << r.total << "  (" << r.wall_time << " s)\n";
      std::cout << "wrote image.pgrid, sos.pgrid, checkpoint.sirn, loss_log.jsonl to "
                << nf_out << "\n";
    } else if (*cmd_psf_dump) {
      ensure_out_dir(psf_out);
      echo_config(app, psf_out);
      pact::RasterGrid sos = pact::io::read_pgrid(psf_sos);
      pact::GridSpec grid = sos.spec();
      pact::PatchLayout layout =
          pact::make_patch_layout(grid, psf_opts.cfg.patch_mm, psf_opts.cfg.overlap);
      std::vector<double> delays = psf_opts.delay_list();
      std::vector<int> indices = psf_indices;
      if (indices.empty())
        for (int i = 0; i < layout.n_patches(); ++i) indices.push_back(i);
      double v0 = psf_scene.background_sos();
      for (int i : indices) {
        if (i < 0 || i >= layout.n_patches())
          throw pact::ValidationError("patch index out of range: " + std::to_string(i));
        pact::WavefrontProfile prof = pact::wavefront_profile(
            layout.centers[i], psf_scene.ring(), sos, v0, psf_scene.mask(),
            psf_opts.cfg.n_angles, psf_opts.cfg.ray_step, false);
        pact::TransferStack ts =
            pact::transfer_stack(prof, delays, layout.patch_pixels, grid.pitch);
        for (size_t j = 0; j < delays.size(); ++j) {
          pact::RasterGrid psf =
              pact::psf_from_transfer(ts.spectra[j], layout.patch_pixels, grid.pitch);
          char name[64];
          std::snprintf(name, sizeof name, "psf_p%04d_d%03zu.pgrid", i, j);
          pact::io::write_pgrid((fs::path(psf_out) / name).string(), psf);
        }
      }
      std::cout << "wrote " << indices.size() * delays.size() << " PSF PGRIDs to "
                << psf_out << "\n";
    } else if (*cmd_eval) {
      ensure_out_dir(eval_out);
      echo_config(app, eval_out);
      pact::SignalSet sig = pact::io::read_sigset(eval_signals);
      pact::Phantom truth = load_phantom_files(eval_pressure, eval_sos, eval_scene.mask(),
                                               eval_scene.background_sos());
      std::vector<std::string> methods;
      for (size_t pos = 0; pos < eval_methods.size();) {
        size_t comma = eval_methods.find(',', pos);
        if (comma == std::string::npos) comma = eval_methods.size();
        if (comma > pos) methods.push_back(eval_methods.substr(pos, comma - pos));
        pos = comma + 1;
      }
      pact::BenchmarkConfig cfg;
      cfg.grid = eval_scene.grid();
      cfg.das_v0 = eval_das_v0;
      cfg.body = {{eval_body_x, eval_body_y}, eval_body_radius, eval_body_sos};
      cfg.train = eval_opts.cfg;
      cfg.train.delays = eval_opts.delay_list();
      cfg.ref_sim.pulse_sigma = eval_pulse_sigma;
      cfg.ref_sim.dt = eval_dt;
      cfg.ref_sim.spreading = eval_spreading;
      cfg.workers = workers;
      auto entries = pact::benchmark(sig, truth, methods, cfg);
      print_report_table(std::cout, entries);
      std::ofstream rep(fs::path(eval_out) / "report.txt");
      print_report_table(rep, entries);
      if (eval_save_images)
        for (const auto& e : entries) {
          pact::io::write_pgrid(
              (fs::path(eval_out) / (e.report.method + "_image.pgrid")).string(), e.image);
          pact::io::write_pgrid(
              (fs::path(eval_out) / (e.report.method + "_sos.pgrid")).string(), e.sos);
        }
      std::cout << "wrote report.txt to " << eval_out << "\n";
    }
  } catch (const pact::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const pact::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return 0;
}
