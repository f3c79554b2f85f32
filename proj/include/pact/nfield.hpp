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

#ifndef PACT_NFIELD_HPP
#define PACT_NFIELD_HPP

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "pact/core.hpp"
#include "pact/io.hpp"

// Sinusoidal coordinate network (SIREN-style) mapping masked spatial
// coordinates to SOS, with exact forward and reverse-mode evaluation.
// Architecture: in_dim -> hidden (sine) x n_hidden_layers -> 1 (linear),
// every sine layer computing sin(omega0 * (W z + b)).

namespace pact {

struct SirenParams {
  int in_dim = 2;
  int hidden = 64;
  int n_hidden_layers = 2;
  double omega0 = 30.0;
  double out_scale = 100.0;  // m/s per unit network output
  double v0 = 1500.0;        // background SOS, m/s
  std::vector<double> theta; // flat parameters, layer order: W row-major, then bias

  int n_layers() const { return n_hidden_layers + 1; }

  /// (rows, cols) of layer l's weight matrix; bias length = rows.
  std::pair<int, int> layer_shape(int l) const {
    int rows = (l == n_hidden_layers) ? 1 : hidden;
    int cols = (l == 0) ? in_dim : hidden;
    return {rows, cols};
  }

  size_t layer_offset(int l) const {
    size_t off = 0;
    for (int k = 0; k < l; ++k) {
      auto [r, c] = layer_shape(k);
      off += static_cast<size_t>(r) * c + r;
    }
    return off;
  }

  size_t param_count() const { return layer_offset(n_layers()); }

  const double* weights(int l) const { return theta.data() + layer_offset(l); }
  const double* bias(int l) const {
    auto [r, c] = layer_shape(l);
    return theta.data() + layer_offset(l) + static_cast<size_t>(r) * c;
  }
};

inline size_t siren_param_count(int in_dim, int hidden, int n_hidden_layers) {
  size_t n = static_cast<size_t>(hidden) * in_dim + hidden;  // first sine layer
  for (int l = 1; l < n_hidden_layers; ++l) n += static_cast<size_t>(hidden) * hidden + hidden;
  n += hidden + 1;  // linear output
  return n;
}

/// SIREN initialization: first layer uniform in [-1/in_dim, 1/in_dim],
/// subsequent layers uniform in [-sqrt(6/fan_in)/omega0, +sqrt(6/fan_in)/omega0].
/// Biases draw from the same range as their layer's weights.
inline SirenParams init_siren(uint64_t seed, int hidden = 64, int n_hidden_layers = 2,
                              double omega0 = 30.0, double out_scale = 100.0,
                              double v0 = 1500.0) {
  if (hidden < 1) throw ValidationError("init_siren: hidden must be >= 1");
  if (n_hidden_layers < 1) throw ValidationError("init_siren: need at least one sine layer");
  if (!(omega0 > 0.0)) throw ValidationError("init_siren: omega0 must be > 0");
  SirenParams p;
  p.hidden = hidden;
  p.n_hidden_layers = n_hidden_layers;
  p.omega0 = omega0;
  p.out_scale = out_scale;
  p.v0 = v0;
  p.theta.resize(p.param_count());
  std::mt19937_64 rng(seed);
  size_t off = 0;
  for (int l = 0; l < p.n_layers(); ++l) {
    auto [rows, cols] = p.layer_shape(l);
    double bound = (l == 0) ? 1.0 / p.in_dim : std::sqrt(6.0 / cols) / omega0;
    std::uniform_real_distribution<double> u(-bound, bound);
    size_t n = static_cast<size_t>(rows) * cols + rows;
    for (size_t i = 0; i < n; ++i) p.theta[off + i] = u(rng);
    off += n;
  }
  return p;
}

/// Network output (before the v0 + out_scale * (.) map) at one coordinate.
inline double siren_eval_raw(const SirenParams& p, Vec2 c) {
  std::vector<double> z{c.x, c.y}, a;
  for (int l = 0; l < p.n_hidden_layers; ++l) {
    auto [rows, cols] = p.layer_shape(l);
    const double* W = p.weights(l);
    const double* b = p.bias(l);
    a.assign(rows, 0.0);
    for (int r = 0; r < rows; ++r) {
      double acc = b[r];
      for (int cidx = 0; cidx < cols; ++cidx) acc += W[static_cast<size_t>(r) * cols + cidx] * z[cidx];
      a[r] = std::sin(p.omega0 * acc);
    }
    z = a;
  }
  const double* W = p.weights(p.n_hidden_layers);
  const double* b = p.bias(p.n_hidden_layers);
  double out = b[0];
  for (int cidx = 0; cidx < p.hidden; ++cidx) out += W[cidx] * z[cidx];
  return out;
}

inline double siren_eval_sos(const SirenParams& p, Vec2 c) {
  return p.v0 + p.out_scale * siren_eval_raw(p, c);
}

/// SOS field rendered on a grid: v0 + out_scale * MLP(c) at masked pixels,
/// exactly v0 outside the mask. Coordinates are normalized to the mask
/// bounding square, c = (x - cx, y - cy) / radius.
struct SosField {
  RasterGrid raster;
  CircularMask mask;
  std::vector<int> masked_indices;  // flat row-major indices into raster
  std::vector<Vec2> coords;         // normalized coordinate per masked pixel
};

inline SosField render_sos(const SirenParams& params, const GridSpec& grid,
                           const CircularMask& mask) {
  grid.validate();
  if (!(mask.radius > 0.0)) throw ValidationError("render_sos: mask radius must be > 0");
  SosField f;
  f.mask = mask;
  f.raster = RasterGrid::constant(grid, params.v0);
  for (int iy = 0; iy < grid.height; ++iy)
    for (int ix = 0; ix < grid.width; ++ix) {
      Vec2 p = grid.world(ix, iy);
      if (!mask.contains(p)) continue;
      Vec2 c{(p.x - mask.center.x) / mask.radius, (p.y - mask.center.y) / mask.radius};
      f.masked_indices.push_back(iy * grid.width + ix);
      f.coords.push_back(c);
      f.raster.values[static_cast<size_t>(iy) * grid.width + ix] = siren_eval_sos(params, c);
    }
  return f;
}

/// Exact reverse-mode gradient of sum_p grad_v[p] * v(p) w.r.t. every
/// parameter; grad_v is given per masked pixel in field order.
inline std::vector<double> backprop_sos(const SirenParams& p, const SosField& field,
                                        const std::vector<double>& grad_v) {
  if (grad_v.size() != field.coords.size())
    throw ValidationError("backprop_sos: grad_v size does not match masked pixel count");
  std::vector<double> grad(p.param_count(), 0.0);
  const int L = p.n_hidden_layers;
  const int H = p.hidden;

  // per-pixel activations a_l (pre-sine) and z_l (post-sine)
  std::vector<std::vector<double>> a(L), z(L);
  for (int l = 0; l < L; ++l) {
    a[l].resize(H);
    z[l].resize(H);
  }
  std::vector<double> delta(H), delta_prev(H);

  for (size_t pix = 0; pix < field.coords.size(); ++pix) {
    double g = grad_v[pix] * p.out_scale;
    if (g == 0.0) continue;
    const double in[2] = {field.coords[pix].x, field.coords[pix].y};

    for (int l = 0; l < L; ++l) {
      auto [rows, cols] = p.layer_shape(l);
      const double* W = p.weights(l);
      const double* b = p.bias(l);
      const double* zin = (l == 0) ? in : z[l - 1].data();
      for (int r = 0; r < rows; ++r) {
        double acc = b[r];
        const double* wr = W + static_cast<size_t>(r) * cols;
        for (int cc = 0; cc < cols; ++cc) acc += wr[cc] * zin[cc];
        a[l][r] = acc;
        z[l][r] = std::sin(p.omega0 * acc);
      }
    }

    // output layer: out = W z_{L-1} + b
    {
      const double* W = p.weights(L);
      double* gW = grad.data() + p.layer_offset(L);
      double* gb = gW + H;
      for (int c = 0; c < H; ++c) gW[c] += g * z[L - 1][c];
      gb[0] += g;
      for (int c = 0; c < H; ++c) delta[c] = g * W[c];  // dL/dz_{L-1}
    }

    for (int l = L - 1; l >= 0; --l) {
      auto [rows, cols] = p.layer_shape(l);
      const double* W = p.weights(l);
      double* gW = grad.data() + p.layer_offset(l);
      double* gb = gW + static_cast<size_t>(rows) * cols;
      const double* zin = (l == 0) ? in : z[l - 1].data();
      if (l > 0) std::fill(delta_prev.begin(), delta_prev.end(), 0.0);
      for (int r = 0; r < rows; ++r) {
        // dL/da_r through z_r = sin(omega0 a_r)
        double da = delta[r] * p.omega0 * std::cos(p.omega0 * a[l][r]);
        gb[r] += da;
        double* gwr = gW + static_cast<size_t>(r) * cols;
        const double* wr = W + static_cast<size_t>(r) * cols;
        for (int cc = 0; cc < cols; ++cc) {
          gwr[cc] += da * zin[cc];
          if (l > 0) delta_prev[cc] += da * wr[cc];
        }
      }
      if (l > 0) delta.swap(delta_prev);
    }
  }
  return grad;
}

// --- SIRN checkpoint format -------------------------------------------------
// little-endian: magic "SIRN"; u32 n_layers; per layer u32 rows, u32 cols;
// f64 omega0, f64 out_scale, f64 v0; then f32 parameters in layer order
// (weights row-major, then bias, per layer).

inline void write_sirn(const std::string& path, const SirenParams& p) {
  auto os = io::detail::open_out(path);
  os.write("SIRN", 4);
  io::detail::write_pod<uint32_t>(os, static_cast<uint32_t>(p.n_layers()));
  for (int l = 0; l < p.n_layers(); ++l) {
    auto [r, c] = p.layer_shape(l);
    io::detail::write_pod<uint32_t>(os, static_cast<uint32_t>(r));
    io::detail::write_pod<uint32_t>(os, static_cast<uint32_t>(c));
  }
  io::detail::write_pod<double>(os, p.omega0);
  io::detail::write_pod<double>(os, p.out_scale);
  io::detail::write_pod<double>(os, p.v0);
  for (double t : p.theta) io::detail::write_pod<float>(os, static_cast<float>(t));
  if (!os) throw ValidationError("write failed: " + path);
}

inline SirenParams load_sirn(const std::string& path) {
  auto is = io::detail::open_in(path);
  io::detail::expect_magic(is, "SIRN", path);
  uint32_t n_layers = io::detail::read_pod<uint32_t>(is, path + " n_layers");
  if (n_layers < 2 || n_layers > 64) throw ValidationError("SIRN: implausible layer count");
  std::vector<std::pair<uint32_t, uint32_t>> shapes(n_layers);
  for (auto& s : shapes) {
    s.first = io::detail::read_pod<uint32_t>(is, path + " rows");
    s.second = io::detail::read_pod<uint32_t>(is, path + " cols");
  }
  SirenParams p;
  p.in_dim = static_cast<int>(shapes[0].second);
  p.hidden = static_cast<int>(shapes[0].first);
  p.n_hidden_layers = static_cast<int>(n_layers) - 1;
  for (uint32_t l = 1; l + 1 < n_layers; ++l)
    if (shapes[l].first != static_cast<uint32_t>(p.hidden) ||
        shapes[l].second != static_cast<uint32_t>(p.hidden))
      throw ValidationError("SIRN: inconsistent hidden layer shapes in " + path);
  if (shapes[n_layers - 1].first != 1 ||
      shapes[n_layers - 1].second != static_cast<uint32_t>(p.hidden))
    throw ValidationError("SIRN: bad output layer shape in " + path);
  p.omega0 = io::detail::read_pod<double>(is, path + " omega0");
  p.out_scale = io::detail::read_pod<double>(is, path + " out_scale");
  p.v0 = io::detail::read_pod<double>(is, path + " v0");
  if (!(p.omega0 > 0.0) || !std::isfinite(p.out_scale) || !(p.v0 > 0.0))
    throw ValidationError("SIRN: bad scalar fields in " + path);
  p.theta.resize(p.param_count());
  for (auto& t : p.theta) {
    float v = io::detail::read_pod<float>(is, path + " theta");
    if (!std::isfinite(v)) throw ValidationError("SIRN: non-finite parameter in " + path);
    t = v;
  }
  return p;
}

}  // namespace pact

#endif  // PACT_NFIELD_HPP
