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

#ifndef PACT_IO_HPP
#define PACT_IO_HPP

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "pact/core.hpp"

// Binary file formats. Both are little-endian with a 4-byte magic:
//
//   PGRID ("PGRD"): u32 width, u32 height, f64 pitch_mm, f64 origin_x_mm,
//                   f64 origin_y_mm, then width*height f32 values row-major.
//   SIGSET ("SIGS"): u32 N_t, u32 n_samples, f64 dt_s, f64 t0_s,
//                    f64 ring_radius_mm, f64 angle_offset_rad,
//                    f64 background_sos_mps, then N_t*n_samples f32 values
//                    transducer-major.

namespace pact::io {

static_assert(std::endian::native == std::endian::little,
              "file I/O assumes a little-endian host");

namespace detail {

template <typename T>
void write_pod(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, const std::string& what) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw ValidationError("truncated file while reading " + what);
  return v;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("cannot open for writing: " + path);
  return os;
}

inline std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("cannot open for reading: " + path);
  return is;
}

inline void expect_magic(std::istream& is, const char* magic, const std::string& path) {
  char buf[4];
  is.read(buf, 4);
  if (!is || std::memcmp(buf, magic, 4) != 0)
    throw ValidationError("bad magic in " + path + " (expected " + magic + ")");
}

}  // namespace detail

inline void write_pgrid(const std::string& path, const RasterGrid& g) {
  g.spec().validate();
  auto os = detail::open_out(path);
  os.write("PGRD", 4);
  detail::write_pod<uint32_t>(os, static_cast<uint32_t>(g.width));
  detail::write_pod<uint32_t>(os, static_cast<uint32_t>(g.height));
  detail::write_pod<double>(os, g.pitch);
  detail::write_pod<double>(os, g.origin.x);
  detail::write_pod<double>(os, g.origin.y);
  for (double v : g.values) detail::write_pod<float>(os, static_cast<float>(v));
  if (!os) throw ValidationError("write failed: " + path);
}

inline RasterGrid read_pgrid(const std::string& path) {
  auto is = detail::open_in(path);
  detail::expect_magic(is, "PGRD", path);
  RasterGrid g;
  g.width = static_cast<int>(detail::read_pod<uint32_t>(is, path + " width"));
  g.height = static_cast<int>(detail::read_pod<uint32_t>(is, path + " height"));
  g.pitch = detail::read_pod<double>(is, path + " pitch");
  g.origin.x = detail::read_pod<double>(is, path + " origin_x");
  g.origin.y = detail::read_pod<double>(is, path + " origin_y");
  g.spec().validate();
  size_t n = static_cast<size_t>(g.width) * g.height;
  g.values.resize(n);
  for (size_t i = 0; i < n; ++i) {
    float v = detail::read_pod<float>(is, path + " values");
    if (!std::isfinite(v)) throw ValidationError("non-finite value in " + path);
    g.values[i] = v;
  }
  return g;
}

inline void write_sigset(const std::string& path, const SignalSet& s) {
  s.validate();
  auto os = detail::open_out(path);
  os.write("SIGS", 4);
  detail::write_pod<uint32_t>(os, static_cast<uint32_t>(s.geom.n_transducers));
  detail::write_pod<uint32_t>(os, static_cast<uint32_t>(s.n_samples));
  detail::write_pod<double>(os, s.dt);
  detail::write_pod<double>(os, s.t0);
  detail::write_pod<double>(os, s.geom.radius);
  detail::write_pod<double>(os, s.geom.angle_offset);
  detail::write_pod<double>(os, s.background_sos);
  for (double v : s.data) detail::write_pod<float>(os, static_cast<float>(v));
  if (!os) throw ValidationError("write failed: " + path);
}

inline SignalSet read_sigset(const std::string& path) {
  auto is = detail::open_in(path);
  detail::expect_magic(is, "SIGS", path);
  SignalSet s;
  s.geom.n_transducers = static_cast<int>(detail::read_pod<uint32_t>(is, path + " N_t"));
  s.n_samples = static_cast<int>(detail::read_pod<uint32_t>(is, path + " n_samples"));
  s.dt = detail::read_pod<double>(is, path + " dt");
  s.t0 = detail::read_pod<double>(is, path + " t0");
  s.geom.radius = detail::read_pod<double>(is, path + " ring_radius");
  s.geom.angle_offset = detail::read_pod<double>(is, path + " angle_offset");
  s.background_sos = detail::read_pod<double>(is, path + " background_sos");
  if (!(s.background_sos > 0.0)) throw ValidationError("non-positive SOS in " + path);
  size_t n = static_cast<size_t>(s.geom.n_transducers) * s.n_samples;
  s.data.resize(n);
  for (size_t i = 0; i < n; ++i) {
    float v = detail::read_pod<float>(is, path + " data");
    if (!std::isfinite(v)) throw ValidationError("non-finite sample in " + path);
    s.data[i] = v;
  }
  s.validate();
  return s;
}

}  // namespace pact::io

#endif  // PACT_IO_HPP
