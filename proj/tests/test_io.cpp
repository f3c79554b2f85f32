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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "pact/io.hpp"
#include "pact/nfield.hpp"

using namespace pact;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("pact_io_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("PGRID round trip", "[io]") {
  TempDir tmp;
  GridSpec g{17, 9, 0.25, {-2.0, 1.5}};
  RasterGrid r = RasterGrid::zeros(g);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<float> u(-5, 5);
  for (double& v : r.values) v = u(rng);  // f32-representable values

  io::write_pgrid(tmp.file("a.pgrid"), r);
  RasterGrid back = io::read_pgrid(tmp.file("a.pgrid"));
  CHECK(back.spec().same_geometry(g));
  for (size_t i = 0; i < r.values.size(); ++i) CHECK(back.values[i] == r.values[i]);
}

TEST_CASE("PGRID rejects bad magic and truncation", "[io]") {
  TempDir tmp;
  {
    std::ofstream os(tmp.file("bad.pgrid"), std::ios::binary);
    os.write("NOPE", 4);
  }
  CHECK_THROWS_AS(io::read_pgrid(tmp.file("bad.pgrid")), ValidationError);

  GridSpec g{4, 4, 0.1, {0, 0}};
  io::write_pgrid(tmp.file("t.pgrid"), RasterGrid::zeros(g));
  auto size = fs::file_size(tmp.file("t.pgrid"));
  fs::resize_file(tmp.file("t.pgrid"), size - 8);
  CHECK_THROWS_AS(io::read_pgrid(tmp.file("t.pgrid")), ValidationError);

  CHECK_THROWS_AS(io::read_pgrid(tmp.file("missing.pgrid")), ValidationError);
}

TEST_CASE("PGRID rejects non-finite values", "[io]") {
  TempDir tmp;
  GridSpec g{2, 2, 0.1, {0, 0}};
  RasterGrid r = RasterGrid::zeros(g);
  io::write_pgrid(tmp.file("n.pgrid"), r);
  {
    std::fstream f(tmp.file("n.pgrid"),
                   std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(4 + 8 + 24);  // first f32 value
    float nan = std::numeric_limits<float>::quiet_NaN();
    f.write(reinterpret_cast<const char*>(&nan), sizeof nan);
  }
  CHECK_THROWS_AS(io::read_pgrid(tmp.file("n.pgrid")), ValidationError);
}

TEST_CASE("SIGSET round trip", "[io]") {
  TempDir tmp;
  SignalSet s;
  s.geom = {8, 50.0, 0.125};
  s.n_samples = 64;
  s.dt = 25e-9;
  s.t0 = 3.1e-5;
  s.background_sos = 1499.4;
  s.data.resize(8 * 64);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<float> u(-3, 3);
  for (double& v : s.data) v = u(rng);

  io::write_sigset(tmp.file("s.sigset"), s);
  SignalSet back = io::read_sigset(tmp.file("s.sigset"));
  CHECK(back.geom.n_transducers == 8);
  CHECK(back.geom.radius == 50.0);
  CHECK(back.geom.angle_offset == 0.125);
  CHECK(back.n_samples == 64);
  CHECK(back.dt == 25e-9);
  CHECK(back.t0 == 3.1e-5);
  CHECK(back.background_sos == 1499.4);
  for (size_t i = 0; i < s.data.size(); ++i) CHECK(back.data[i] == s.data[i]);
}

TEST_CASE("SIRN checkpoint round trip", "[io]") {
  TempDir tmp;
  SirenParams p = init_siren(5, 16, 2, 30.0, 80.0, 1501.0);
  write_sirn(tmp.file("p.sirn"), p);
  SirenParams back = load_sirn(tmp.file("p.sirn"));
  CHECK(back.hidden == 16);
  CHECK(back.n_hidden_layers == 2);
  CHECK(back.omega0 == 30.0);
  CHECK(back.out_scale == 80.0);
  CHECK(back.v0 == 1501.0);
  REQUIRE(back.theta.size() == p.theta.size());
  for (size_t i = 0; i < p.theta.size(); ++i)
    CHECK(back.theta[i] == Catch::Approx(p.theta[i]).margin(1e-6));

  {
    std::ofstream os(tmp.file("junk.sirn"), std::ios::binary);
    os.write("SIRN", 4);
    uint32_t layers = 99;
    os.write(reinterpret_cast<const char*>(&layers), 4);
  }
  CHECK_THROWS_AS(load_sirn(tmp.file("junk.sirn")), ValidationError);
}
