// Copyright 2026 The dtebd Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dtebd/initial_state.hpp"
#include "dtebd/superket.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

using namespace dtebd;

namespace {

LatticeModel grid(int n, int cutoff = 3) {
  LatticeModel m;
  m.nSites = n;
  m.fockCutoff = cutoff;
  return m;
}

double sumNorm(const std::vector<Complex>& a) {
  double s = 0.0;
  for (Complex c : a) s += std::norm(c);
  return s;
}

}  // namespace

TEST_CASE("flat top over the whole box is uniform") {
  PulseProfile p;
  p.width = 2.0;
  p.edge = 0.0;
  const auto amps = buildProfile(p, grid(500), 5.0);
  REQUIRE(amps.size() == 500);
  for (Complex c : amps) {
    CHECK(std::norm(c) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(c.imag() == 0.0);
  }
}

TEST_CASE("profiles are normalized to the mean particle number") {
  for (ProfileKind k : {ProfileKind::Gaussian, ProfileKind::FlatTop}) {
    PulseProfile p;
    p.kind = k;
    p.width = 0.4;
    const auto amps = buildProfile(p, grid(40), 2.5);
    CHECK(sumNorm(amps) == doctest::Approx(2.5).epsilon(1e-12));
    // symmetric about the centre site
    CHECK(std::norm(amps[15]) == doctest::Approx(std::norm(amps[25])).epsilon(1e-12));
    CHECK(std::norm(amps[20]) > std::norm(amps[2]));
  }
  PulseProfile p;
  p.width = 0.5;
  p.edge = 0.1;
  const auto amps = buildProfile(p, grid(40), 2.5);
  // plateau of 20 sites plus raised cosine shoulders, zero far out
  CHECK(std::norm(amps[20]) == doctest::Approx(std::norm(amps[14])).epsilon(1e-12));
  CHECK(std::norm(amps[0]) == 0.0);
  CHECK(std::norm(amps[38]) == 0.0);
  CHECK(std::norm(amps[32]) < std::norm(amps[30]));
}

TEST_CASE("gaussian full width at half maximum") {
  PulseProfile p;
  p.kind = ProfileKind::Gaussian;
  p.width = 0.2;
  const auto amps = buildProfile(p, grid(100), 3.0);
  CHECK(std::norm(amps[60]) / std::norm(amps[50]) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("tabulated profile") {
  const auto path = std::filesystem::temp_directory_path() / "dtebd_profile_test.tsv";
  {
    std::ofstream f(path);
    f << "# position density\n0.0 0.0\n0.5 1.0  # peak\n\n1.0 0.0\n";
  }
  PulseProfile p;
  p.kind = ProfileKind::Tabulated;
  p.table = readProfileTable(path.string());
  REQUIRE(p.table.size() == 3);
  const auto amps = buildProfile(p, grid(10), 1.0);
  // triangle sampled at l/10
  CHECK(std::norm(amps[5]) == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(std::norm(amps[1]) == doctest::Approx(0.04).epsilon(1e-12));
  CHECK(std::norm(amps[0]) == 0.0);
  std::filesystem::remove(path);

  CHECK_THROWS(readProfileTable("/nonexistent/profile.tsv"));
  p.table = {{0.0, 1.0}, {0.0, 2.0}};
  CHECK_THROWS(buildProfile(p, grid(10), 1.0));
  p.table = {{0.0, 1.0}, {1.0, -2.0}};
  CHECK_THROWS(buildProfile(p, grid(10), 1.0));
}

TEST_CASE("cutoff violations are rejected") {
  PulseProfile p;
  p.width = 0.1;
  p.edge = 0.0;
  // everything piled on four sites
  try {
    buildProfile(p, grid(40), 2.5);
    FAIL("expected a cutoff violation");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("cutoff violation") != std::string::npos);
  }
  // the desk pulse fits
  PulseProfile desk;
  CHECK_NOTHROW(buildProfile(desk, grid(40), 2.5));
  CHECK_THROWS(buildProfile(desk, grid(40), -1.0));
  CHECK((profileKindFromString("gaussian") == ProfileKind::Gaussian));
  CHECK(toString(ProfileKind::Tabulated) == std::string("tabulated"));
  CHECK_THROWS(profileKindFromString("square"));
}
