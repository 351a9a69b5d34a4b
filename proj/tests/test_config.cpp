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

#include "dtebd/config.hpp"

#include <cmath>

using namespace dtebd;
using nlohmann::json;

namespace {

std::string errorOf(json j) {
  if (!j.contains("interaction")) j["interaction"] = {{"G", 20.0}};
  try {
    resolvePlans(parseConfig(j));
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("defaults") {
  CHECK_THROWS_AS(parseConfig(json::object()), ConfigError);
  const ExperimentConfig c = parseConfig({{"interaction", {{"G", 20.0}}}});
  CHECK(c.nSites == 40);
  CHECK(c.fockCutoff == 3);
  CHECK(c.physical.meanN0 == 2.5);
  CHECK(c.physical.boxLength == 40.0);
  CHECK(c.physical.diffusionD == doctest::Approx(0.1));
  CHECK_FALSE(c.schedule.dt.has_value());
  CHECK(c.schedule.chiMax == 40);
  CHECK(c.schedule.order == 2);
}

TEST_CASE("unknown keys and bad values are rejected with the field name") {
  CHECK(errorOf({{"grid", {{"nSite", 4}}}}).find("grid.nSite") != std::string::npos);
  CHECK(errorOf({{"colour", 1}}).find("colour") != std::string::npos);
  CHECK(errorOf({{"schedule", {{"chiMax", "forty"}}}}).find("schedule.chiMax") != std::string::npos);
  CHECK(errorOf({{"interaction", {{"mode", "custom"}, {"gReal", 0.1}, {"gImag", 0.2}}}}).find("gImag") !=
        std::string::npos);
  CHECK(errorOf({{"interaction", {{"G", -1.0}}}}).find("interaction.G") != std::string::npos);
  CHECK(errorOf({{"physical", {{"mass", 0.0}}}, {"interaction", {{"G", 1.0}}}}).find("mass") != std::string::npos);
  CHECK(errorOf({{"grid", {{"nSites", 1}}}}).find("nSites") != std::string::npos);
  CHECK(errorOf({{"schedule", {{"order", 3}}}}).find("order") != std::string::npos);
  CHECK(errorOf({{"interaction", {{"G", 20.0}}}, {"schedule", {{"dt", 0.03}, {"tEnd", 1.0}}}}).find("multiple") !=
        std::string::npos);
  CHECK(errorOf({{"interaction", {{"G", 20.0}}}, {"physical", {{"meanN0", 200.0}}}}).find("cutoff violation") !=
        std::string::npos);
  CHECK(errorOf({{"interaction", {{"G", 20.0}}}, {"sweep", {1.0, 1.0}}}).find("duplicate") != std::string::npos);
  CHECK_THROWS_AS(parseConfigText("{ not json"), ConfigError);
  CHECK_THROWS_AS(loadConfigFile("/nonexistent/config.json"), ConfigError);
}

TEST_CASE("interaction modes") {
  const ExperimentConfig c = parseConfig({{"interaction", {{"G", 20.0}}},
                                          {"sweep",
                                           {1.0, 10.0, 20.0, 100.0,
                                            {{"mode", "predominantlyRepulsive"}, {"G", 10.0}, {"ratio", 10.0}},
                                            {{"label", "mine"}, {"mode", "custom"}, {"gReal", 0.1}, {"gImag", 0.0}}}}});
  const auto plans = resolvePlans(c);
  REQUIRE(plans.size() == 6);
  CHECK(plans[0].label == "G1_dissipative");
  CHECK(plans[3].label == "G100_dissipative");
  CHECK(plans[4].label == "G10_repulsive10");
  CHECK(plans[5].label == "mine");
  const double rho = 2.5 / 40.0;
  for (int k = 0; k < 4; ++k) {
    const double G = std::vector<double>{1, 10, 20, 100}[k];
    CHECK(plans[k].physical.gReal == 0.0);
    CHECK(plans[k].physical.gImag == doctest::Approx(-G * rho).epsilon(1e-14));
    CHECK(plans[k].groups->liebLinigerG == doctest::Approx(G).epsilon(1e-12));
    CHECK(plans[k].timeUnit == doctest::Approx(2.0 / (G * rho)).epsilon(1e-12));
  }
  const auto& rep = plans[4].physical;
  CHECK(std::hypot(rep.gReal, rep.gImag) == doctest::Approx(10.0 * rho).epsilon(1e-14));
  CHECK(rep.gReal / -rep.gImag == doctest::Approx(10.0).epsilon(1e-12));
  // elastic only: no loss
  CHECK(plans[5].model.gamma2 == 0.0);
  CHECK(plans[5].model.U == doctest::Approx(0.1));
}

TEST_CASE("automatic time step") {
  const auto plans = resolvePlans(parseConfig({{"sweep", {1.0, 20.0, 100.0}}}));
  // |G| = 1: hopping bound 0.05 hbar / J, tau_c = 32
  CHECK(plans[0].dtAutoCap == doctest::Approx(0.05 / 0.5 / 32.0).epsilon(1e-12));
  CHECK(plans[0].schedule.dt == doctest::Approx(0.003125).epsilon(1e-12));
  CHECK(plans[1].schedule.dt == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(plans[2].schedule.dt == doctest::Approx(0.01).epsilon(1e-12));
  for (const auto& p : plans) {
    CHECK(p.schedule.dt <= p.dtAutoCap * (1 + 1e-12));
    CHECK_NOTHROW(p.schedule.validate());
    CHECK(p.schedule.recordTimes.front() == 0.0);
    CHECK(p.schedule.recordTimes.back() == 4.0);
    CHECK(p.schedule.recordTimes.size() == 81);
    CHECK(p.referenceSite == 20);
  }
}

TEST_CASE("record grid merges extra times") {
  ScheduleConfig s;
  s.tEnd = 0.77;
  s.recordEvery = 0.1;
  s.recordTimes = {0.35, 0.7};
  const auto g = recordGrid(s);
  CHECK(g.size() == 10);
  CHECK(g.back() == 0.77);
  CHECK(g[4] == 0.35);
}

TEST_CASE("echo round trip and hash") {
  ExperimentConfig c = preset("fig3-desk");
  const ExperimentConfig back = parseConfig(toJson(c));
  CHECK(configHash(back) == configHash(c));
  CHECK(toJson(back) == toJson(c));
  CHECK(configHash(c).size() == 16);

  ExperimentConfig d = c;
  d.schedule.chiMax = 80;
  CHECK(configHash(d) != configHash(c));
  d = c;
  d.schedule.wallClockSeconds = 30.0;
  d.schedule.progressEvery = 5;
  CHECK(configHash(d) == configHash(c));
  d.outDir = "elsewhere";
  CHECK(configHash(d) == configHash(c));
  d = c;
  d.schedule.dt = 0.01;
  CHECK(configHash(d) != configHash(c));
  CHECK(toJson(d)["schedule"]["dt"] == 0.01);
  CHECK(toJson(c)["schedule"]["dt"].is_null());
}

TEST_CASE("presets") {
  for (const auto& name : presetNames()) {
    const ExperimentConfig c = preset(name);
    CHECK(c.name == name);
    CHECK(c.outDir == "out/" + name);
    CHECK_FALSE(presetDescription(name).empty());
    CHECK_NOTHROW(resolvePlans(c));
  }
  CHECK(resolvePlans(preset("fig3-desk")).size() == 4);
  CHECK(resolvePlans(preset("fig5-desk")).size() == 2);
  const auto six = resolvePlans(preset("fig6-desk"));
  REQUIRE(six.size() == 2);
  CHECK(six[1].physical.gReal > 0.0);
  CHECK(six[0].schedule.recordTimes.back() == doctest::Approx(0.77));
  CHECK_THROWS_AS(preset("fig7"), ConfigError);
}
