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

#include "dtebd/experiment.hpp"

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace dtebd;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("dtebd_test_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args) {
  const char* exe = std::getenv("DTEBD_CLI");
  REQUIRE(exe != nullptr);
  const std::string cmd = std::string(exe) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

const std::string kSmokeLabel = "G20_dissipative";

}  // namespace

TEST_CASE("record json round trip keeps NaN and exact doubles") {
  ObservableRecord r;
  r.time = 0.1 + 0.2;
  r.density = {1.0 / 3.0, 0.0};
  r.g2Local = {std::nan(""), 0.7};
  r.g2Row = {0.5, std::nan("")};
  r.lossRate = -1e-300;
  const ObservableRecord b = recordFromJson(nlohmann::json::parse(recordToJson(r).dump()));
  CHECK(b.time == r.time);
  CHECK(b.density == r.density);
  CHECK(std::isnan(b.g2Local[0]));
  CHECK(b.g2Local[1] == 0.7);
  CHECK(std::isnan(b.timeScaled));
  CHECK(b.lossRate == r.lossRate);
}

TEST_CASE("smoke run through the library") {
  ExperimentConfig c = preset("smoke");
  const fs::path dir = scratch("lib");
  c.outDir = dir.string();
  const ExperimentOutcome out = runExperiment(c);
  CHECK(out.exitCode == kExitOk);
  REQUIRE(out.plans.size() == 1);
  const auto& recs = out.plans[0].series.records;
  REQUIRE(recs.size() == 5);
  CHECK(recs.front().timeScaled == 0.0);
  CHECK(recs.back().timeScaled == doctest::Approx(0.2));
  CHECK(recs.back().totalN < recs.front().totalN);
  CHECK(recs.front().totalN == doctest::Approx(0.5).epsilon(1e-3));
  for (const char* ext : {".series.tsv", ".density.tsv", ".g2local.tsv", ".g2row.tsv", ".decay.tsv", ".summary.json"}) {
    const fs::path f = dir / (kSmokeLabel + ext);
    CHECK_MESSAGE(fs::exists(f), f.string());
  }
  CHECK(fs::exists(dir / "config.json"));
  const std::string series = slurp(dir / (kSmokeLabel + ".series.tsv"));
  CHECK(series.rfind("# config_hash=" + configHash(c), 0) == 0);
  const auto echo = nlohmann::json::parse(slurp(dir / "config.json"));
  CHECK(configHash(parseConfig(echo.at("config"))) == configHash(c));
  fs::remove_all(dir);
}

TEST_CASE("zero duration run records only the initial state") {
  ExperimentConfig c = preset("smoke");
  const fs::path dir = scratch("zero");
  c.outDir = dir.string();
  c.schedule.tEnd = 0.0;
  const ExperimentOutcome out = runExperiment(c);
  CHECK(out.exitCode == kExitOk);
  REQUIRE(out.plans.size() == 1);
  CHECK(out.plans[0].series.records.size() == 1);
  fs::remove_all(dir);
}

TEST_CASE("numerical abort writes a diagnostic") {
  ExperimentConfig c = preset("smoke");
  const fs::path dir = scratch("abort");
  c.outDir = dir.string();
  c.schedule.chiMax = 1;
  c.schedule.abortDiscard = 1e-14;
  const ExperimentOutcome out = runExperiment(c);
  CHECK(out.exitCode == kExitNumerical);
  CHECK(fs::exists(dir / (kSmokeLabel + ".diagnostic.json")));
  fs::remove_all(dir);
}

TEST_CASE("command line exit codes") {
  CHECK(cli("presets") == kExitOk);
  CHECK(cli("presets fig3-desk") == kExitOk);
  CHECK(cli("presets nosuch") == kExitConfig);
  CHECK(cli("check smoke") == kExitOk);
  CHECK(cli("check /nonexistent/config.json") == kExitConfig);
  CHECK(cli("run smoke --frobnicate") == kExitConfig);
  CHECK(cli("run smoke --chi 0") == kExitConfig);
  CHECK(cli("run smoke --dt 0.03") == kExitConfig);

  const fs::path bad = scratch("bad.json");
  {
    std::ofstream f(bad);
    f << R"({"grid": {"nSites": 8, "cutof": 3}})";
  }
  CHECK(cli("check " + bad.string()) == kExitConfig);
  CHECK(cli("run " + bad.string()) == kExitConfig);
  fs::remove(bad);

  const fs::path junk = scratch("junk.checkpoint");
  {
    std::ofstream f(junk);
    f << "garbage";
  }
  CHECK(cli("resume " + junk.string()) == kExitConfig);
  fs::remove(junk);
  CHECK(cli("resume /nonexistent.checkpoint") == kExitConfig);
}

TEST_CASE("checkpoint and resume reproduce an uninterrupted run exactly") {
  const fs::path a = scratch("full"), b = scratch("split");
  CHECK(cli("run smoke --out-dir " + a.string()) == kExitOk);
  CHECK(cli("run smoke --wall-clock 1e-9 --out-dir " + b.string()) == kExitCheckpoint);
  const fs::path ckpt = b / (kSmokeLabel + ".checkpoint");
  REQUIRE(fs::exists(ckpt));
  CHECK_FALSE(fs::exists(b / (kSmokeLabel + ".series.tsv")));

  // one more interrupted leg, then to the end
  CHECK(cli("resume " + ckpt.string()) == kExitCheckpoint);
  CHECK(cli("resume --wall-clock 0 " + ckpt.string()) == kExitOk);
  CHECK_FALSE(fs::exists(ckpt));
  for (const char* ext : {".series.tsv", ".density.tsv", ".g2local.tsv", ".g2row.tsv", ".decay.tsv"}) {
    const std::string x = slurp(a / (kSmokeLabel + ext));
    CHECK_FALSE(x.empty());
    CHECK_MESSAGE(x == slurp(b / (kSmokeLabel + ext)), ext);
  }
  const auto ea = nlohmann::json::parse(slurp(a / "config.json"));
  const auto eb = nlohmann::json::parse(slurp(b / "config.json"));
  CHECK(ea.at("configHash") == eb.at("configHash"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("flag overrides") {
  const fs::path d = scratch("flags");
  CHECK(cli("run smoke --chi 8 --dt 0.025 --t-end 0.1 --out-dir " + d.string()) == kExitOk);
  const auto echo = nlohmann::json::parse(slurp(d / "config.json"));
  CHECK(echo.at("config").at("schedule").at("chiMax") == 8);
  CHECK(echo.at("config").at("schedule").at("dt") == 0.025);
  CHECK(echo.at("config").at("schedule").at("tEnd") == 0.1);
  fs::remove_all(d);
}

TEST_CASE("thread count from the environment") {
  ::setenv(kThreadsEnv, "3", 1);
  CHECK(threadsFromEnvironment() == 3);
  ::setenv(kThreadsEnv, "zero", 1);
  CHECK_THROWS_AS(threadsFromEnvironment(), ConfigError);
  ::unsetenv(kThreadsEnv);
  CHECK(threadsFromEnvironment() >= 1);
}
