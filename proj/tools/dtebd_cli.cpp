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

#include "dtebd/config.hpp"
#include "dtebd/experiment.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>

using namespace dtebd;

namespace {

struct Overrides {
  std::optional<Index> chi;
  std::optional<double> dt;
  std::optional<double> tEnd;
  std::optional<std::string> outDir;
  std::optional<double> wallClock;
  std::optional<long> progressEvery;
};

void addOverrides(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--chi", o.chi, "maximal bond dimension");
  cmd->add_option("--dt", o.dt, "time step in units of tau_c");
  cmd->add_option("--t-end", o.tEnd, "final time in units of tau_c");
  cmd->add_option("--out-dir", o.outDir, "output directory");
  cmd->add_option("--wall-clock", o.wallClock, "wall-clock budget in seconds; checkpoints and exits 10 when exceeded");
  cmd->add_option("--progress", o.progressEvery, "progress line every N steps");
}

ExperimentConfig loadConfig(const std::string& source, const Overrides& o) {
  ExperimentConfig c;
  if (std::filesystem::exists(source)) {
    c = loadConfigFile(source);
  } else {
    const auto names = presetNames();
    if (std::find(names.begin(), names.end(), source) == names.end()) {
      throw ConfigError("'" + source + "' is neither a config file nor a preset name");
    }
    c = preset(source);
  }
  if (o.chi) c.schedule.chiMax = *o.chi;
  if (o.dt) c.schedule.dt = *o.dt;
  if (o.tEnd) c.schedule.tEnd = *o.tEnd;
  if (o.outDir) c.outDir = *o.outDir;
  if (o.wallClock) c.schedule.wallClockSeconds = *o.wallClock;
  if (o.progressEvery) c.schedule.progressEvery = *o.progressEvery;
  // re-run the checks on the overridden values
  return parseConfig(toJson(c));
}

void printCheck(const ExperimentConfig& c) {
  nlohmann::json out = {{"configHash", configHash(c)}, {"config", toJson(c)}, {"plans", nlohmann::json::array()}};
  for (const auto& p : resolvePlans(c)) out["plans"].push_back(describePlan(p));
  std::cout << out.dump(2) << '\n';
}

void report(const ExperimentOutcome& r) {
  for (const auto& p : r.plans) {
    if (!p.message.empty()) std::cerr << p.label << ": " << p.message << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Density-operator TEBD for bosons with two-particle loss"};
  app.require_subcommand(1);

  std::string configSource, checkpoint, presetName;
  Overrides runOv, checkOv;
  std::optional<double> resumeWall;
  std::optional<long> resumeProgress;

  auto* run = app.add_subcommand("run", "run a config file or a built-in preset");
  run->add_option("config", configSource, "config path or preset name")->required();
  addOverrides(run, runOv);

  auto* presets = app.add_subcommand("presets", "list built-in presets, or print one as JSON");
  presets->add_option("name", presetName, "preset to print");

  auto* check = app.add_subcommand("check", "validate a config and print the resolved plans");
  check->add_option("config", configSource, "config path or preset name")->required();
  addOverrides(check, checkOv);

  auto* resume = app.add_subcommand("resume", "continue a checkpointed sweep point");
  resume->add_option("checkpoint", checkpoint, "checkpoint file")->required();
  resume->add_option("--wall-clock", resumeWall, "wall-clock budget in seconds");
  resume->add_option("--progress", resumeProgress, "progress line every N steps");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    ExperimentOptions opts;
    opts.log = &std::cerr;
    if (*presets) {
      if (presetName.empty()) {
        for (const auto& n : presetNames()) std::cout << n << "\t" << presetDescription(n) << '\n';
      } else {
        std::cout << toJson(preset(presetName)).dump(2) << '\n';
      }
      return kExitOk;
    }
    if (*check) {
      printCheck(loadConfig(configSource, checkOv));
      return kExitOk;
    }
    opts.threads = threadsFromEnvironment();
    if (*run) {
      const ExperimentConfig c = loadConfig(configSource, runOv);
      const auto r = runExperiment(c, opts);
      report(r);
      return r.exitCode;
    }
    if (*resume) {
      opts.wallClockSeconds = resumeWall;
      opts.progressEvery = resumeProgress;
      const auto r = resumeExperiment(checkpoint, opts);
      report(r);
      return r.exitCode;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitOk;
}
