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

#pragma once

#include "dtebd/config.hpp"
#include "dtebd/observables.hpp"
#include "dtebd/superket.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dtebd {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3, kExitCheckpoint = 10 };

struct ExperimentOptions {
  int threads = 1;
  std::ostream* log = nullptr;  ///< progress and status lines; null silences them
  // run-control overrides for resume
  std::optional<double> wallClockSeconds;
  std::optional<long> progressEvery;
};

struct PlanOutcome {
  std::string label;
  int exitCode = kExitOk;
  std::string message;
  std::string checkpointPath;
  ObservableSeries series;
  double dt = 0.0;  ///< schedule units
};

struct ExperimentOutcome {
  int exitCode = kExitOk;
  std::vector<PlanOutcome> plans;
};

/// Runs every sweep point and writes the per-point files under c.outDir.
ExperimentOutcome runExperiment(const ExperimentConfig& c, const ExperimentOptions& options = {});

/// Continues one sweep point from a checkpoint written by runExperiment.
ExperimentOutcome resumeExperiment(const std::string& checkpointPath, const ExperimentOptions& options = {});

/// Name of the environment variable holding the worker thread count.
inline constexpr const char* kThreadsEnv = "DTEBD_THREADS";
int threadsFromEnvironment();

// serialization helpers, exposed for tests
nlohmann::json recordToJson(const ObservableRecord& r);
ObservableRecord recordFromJson(const nlohmann::json& j);

void writeFileAtomic(const std::string& path, const std::string& contents);

std::string seriesTable(const ObservableSeries& s, const std::string& hash, const std::string& label);
std::string profileTable(const ObservableSeries& s, const std::string& hash, const std::string& label,
                         const std::string& what);
std::string decayTable(const DecayCheckReport& r, const std::string& hash, const std::string& label);

}  // namespace dtebd
