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

#include "dtebd/evolve.hpp"
#include "dtebd/initial_state.hpp"
#include "dtebd/model.hpp"

#include <json.hpp>

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace dtebd {

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class InteractionMode { PureDissipative, PredominantlyRepulsive, Custom };

std::string toString(InteractionMode m);
InteractionMode interactionModeFromString(const std::string& s);

struct Interaction {
  InteractionMode mode = InteractionMode::PureDissipative;
  double G = 0.0;        ///< |G|, used by the two named modes
  double ratio = 10.0;   ///< |Re g / Im g| for predominantlyRepulsive
  double gReal = 0.0;    ///< custom only
  double gImag = 0.0;    ///< custom only
};

struct SweepPoint {
  std::string label;
  Interaction interaction;
};

struct ScheduleConfig {
  double tEnd = 4.0;              ///< in units of tau_c (absolute when tau_c is undefined)
  std::optional<double> dt;       ///< same units; empty selects the automatic step
  double recordEvery = 0.05;
  std::vector<double> recordTimes;  ///< extra record times
  int order = 2;
  Index chiMax = 40;
  double epsCut = 1e-12;
  bool selfTest = true;
  double selfTestTolerance = 1e-3;
  double abortDiscard = 1e-2;
  double wallClockSeconds = 0.0;
  long progressEvery = 0;
};

struct ExperimentConfig {
  std::string name = "custom";
  PhysicalParams physical{};      ///< gReal / gImag come from the interaction
  bool diffusionSet = false;
  bool boxLengthSet = false;
  int nSites = 40;
  int fockCutoff = 3;
  Interaction interaction{};
  std::vector<SweepPoint> sweep;
  PulseProfile profile{};
  std::string profileTable;       ///< optional path, loaded into profile.table
  ScheduleConfig schedule{};
  int referenceSite = -1;
  double densityFloor = 1e-8;
  std::string outDir = "out";
  bool checkpoint = true;
  bool deterministic = true;
};

/// One fully resolved simulation of a sweep.
struct RunPlan {
  std::string label;
  PhysicalParams physical;
  LatticeModel model;
  std::optional<DimensionlessGroup> groups;
  double timeUnit = 1.0;        ///< tau_c, or 1 when the coupling vanishes
  double dtAutoCap = 0.0;       ///< largest automatic dt in schedule units
  EvolutionSchedule schedule;   ///< dt left at the configured or automatic value
  std::vector<Complex> amplitudes;
  int referenceSite = 0;
};

ExperimentConfig parseConfig(const nlohmann::json& j);
ExperimentConfig parseConfigText(const std::string& text);
ExperimentConfig loadConfigFile(const std::string& path);

/// Resolved configuration with every default spelled out.
nlohmann::json toJson(const ExperimentConfig& c);

/// FNV-1a 64 of the canonical echo, as 16 hex digits.
std::string configHash(const ExperimentConfig& c);

/// Throws ConfigError on physical inconsistencies; builds the per-point plans.
std::vector<RunPlan> resolvePlans(const ExperimentConfig& c);

nlohmann::json describePlan(const RunPlan& p);

std::vector<std::string> presetNames();
std::string presetDescription(const std::string& name);
ExperimentConfig preset(const std::string& name);

/// Automatic time step: min(tau_c / 100, 0.05 hbar / J) in schedule units,
/// shrunk so that it divides the record spacing.
double automaticTimeStep(const RunPlan& p, const ScheduleConfig& s);

std::vector<double> recordGrid(const ScheduleConfig& s);

}  // namespace dtebd
