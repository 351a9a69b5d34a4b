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

#include "dtebd/model.hpp"
#include "dtebd/superket.hpp"

#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace dtebd {

inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

/// One snapshot of the measured quantities. Undefined g2 entries (density
/// below the floor) are NaN.
struct ObservableRecord {
  double time = 0.0;                ///< absolute time
  double timeScaled = kUndefined;   ///< t / tau_c when tau_c is defined
  int referenceSite = 0;
  std::vector<double> density;
  std::vector<double> g2Local;
  std::vector<double> g2Row;        ///< g2(reference, m)
  double totalN = 0.0;
  double trace = 1.0;
  double cumulativeDiscard = 0.0;
  Index maxBond = 1;
  double maxImaginary = 0.0;        ///< largest |Im| among the normalized expectations
  // contributions to d<n>/dt at the reference site
  double lossRate = 0.0;
  double fluxRate = 0.0;
  double diffusionRate = 0.0;
};

struct ObservableSeries {
  std::vector<ObservableRecord> records;
  std::string configHash;
  std::string modelEcho;
};

struct RecorderOptions {
  int referenceSite = -1;      ///< -1 selects nSites / 2
  double densityFloor = 1e-8;
  double timeUnit = kUndefined;  ///< tau_c, used for the scaled time column
  bool rates = true;
};

ObservableRecord recordObservables(const SuperketMPS& state, const LatticeModel& model, double time,
                                   const RecorderOptions& options = {});

/// <a^dag^2 a^2> / <n>^2 on one site; nullopt when <n> is below the floor.
std::optional<double> g2Local(const SuperketMPS& state, int site, double densityFloor = 1e-8);

/// <n_a n_b> / (<n_a><n_b>) for distinct sites; nullopt below the floor.
std::optional<double> g2NonLocal(const SuperketMPS& state, int siteA, int siteB, double densityFloor = 1e-8);

/// Contributions to d<n_site>/dt (pair loss, hopping flux, diffusion), computed
/// from the two-site reduced density matrices around the site.
struct DensityRates {
  double loss = 0.0;
  double flux = 0.0;
  double diffusion = 0.0;
  double total() const { return loss + flux + diffusion; }
};
DensityRates densityRates(const SuperketMPS& state, const LatticeModel& model, int site);

struct DecayCheckReport {
  int site = 0;
  std::vector<double> times;
  std::vector<double> timesScaled;
  std::vector<double> recorded;
  std::vector<double> odeDensity;    ///< integrated with the recorded g2(t)
  std::vector<double> unityDensity;  ///< integrated with g2 = 1
  std::vector<double> relDeviation;  ///< |ode - recorded| / recorded
  double maxRelDeviation = 0.0;
  /// |finite-difference d<n>/dt - (loss + flux + diffusion)| / |loss| at the
  /// interior record times; NaN where it is not evaluated.
  std::vector<double> balanceResidual;
  double maxBalanceResidual = kUndefined;
  /// |d<n>/dt - loss| / |loss| from the recorded rate split, i.e. how far the
  /// density moves by anything other than the local pair loss.
  std::vector<double> lossResidual;
  double maxLossResidual = kUndefined;
};

/// Integrates dn/dt = -2 Gamma2 g2(t) n^2 with classical RK4 from the first
/// recorded density, interpolating the recorded g2 linearly, and compares it
/// with the recorded density. The balance residual is evaluated while the
/// density exceeds `minDensity`.
DecayCheckReport densityDecayCheck(const ObservableSeries& series, const LatticeModel& model, int site,
                                   double minDensity = 0.0);

/// Strong-coupling estimate (1 - 1/N^2) 4 pi^2 / (3 |G|^2) of the local g2.
double tonksAsymptote(double gAbs, double nPh);

}  // namespace dtebd
