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
#include "dtebd/observables.hpp"
#include "dtebd/superket.hpp"

#include <functional>
#include <vector>

namespace dtebd {

/// Propagators for one Trotter step.
///
/// Order 1 applies exp(G dt) on even bonds, then on odd bonds. Order 2 applies
/// exp(G dt/2) on even bonds, exp(G dt) on odd bonds, exp(G dt/2) on even
/// bonds; `evenFullGates` holds exp(G dt) on even bonds so that consecutive
/// half steps can be fused.
struct GateSet {
  double dt = 0.0;
  int order = 2;
  int localDim = 0;
  std::vector<int> evenBonds, oddBonds;
  std::vector<GateMatrix> evenGates;
  std::vector<GateMatrix> oddGates;
  std::vector<GateMatrix> evenFullGates;
};

/// Builds the gates from bond generators given in the two-site (i1 i2),(j1 j2)
/// convention of `bondLiouvillians`.
GateSet buildGates(const std::vector<MatrixXc>& bondGenerators, double dt, int order);

/// exp(M) by Taylor series with scaling and squaring; the independent check on
/// the gate exponentials.
MatrixXc expmTaylor(const MatrixXc& m);

struct StepOptions {
  double abortDiscard = 1e-2;
  bool renormalize = true;
};

struct StepReport {
  Complex traceBefore{1.0, 0.0};
  double discard = 0.0;
  Complex factor{1.0, 0.0};
};

/// Raised when a single Trotter step discards more weight than allowed.
class DiscardAbort : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

/// Applies the gates of one layer; returns the summed discarded weight.
double applyLayer(SuperketMPS& state, const std::vector<int>& bonds, const std::vector<GateMatrix>& gates);

/// One full Trotter step followed by trace renormalization.
StepReport step(SuperketMPS& state, const GateSet& gates, const StepOptions& options = {});

struct EvolutionSchedule {
  double tStart = 0.0;
  double tEnd = 0.0;
  double dt = 1e-3;
  std::vector<double> recordTimes;
  double timeUnit = 1.0;  ///< absolute duration of one schedule time unit (tau_c for experiments)
  int order = 2;
  Index chiMax = 40;
  double epsCut = 1e-12;

  void validate() const;
  long stepsTo(double t) const;
};

struct ProgressInfo {
  long step = 0;
  double time = 0.0;        ///< in schedule units
  double traceDrift = 0.0;  ///< largest |Tr - 1| before renormalization so far
  Index maxBond = 1;
  double cumulativeDiscard = 0.0;
};

enum class RunStatus { Completed, WallClockExceeded };

struct RunOptions {
  StepOptions step{};
  double wallClockSeconds = 0.0;  ///< 0 disables the budget
  long progressEvery = 0;         ///< 0 disables progress callbacks
  std::function<void(const ProgressInfo&)> progress;
  SvdOptions svd{};
};

struct RunResult {
  ObservableSeries series;
  RunStatus status = RunStatus::Completed;
  double tReached = 0.0;  ///< schedule units
  long steps = 0;
  double maxTraceDrift = 0.0;
};

using Recorder = std::function<ObservableRecord(const SuperketMPS&, double absoluteTime)>;

/// Evolves `state` from schedule.tStart to schedule.tEnd, calling `recorder`
/// at each record time. Record times falling before tStart are skipped.
RunResult run(SuperketMPS& state, const LatticeModel& model, const EvolutionSchedule& schedule,
              const Recorder& recorder, const RunOptions& options = {});

/// Halves dt while evolving to `tTest` with dt and dt/2 disagrees by more than
/// `tolerance` on the density and local g2 at `site`. Returns the accepted dt
/// (absolute units).
double selfTestTimeStep(const SuperketMPS& initial, const LatticeModel& model, double dt, double tTest,
                        const TruncationPolicy& policy, int site, double tolerance, int maxHalvings = 4);

}  // namespace dtebd
