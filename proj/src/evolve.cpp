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

#include "dtebd/evolve.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

namespace dtebd {

namespace {

double maxAbs(const MatrixXc& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

int fourthRoot(Index n) {
  const auto d = static_cast<int>(std::lround(std::pow(static_cast<double>(n), 0.25)));
  if (static_cast<Index>(d) * d * d * d != n) throw std::invalid_argument("buildGates: generator size is not d^4");
  return d;
}

}  // namespace

MatrixXc expmTaylor(const MatrixXc& m) {
  const double norm = m.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.25) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.25)));
  const MatrixXc a = m / std::ldexp(1.0, squarings);
  MatrixXc sum = MatrixXc::Identity(m.rows(), m.cols());
  MatrixXc term = sum;
  for (int k = 1; k < 60; ++k) {
    term = (term * a) / static_cast<double>(k);
    sum += term;
    if (maxAbs(term) < 1e-20 * maxAbs(sum)) break;
  }
  for (int s = 0; s < squarings; ++s) sum = (sum * sum).eval();
  return sum;
}

GateSet buildGates(const std::vector<MatrixXc>& bondGenerators, double dt, int order) {
  if (!(dt > 0.0)) throw std::invalid_argument("buildGates: dt must be positive");
  if (order != 1 && order != 2) throw std::invalid_argument("buildGates: order must be 1 or 2");
  if (bondGenerators.empty()) throw std::invalid_argument("buildGates: no bonds");

  GateSet gs;
  gs.dt = dt;
  gs.order = order;
  gs.localDim = fourthRoot(bondGenerators.front().rows());
  const int d = gs.localDim;
  const Index d4 = bondGenerators.front().rows();

  // identical interior generators share their exponentials
  std::vector<std::size_t> rep(bondGenerators.size());
  std::vector<std::size_t> uniques;
  for (std::size_t b = 0; b < bondGenerators.size(); ++b) {
    if (bondGenerators[b].rows() != d4 || bondGenerators[b].cols() != d4) {
      throw std::invalid_argument("buildGates: inconsistent generator sizes");
    }
    rep[b] = b;
    for (auto u : uniques) {
      if ((bondGenerators[u] - bondGenerators[b]).cwiseAbs().maxCoeff() == 0.0) {
        rep[b] = u;
        break;
      }
    }
    if (rep[b] == b) uniques.push_back(b);
  }

  const VectorXc traceRow = [&] {
    VectorXc w = VectorXc::Zero(d4);
    for (Index i1 = 0; i1 < d; ++i1)
      for (Index i2 = 0; i2 < d; ++i2) w[((i1 * d + i1) * d + i2) * d + i2] = 1.0;
    return w;
  }();

  auto exponentiate = [&](const MatrixXc& siteMajor, double tau, bool verify) {
    const MatrixXc arg = siteMajor * tau;
    MatrixXc g = arg.exp();
    if (!g.allFinite()) throw NumericalError("buildGates: gate exponential overflowed");
    if (verify) {
      const MatrixXc ref = expmTaylor(arg);
      const double err = maxAbs(g - ref);
      if (err > 1e-12 * std::max(1.0, maxAbs(ref))) {
        std::ostringstream ss;
        ss << "buildGates: gate exponential disagrees with the Taylor reference by " << err;
        throw NumericalError(ss.str());
      }
    }
    const double leak = (traceRow.transpose() * g - traceRow.transpose()).cwiseAbs().maxCoeff();
    if (leak > 1e-10) {
      std::ostringstream ss;
      ss << "buildGates: gate does not preserve the trace (deviation " << leak << ")";
      throw NumericalError(ss.str());
    }
    return GateMatrix(g.sparseView(1.0, 0.0));
  };

  std::vector<GateMatrix> full(bondGenerators.size()), half(bondGenerators.size());
  bool verified = false;
  for (auto u : uniques) {
    const MatrixXc sm = superop::toSiteMajor(bondGenerators[u], d);
    full[u] = exponentiate(sm, dt, !verified);
    verified = true;
    if (order == 2 && u % 2 == 0) half[u] = exponentiate(sm, 0.5 * dt, false);
  }

  for (std::size_t b = 0; b < bondGenerators.size(); ++b) {
    const auto u = rep[b];
    if (b % 2 == 0) {
      gs.evenBonds.push_back(static_cast<int>(b));
      gs.evenFullGates.push_back(full[u]);
      if (order == 2 && u % 2 != 0) half[u] = exponentiate(superop::toSiteMajor(bondGenerators[u], d), 0.5 * dt, false);
      gs.evenGates.push_back(order == 2 ? half[u] : full[u]);
    } else {
      gs.oddBonds.push_back(static_cast<int>(b));
      gs.oddGates.push_back(full[u]);
    }
  }
  return gs;
}

double applyLayer(SuperketMPS& state, const std::vector<int>& bonds, const std::vector<GateMatrix>& gates) {
  if (bonds.size() != gates.size()) throw std::invalid_argument("applyLayer: bond/gate count mismatch");
  if (bonds.empty()) return 0.0;
  if (!state.isCanonical()) state.canonicalize();
  const int c = state.center();
  const bool ascending = std::abs(c - bonds.front()) <= std::abs(c - (bonds.back() + 1));
  double discard = 0.0;
  if (ascending) {
    for (std::size_t k = 0; k < bonds.size(); ++k) discard += state.applyGate(bonds[k], gates[k], SweepDirection::Right);
  } else {
    for (std::size_t k = bonds.size(); k-- > 0;) discard += state.applyGate(bonds[k], gates[k], SweepDirection::Left);
  }
  return discard;
}

namespace {

void checkDiscard(double discard, const StepOptions& options) {
  if (discard > options.abortDiscard) {
    std::ostringstream ss;
    ss << "Trotter step discarded weight " << discard << " above the abort threshold " << options.abortDiscard
       << "; increase chiMax";
    throw DiscardAbort(ss.str());
  }
}

StepReport finishStep(SuperketMPS& state, double discard, const StepOptions& options) {
  checkDiscard(discard, options);
  StepReport r;
  r.discard = discard;
  r.traceBefore = traceContraction(state);
  if (options.renormalize) r.factor = renormalize(state);
  return r;
}

}  // namespace

StepReport step(SuperketMPS& state, const GateSet& gates, const StepOptions& options) {
  if (gates.localDim != state.localDim()) throw std::invalid_argument("step: gate and state dimensions differ");
  double discard = applyLayer(state, gates.evenBonds, gates.evenGates);
  discard += applyLayer(state, gates.oddBonds, gates.oddGates);
  if (gates.order == 2) discard += applyLayer(state, gates.evenBonds, gates.evenGates);
  return finishStep(state, discard, options);
}

void EvolutionSchedule::validate() const {
  if (!(dt > 0.0)) throw std::invalid_argument("schedule: dt must be positive");
  if (!(tEnd >= tStart)) throw std::invalid_argument("schedule: tEnd must not precede tStart");
  if (!(timeUnit > 0.0)) throw std::invalid_argument("schedule: timeUnit must be positive");
  if (order != 1 && order != 2) throw std::invalid_argument("schedule: order must be 1 or 2");
  if (chiMax < 1) throw std::invalid_argument("schedule: chiMax must be positive");
  if (epsCut < 0.0) throw std::invalid_argument("schedule: epsCut must be non-negative");
  if (!std::is_sorted(recordTimes.begin(), recordTimes.end())) {
    throw std::invalid_argument("schedule: record times must be sorted");
  }
  auto onGrid = [&](double t) {
    const double n = (t - tStart) / dt;
    return std::abs(n - std::round(n)) <= 1e-9 * std::max(1.0, std::abs(n));
  };
  for (double t : recordTimes) {
    if (t < 0.0 || t > tEnd + 1e-12 * std::max(1.0, tEnd)) throw std::invalid_argument("schedule: record time outside [0, tEnd]");
    if (t >= tStart && !onGrid(t)) {
      std::ostringstream ss;
      ss << "schedule: record time " << t << " is not a multiple of dt = " << dt;
      throw std::invalid_argument(ss.str());
    }
  }
  if (!onGrid(tEnd)) throw std::invalid_argument("schedule: tEnd is not a multiple of dt");
}

long EvolutionSchedule::stepsTo(double t) const { return std::lround((t - tStart) / dt); }

RunResult run(SuperketMPS& state, const LatticeModel& model, const EvolutionSchedule& schedule, const Recorder& recorder,
              const RunOptions& options) {
  schedule.validate();
  if (state.nSites() != model.nSites || state.localDim() != model.localDim()) {
    throw std::invalid_argument("run: state does not match the model");
  }
  state.setPolicy(TruncationPolicy{schedule.chiMax, schedule.epsCut, options.svd});
  const double dtAbs = schedule.dt * schedule.timeUnit;
  const GateSet gates = buildGates(bondLiouvillians(model), dtAbs, schedule.order);

  RunResult result;
  const long nTotal = schedule.stepsTo(schedule.tEnd);
  std::set<long> recordSteps;
  for (double t : schedule.recordTimes) {
    if (t >= schedule.tStart - 1e-12 * std::max(1.0, schedule.tEnd)) recordSteps.insert(schedule.stepsTo(t));
  }
  auto timeAt = [&](long k) { return schedule.tStart + static_cast<double>(k) * schedule.dt; };
  auto record = [&](long k) { result.series.records.push_back(recorder(state, timeAt(k) * schedule.timeUnit)); };

  if (recordSteps.count(0)) record(0);

  std::set<long> boundaries(recordSteps.begin(), recordSteps.end());
  boundaries.insert(nTotal);
  boundaries.erase(0);

  const auto wallStart = std::chrono::steady_clock::now();
  long k = 0;
  double sinceRenorm = 0.0;
  auto stepDone = [&] {
    checkDiscard(sinceRenorm, options.step);
    const Complex tr = traceContraction(state);
    result.maxTraceDrift = std::max(result.maxTraceDrift, std::abs(tr - 1.0));
    if (options.step.renormalize) renormalize(state);
    sinceRenorm = 0.0;
    ++k;
    ++result.steps;
    if (options.progress && options.progressEvery > 0 && k % options.progressEvery == 0) {
      options.progress(ProgressInfo{k, timeAt(k), result.maxTraceDrift, state.maxBondDim(), state.cumulativeDiscard()});
    }
  };

  for (long boundary : boundaries) {
    if (boundary > nTotal) break;
    const long nSeg = boundary - k;
    if (nSeg <= 0) continue;
    if (gates.order == 2) {
      // Strang splitting with the half steps of consecutive steps fused
      sinceRenorm += applyLayer(state, gates.evenBonds, gates.evenGates);
      for (long i = 0; i < nSeg; ++i) {
        sinceRenorm += applyLayer(state, gates.oddBonds, gates.oddGates);
        const bool last = i + 1 == nSeg;
        sinceRenorm += applyLayer(state, gates.evenBonds, last ? gates.evenGates : gates.evenFullGates);
        stepDone();
      }
    } else {
      for (long i = 0; i < nSeg; ++i) {
        sinceRenorm += applyLayer(state, gates.evenBonds, gates.evenGates);
        sinceRenorm += applyLayer(state, gates.oddBonds, gates.oddGates);
        stepDone();
      }
    }
    if (recordSteps.count(boundary)) record(boundary);
    result.tReached = timeAt(k);
    if (options.wallClockSeconds > 0.0 && k < nTotal) {
      const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - wallStart).count();
      if (elapsed > options.wallClockSeconds) {
        result.status = RunStatus::WallClockExceeded;
        return result;
      }
    }
  }
  result.tReached = timeAt(k);
  return result;
}

double selfTestTimeStep(const SuperketMPS& initial, const LatticeModel& model, double dt, double tTest,
                        const TruncationPolicy& policy, int site, double tolerance, int maxHalvings) {
  if (!(dt > 0.0) || !(tTest > 0.0)) throw std::invalid_argument("selfTestTimeStep: dt and tTest must be positive");
  const auto generators = bondLiouvillians(model);
  const LocalOps ops = buildLocalOps(model.fockCutoff);

  auto evolve = [&](double h) {
    const long n = std::max(1L, std::lround(tTest / h));
    const GateSet gates = buildGates(generators, tTest / static_cast<double>(n), 2);
    SuperketMPS s = initial;
    s.setPolicy(policy);
    for (long i = 0; i < n; ++i) step(s, gates);
    TraceEnvironment env(s);
    const double tr = env.trace().real();
    const double n1 = env.local(site, ops.number).real() / tr;
    const double p2 = env.local(site, ops.pairDensity).real() / tr;
    return std::pair<double, double>{n1, n1 > 1e-8 ? p2 / (n1 * n1) : 0.0};
  };

  for (int h = 0; h < maxHalvings; ++h) {
    const auto coarse = evolve(dt);
    const auto fine = evolve(0.5 * dt);
    const double dn = std::abs(coarse.first - fine.first) / std::max(std::abs(fine.first), 1e-12);
    const double dg = std::abs(coarse.second - fine.second);
    if (std::max(dn, dg) <= tolerance) return dt;
    dt *= 0.5;
  }
  return dt;
}

}  // namespace dtebd
