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

#include "dtebd/evolve.hpp"
#include "dtebd/oracle.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include <cmath>

using namespace dtebd;

namespace {

LatticeModel chain(int n, int cutoff) {
  LatticeModel m;
  m.nSites = n;
  m.fockCutoff = cutoff;
  m.J = 1.0;
  m.U = 0.3;
  m.gamma1 = 0.1;
  m.gamma2 = 0.4;
  return m;
}

TruncationPolicy exact() {
  TruncationPolicy p;
  p.chiMax = 512;
  p.epsCut = 0.0;
  return p;
}

std::vector<MatrixXc> coherentLocals(const std::vector<Complex>& amps, int cutoff) {
  std::vector<MatrixXc> out;
  for (Complex c : amps) out.push_back(truncatedCoherentState(c, cutoff));
  return out;
}

Recorder densityRecorder(const LatticeModel& m) {
  const LocalOps ops = buildLocalOps(m.fockCutoff);
  return [ops](const SuperketMPS& s, double t) {
    ObservableRecord r;
    r.time = t;
    for (int l = 0; l < s.nSites(); ++l) r.density.push_back(localExpectation(s, l, ops.number).real());
    return r;
  };
}

// largest density error against the dense oracle over the recorded times
double oracleError(const LatticeModel& m, const std::vector<Complex>& amps, double dt, int order, double tEnd) {
  const std::vector<MatrixXc> local = coherentLocals(amps, m.fockCutoff);
  SuperketMPS s = SuperketMPS::product(local, exact());
  EvolutionSchedule sch;
  sch.tEnd = tEnd;
  sch.dt = dt;
  sch.order = order;
  sch.chiMax = 512;
  sch.epsCut = 0.0;
  sch.recordTimes = {0.5 * tEnd, tEnd};
  const RunResult r = run(s, m, sch, densityRecorder(m));
  const DenseLiouvillian L = assembleDense(m);
  const MatrixXc rho0 = productDensityMatrix(local);
  const LocalOps ops = buildLocalOps(m.fockCutoff);
  double err = 0.0;
  for (const auto& rec : r.series.records) {
    const MatrixXc rho = propagateDense(L, rho0, rec.time);
    for (int l = 0; l < m.nSites; ++l) {
      const double ref = denseExpectation(rho, embedSiteOperator(ops.number, l, m.nSites)).real();
      err = std::max(err, std::abs(rec.density[l] - ref));
    }
  }
  return err;
}

}  // namespace

TEST_CASE("Taylor exponential matches Eigen") {
  std::srand(7);
  const MatrixXc a = MatrixXc::Random(12, 12) * 3.0;
  const MatrixXc ref = a.exp();
  CHECK((expmTaylor(a) - ref).cwiseAbs().maxCoeff() < 1e-12 * ref.cwiseAbs().maxCoeff());
  CHECK((expmTaylor(MatrixXc::Zero(4, 4)) - MatrixXc::Identity(4, 4)).norm() == 0.0);
}

TEST_CASE("gate construction") {
  LatticeModel zero;
  zero.nSites = 4;
  zero.fockCutoff = 2;
  const GateSet g0 = buildGates(bondLiouvillians(zero), 0.1, 2);
  CHECK(g0.evenBonds == std::vector<int>{0, 2});
  CHECK(g0.oddBonds == std::vector<int>{1});
  for (const auto& g : g0.oddGates) CHECK((MatrixXc(g) - MatrixXc::Identity(81, 81)).norm() == 0.0);

  const LatticeModel m = chain(4, 2);
  const GateSet a = buildGates(bondLiouvillians(m), 0.05, 1);
  const GateSet b = buildGates(bondLiouvillians(m), 0.10, 1);
  const MatrixXc sq = MatrixXc(a.oddGates[0]) * MatrixXc(a.oddGates[0]);
  CHECK((sq - MatrixXc(b.oddGates[0])).cwiseAbs().maxCoeff() < 1e-12);

  // second order: even layer carries half steps plus the fused full steps
  const GateSet c = buildGates(bondLiouvillians(m), 0.10, 2);
  const MatrixXc half = MatrixXc(c.evenGates[0]);
  CHECK((half * half - MatrixXc(c.evenFullGates[0])).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((MatrixXc(c.evenFullGates[0]) - MatrixXc(b.evenGates[0])).cwiseAbs().maxCoeff() < 1e-12);

  // every gate keeps the trace row
  const int d = 3;
  Eigen::RowVectorXcd tr = Eigen::RowVectorXcd::Zero(81);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) tr((i * d + i) * 9 + k * d + k) = 1.0;
  for (const auto& g : c.oddGates) CHECK((tr * MatrixXc(g) - tr).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("trace is preserved without renormalization") {
  const LatticeModel m = chain(5, 2);
  SuperketMPS s = SuperketMPS::product(coherentLocals({0.3, 0.5, 0.6, 0.5, 0.3}, 2), exact());
  const GateSet g = buildGates(bondLiouvillians(m), 0.02, 2);
  StepOptions opt;
  opt.renormalize = false;
  for (int k = 0; k < 20; ++k) step(s, g, opt);
  CHECK(std::abs(traceContraction(s) - Complex(1.0)) < 1e-10);
}

TEST_CASE("pair loss of a single occupied mode") {
  // one site as a two-site chain with an empty partner and no coupling
  LatticeModel m;
  m.nSites = 2;
  m.fockCutoff = 2;
  m.gamma2 = 0.7;
  MatrixXc two = MatrixXc::Zero(3, 3);
  two(2, 2) = 1.0;
  MatrixXc vac = MatrixXc::Zero(3, 3);
  vac(0, 0) = 1.0;
  std::vector<MatrixXc> local{two, vac};
  SuperketMPS s = SuperketMPS::product(local, exact());
  EvolutionSchedule sch;
  sch.tEnd = 2.0;
  sch.dt = 0.01;
  sch.recordTimes = {0.5, 1.0, 2.0};
  const RunResult r = run(s, m, sch, densityRecorder(m));
  REQUIRE(r.series.records.size() == 3);
  for (const auto& rec : r.series.records) {
    CHECK(rec.density[0] == doctest::Approx(2.0 * std::exp(-2.0 * m.gamma2 * rec.time)).epsilon(1e-10));
    CHECK(std::abs(rec.density[1]) < 1e-14);
  }
}

TEST_CASE("three sites against the dense oracle") {
  const LatticeModel m = chain(3, 2);
  const std::vector<Complex> amps{0.3, Complex(0.4, 0.2), 0.2};
  const double e1 = oracleError(m, amps, 0.02, 2, 1.0);
  const double e2 = oracleError(m, amps, 0.01, 2, 1.0);
  CHECK(e1 < 1e-4);
  CHECK(e1 / e2 == doctest::Approx(4.0).epsilon(0.1));
  const double f1 = oracleError(m, amps, 0.02, 1, 1.0);
  const double f2 = oracleError(m, amps, 0.01, 1, 1.0);
  CHECK(f1 / f2 == doctest::Approx(2.0).epsilon(0.1));
  CHECK(e2 < f2);
}

TEST_CASE("schedule checks") {
  EvolutionSchedule s;
  s.tEnd = 1.0;
  s.dt = 0.1;
  s.recordTimes = {0.0, 0.5, 1.0};
  CHECK_NOTHROW(s.validate());
  CHECK(s.stepsTo(0.5) == 5);
  s.recordTimes = {0.6};
  CHECK_NOTHROW(s.validate());
  s.recordTimes = {0.525};
  CHECK_THROWS(s.validate());
  s.recordTimes = {};
  s.tEnd = 1.05;
  CHECK_THROWS(s.validate());
  s.tEnd = 1.0;
  s.dt = -0.1;
  CHECK_THROWS(s.validate());
}

TEST_CASE("wall clock budget stops at a record point") {
  const LatticeModel m = chain(4, 2);
  SuperketMPS s = SuperketMPS::product(coherentLocals({0.3, 0.5, 0.5, 0.3}, 2), exact());
  EvolutionSchedule sch;
  sch.tEnd = 1.0;
  sch.dt = 0.01;
  sch.recordTimes = {0.1, 0.2, 0.5, 1.0};
  RunOptions opt;
  opt.wallClockSeconds = 1e-9;
  int calls = 0;
  opt.progressEvery = 2;
  opt.progress = [&](const ProgressInfo&) { ++calls; };
  const RunResult r = run(s, m, sch, densityRecorder(m), opt);
  CHECK(r.status == RunStatus::WallClockExceeded);
  CHECK(r.tReached == doctest::Approx(0.1));
  CHECK(r.steps == 10);
  CHECK(r.series.records.size() == 1);
  CHECK(calls == 5);
}

TEST_CASE("excess discarded weight aborts") {
  const LatticeModel m = chain(4, 2);
  SuperketMPS s = SuperketMPS::product(coherentLocals({0.3, 0.5, 0.5, 0.3}, 2), exact());
  EvolutionSchedule sch;
  sch.tEnd = 1.0;
  sch.dt = 0.05;
  sch.chiMax = 1;
  RunOptions opt;
  opt.step.abortDiscard = 1e-12;
  CHECK_THROWS_AS(run(s, m, sch, densityRecorder(m), opt), DiscardAbort);
}

TEST_CASE("time step self test") {
  const LatticeModel m = chain(3, 2);
  const SuperketMPS s = SuperketMPS::product(coherentLocals({0.3, 0.5, 0.3}, 2), exact());
  const double loose = selfTestTimeStep(s, m, 0.05, 0.2, exact(), 1, 1e-2);
  CHECK(loose == 0.05);
  const double tight = selfTestTimeStep(s, m, 0.1, 0.4, exact(), 1, 1e-7, 3);
  CHECK(tight < 0.1);
}
