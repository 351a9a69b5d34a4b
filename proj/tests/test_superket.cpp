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
#include "dtebd/superket.hpp"

#include <cstring>
#include <sstream>

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

MatrixXc randomDensity(int d, unsigned seed) {
  std::srand(seed);
  const MatrixXc a = MatrixXc::Random(d, d);
  MatrixXc rho = a * a.adjoint();
  return rho / rho.trace();
}

TruncationPolicy exact(Index chi = 512) {
  TruncationPolicy p;
  p.chiMax = chi;
  p.epsCut = 0.0;
  return p;
}

// a few full steps so the state carries correlations
SuperketMPS evolved(const LatticeModel& m, std::vector<MatrixXc>& local, int steps, double dt) {
  SuperketMPS s = SuperketMPS::product(local, exact());
  const GateSet g = buildGates(bondLiouvillians(m), dt, 2);
  for (int k = 0; k < steps; ++k) step(s, g);
  return s;
}

double maxAbs(const MatrixXc& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("trace vector and observable weights") {
  const int d = 3;
  const MatrixXc rho = randomDensity(d, 3);
  const VectorXc v = superop::vectorize(rho);
  CHECK(std::abs(traceVector(d).dot(v) - Complex(1.0)) < 1e-14);
  const MatrixXc op = MatrixXc::Random(d, d);
  // weights are used without conjugation
  const Complex viaWeights = (observableWeights(op).transpose() * v)(0);
  CHECK(std::abs(viaWeights - (rho * op).trace()) < 1e-13);
}

TEST_CASE("product state holds the local matrices") {
  const int d = 3;
  std::vector<MatrixXc> local{randomDensity(d, 1), randomDensity(d, 2), randomDensity(d, 4)};
  const SuperketMPS s = SuperketMPS::product(local, exact());
  CHECK(s.nSites() == 3);
  CHECK(s.superDim() == 9);
  CHECK(s.maxBondDim() == 1);
  CHECK(std::abs(traceContraction(s) - Complex(1.0)) < 1e-13);
  const MatrixXc dense = toDenseDensityMatrix(s);
  CHECK(maxAbs(dense - productDensityMatrix(local)) < 1e-13);
  const LocalOps ops = buildLocalOps(d - 1);
  for (int l = 0; l < 3; ++l)
    CHECK(std::abs(localExpectation(s, l, ops.number) - (local[l] * ops.number).trace()) < 1e-13);
  CHECK(superketNormSquared(s) ==
        doctest::Approx(((local[0] * local[0]).trace() * (local[1] * local[1]).trace() *
                         (local[2] * local[2]).trace()).real()).epsilon(1e-12));
}

TEST_CASE("coherent product state") {
  LatticeModel m = chain(4, 3);
  const std::vector<Complex> amps{0.1, Complex(0.0, 0.2), 0.3, 0.0};
  const SuperketMPS s = coherentProductState(amps, m, exact());
  CHECK(std::abs(traceContraction(s) - Complex(1.0)) < 1e-13);
  const LocalOps ops = buildLocalOps(3);
  for (int l = 0; l < 4; ++l) {
    const double x = std::norm(amps[l]);
    const Complex n = localExpectation(s, l, ops.number);
    CHECK(std::abs(n.imag()) < 1e-14);
    CHECK(n.real() == doctest::Approx(x).epsilon(1e-3));
    CHECK(localExpectation(s, l, ops.pairDensity).real() == doctest::Approx(x * x).epsilon(1e-3));
  }
  // a coherent state is pure
  CHECK(superketNormSquared(s) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(coherentTailWeight(0.0, 3) == 0.0);
  CHECK(coherentTailWeight(2.5, 3) > 0.2);
  CHECK_THROWS(coherentProductState(std::vector<Complex>{1.0, 2.0, 0.1, 0.1}, m, exact()));
  const MatrixXc rho = truncatedCoherentState(Complex(0.5, 0.5), 3);
  CHECK(std::abs(rho.trace() - Complex(1.0)) < 1e-14);
  CHECK(maxAbs(rho - rho.adjoint()) < 1e-15);
}

TEST_CASE("expectations agree with the dense reconstruction") {
  const LatticeModel m = chain(3, 2);
  std::vector<MatrixXc> local{randomDensity(3, 5), randomDensity(3, 6), randomDensity(3, 7)};
  SuperketMPS s = evolved(m, local, 5, 0.05);
  CHECK(s.maxBondDim() > 1);
  const MatrixXc rho = toDenseDensityMatrix(s);
  const Complex tr = rho.trace();
  CHECK(std::abs(tr - Complex(1.0)) < 1e-12);
  const LocalOps ops = buildLocalOps(2);
  const MatrixXc a = MatrixXc::Random(3, 3), b = MatrixXc::Random(3, 3);
  for (int l = 0; l < 3; ++l) {
    const Complex ref = denseExpectation(rho, embedSiteOperator(a, l, 3));
    CHECK(std::abs(localExpectation(s, l, a) - ref) < 1e-12);
  }
  const SparseMatrixXc ab = embedSiteOperator(a, 0, 3) * embedSiteOperator(b, 2, 3);
  CHECK(std::abs(twoSiteExpectation(s, 0, a, 2, b) - denseExpectation(rho, ab)) < 1e-12);
  const SparseMatrixXc nn = embedSiteOperator(ops.number, 1, 3) * embedSiteOperator(ops.number, 2, 3);
  CHECK(std::abs(twoSiteExpectation(s, 1, ops.number, 2, ops.number) - denseExpectation(rho, nn)) < 1e-12);

  // reduced matrix of (0,1) from a partial trace over site 2
  MatrixXc red = MatrixXc::Zero(9, 9);
  for (int i = 0; i < 9; ++i)
    for (int j = 0; j < 9; ++j)
      for (int k = 0; k < 3; ++k) red(i, j) += rho(i * 3 + k, j * 3 + k);
  CHECK(maxAbs(reducedDensityMatrix(s, 0) - red / red.trace()) < 1e-12);

  // the cached environment gives the same numbers
  const TraceEnvironment env(s);
  CHECK(std::abs(env.trace() - traceContraction(s)) < 1e-13);
  CHECK(std::abs(env.pair(0, a, 2, b) - twoSiteExpectation(s, 0, a, 2, b) * env.trace()) < 1e-12);
  const VectorXc row = env.row(1, ops.number, ops.pairDensity);
  CHECK(std::abs(row(1) - localExpectation(s, 1, ops.pairDensity) * env.trace()) < 1e-12);
  CHECK(std::abs(row(0) - twoSiteExpectation(s, 1, ops.number, 0, ops.number) * env.trace()) < 1e-12);
}

TEST_CASE("gauge freedom and center moves leave the state unchanged") {
  const LatticeModel m = chain(4, 2);
  std::vector<MatrixXc> local{randomDensity(3, 8), randomDensity(3, 9), randomDensity(3, 10), randomDensity(3, 11)};
  SuperketMPS s = evolved(m, local, 4, 0.05);
  const MatrixXc before = toDenseDensityMatrix(s);
  CHECK(s.canonicalResidual() < 1e-10);

  s.moveCenterTo(3);
  CHECK(s.center() == 3);
  CHECK(s.canonicalResidual() < 1e-10);
  CHECK(maxAbs(toDenseDensityMatrix(s) - before) < 1e-12);
  s.moveCenterTo(0);
  CHECK(maxAbs(toDenseDensityMatrix(s) - before) < 1e-12);

  const Index chi = s.bondDim(1);
  std::srand(12);
  const MatrixXc x = MatrixXc::Identity(chi, chi) + 0.3 * MatrixXc::Random(chi, chi);
  s.applyGauge(1, x);
  CHECK_FALSE(s.isCanonical());
  CHECK(maxAbs(toDenseDensityMatrix(s) - before) < 1e-11);
  s.canonicalize();
  CHECK(s.isCanonical());
  CHECK(s.canonicalResidual() < 1e-10);
  CHECK(maxAbs(toDenseDensityMatrix(s) - before) < 1e-11);
}

TEST_CASE("gates against the dense propagator") {
  const LatticeModel m = chain(3, 2);
  std::vector<MatrixXc> local{randomDensity(3, 13), randomDensity(3, 14), randomDensity(3, 15)};
  SuperketMPS s = SuperketMPS::product(local, exact());
  const GateSet g = buildGates(bondLiouvillians(m), 0.01, 2);

  // identity gate does nothing
  const Index dd = 81;
  GateMatrix id(dd, dd);
  id.setIdentity();
  const MatrixXc before = toDenseDensityMatrix(s);
  CHECK(applyBondGate(s, 0, id) == doctest::Approx(0.0));
  CHECK(maxAbs(toDenseDensityMatrix(s) - before) < 1e-13);
  CHECK(s.maxBondDim() == 1);

  // on-site only evolution keeps the bond at 1
  LatticeModel onsite = m;
  onsite.J = 0.0;
  onsite.gamma1 = 0.0;
  const GateSet og = buildGates(bondLiouvillians(onsite), 0.1, 2);
  SuperketMPS t = SuperketMPS::product(local, exact());
  for (int k = 0; k < 3; ++k) step(t, og);
  CHECK(t.maxBondDim() == 1);

  // a single bond gate against the dense propagator on two sites
  LatticeModel pair = chain(2, 2);
  std::vector<MatrixXc> two{local[0], local[1]};
  SuperketMPS u = SuperketMPS::product(two, exact());
  const MatrixXc gate = expmTaylor(superop::toSiteMajor(bondLiouvillian(pair, 0), 3) * 0.2);
  applyBondGate(u, 0, gate);
  CHECK(u.bondDim(0) > 1);
  const MatrixXc ref = propagateDense(embedBondGenerators(pair), productDensityMatrix(two), 0.2);
  CHECK(maxAbs(toDenseDensityMatrix(u) - ref) < 1e-11);
}

TEST_CASE("scale and renormalize") {
  std::vector<MatrixXc> local{randomDensity(2, 1), randomDensity(2, 2)};
  SuperketMPS s = SuperketMPS::product(local, exact());
  s.scale(0.5);
  CHECK(std::abs(traceContraction(s) - Complex(0.5)) < 1e-14);
  const Complex f = renormalize(s);
  CHECK(std::abs(f - Complex(2.0)) < 1e-13);
  CHECK(std::abs(traceContraction(s) - Complex(1.0)) < 1e-14);
}

TEST_CASE("checkpoint round trip is bit exact") {
  const LatticeModel m = chain(4, 2);
  std::vector<MatrixXc> local{randomDensity(3, 21), randomDensity(3, 22), randomDensity(3, 23), randomDensity(3, 24)};
  SuperketMPS s = evolved(m, local, 3, 0.05);
  std::stringstream buf;
  writeState(buf, s, "{\"k\":1}");
  std::string meta;
  const SuperketMPS r = readState(buf, meta);
  CHECK(meta == "{\"k\":1}");
  REQUIRE(r.nSites() == s.nSites());
  CHECK(r.center() == s.center());
  CHECK(r.cumulativeDiscard() == s.cumulativeDiscard());
  for (int l = 0; l < s.nSites(); ++l) {
    const Tensor& a = s.site(l);
    const Tensor& b = r.site(l);
    REQUIRE(a.size() == b.size());
    CHECK(std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(Complex)) == 0);
  }
  for (std::size_t b = 0; b < s.weights().size(); ++b) {
    REQUIRE(s.weights()[b].size() == r.weights()[b].size());
    CHECK(std::memcmp(s.weights()[b].data(), r.weights()[b].data(), s.weights()[b].size() * sizeof(double)) == 0);
  }
  // identical continuation
  SuperketMPS a = s, b = r;
  const GateSet g = buildGates(bondLiouvillians(m), 0.05, 2);
  step(a, g);
  step(b, g);
  CHECK(maxAbs(toDenseDensityMatrix(a) - toDenseDensityMatrix(b)) == 0.0);

  std::stringstream junk("not a checkpoint at all");
  CHECK_THROWS(readState(junk, meta));
  std::stringstream again;
  writeState(again, s, "x");
  std::string full = again.str();
  std::stringstream cut(full.substr(0, full.size() / 2));
  CHECK_THROWS(readState(cut, meta));
}

TEST_CASE("tiny occupations at a high cutoff") {
  // site matrices spanning many decades once used to break the SVD
  LatticeModel m;
  m.nSites = 2;
  m.fockCutoff = 5;
  m.J = 1.0;
  m.gamma1 = 0.1;
  const std::vector<Complex> amps{std::polar(std::sqrt(1e-3), 0.0), std::polar(std::sqrt(1.3e-3), 0.7)};
  TruncationPolicy p;
  p.chiMax = 64;
  SuperketMPS s = coherentProductState(amps, m, p);
  const GateSet g = buildGates(bondLiouvillians(m), 0.01, 2);
  for (int k = 0; k < 5; ++k) CHECK_NOTHROW(step(s, g));
  CHECK(std::abs(traceContraction(s) - Complex(1.0)) < 1e-12);
}
