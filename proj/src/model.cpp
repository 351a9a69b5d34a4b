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

#include "dtebd/model.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dtebd {

void PhysicalParams::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(hbar > 0.0, "physical.hbar must be positive");
  require(mass > 0.0, "physical.mass must be positive");
  require(boxLength > 0.0, "physical.boxLength must be positive");
  require(meanN0 > 0.0, "physical.meanN0 must be positive");
  require(diffusionD >= 0.0, "physical.diffusionD must be non-negative");
  require(gImag <= 0.0, "physical.gImag must be <= 0 (two-particle gain is not supported)");
  require(std::isfinite(gReal) && std::isfinite(gImag), "physical couplings must be finite");
}

LatticeModel buildLattice(const PhysicalParams& p, int nSites, int fockCutoff) {
  p.validate();
  if (nSites < 2) throw std::invalid_argument("buildLattice: nSites must be >= 2");
  if (fockCutoff < 1) throw std::invalid_argument("buildLattice: fockCutoff must be >= 1");

  LatticeModel m;
  m.nSites = nSites;
  m.fockCutoff = fockCutoff;
  m.hbar = p.hbar;
  m.deltaZ = p.boxLength / nSites;
  const double dz = m.deltaZ;
  m.J = p.hbar * p.hbar / (2.0 * p.mass * dz * dz);
  m.U = p.gReal / dz;
  m.gamma1 = p.diffusionD / (dz * dz);
  m.gamma2 = -p.gImag / (p.hbar * dz);
  return m;
}

LocalOps buildLocalOps(int fockCutoff) {
  if (fockCutoff < 1) throw std::invalid_argument("buildLocalOps: fockCutoff must be >= 1");
  const Index d = fockCutoff + 1;
  LocalOps ops;
  ops.annihilate = MatrixXc::Zero(d, d);
  for (Index k = 1; k < d; ++k) ops.annihilate(k - 1, k) = std::sqrt(static_cast<double>(k));
  ops.create = ops.annihilate.adjoint();
  ops.pairLoss = ops.annihilate * ops.annihilate;
  // diagonal ones set exactly, products of square roots round off
  ops.number = MatrixXc::Zero(d, d);
  ops.pairDensity = MatrixXc::Zero(d, d);
  for (Index k = 0; k < d; ++k) {
    ops.number(k, k) = static_cast<double>(k);
    ops.pairDensity(k, k) = static_cast<double>(k * (k - 1));
  }
  ops.identity = MatrixXc::Identity(d, d);
  return ops;
}

DimensionlessGroup dimensionlessGroups(const PhysicalParams& p, int nSites) {
  p.validate();
  if (nSites < 1) throw std::invalid_argument("dimensionlessGroups: nSites must be positive");
  const double g = p.couplingMagnitude();
  if (!(g > 0.0)) throw std::invalid_argument("dimensionlessGroups: coupling |g| must be nonzero");
  const double rho = p.density();
  DimensionlessGroup out;
  out.liebLinigerG = p.mass * g / (p.hbar * p.hbar * rho);
  out.tLoc = p.hbar / (g * rho);
  const double dz = p.boxLength / nSites;
  const double u = p.gReal / dz;
  const double hg2 = -p.gImag / dz;
  out.tauC = 2.0 * p.hbar / std::hypot(u, hg2);
  return out;
}

double collisionTime(const LatticeModel& m) {
  const double rate = std::hypot(m.U, m.hbar * m.gamma2);
  if (!(rate > 0.0)) throw std::invalid_argument("collisionTime: U and Gamma2 both vanish");
  return 2.0 * m.hbar / rate;
}

namespace superop {

MatrixXc leftRight(const MatrixXc& A, const MatrixXc& B) {
  return Eigen::kroneckerProduct(A, B.transpose()).eval();
}

MatrixXc commutator(const MatrixXc& H, double hbar) {
  const MatrixXc id = MatrixXc::Identity(H.rows(), H.cols());
  const Complex f(0.0, -1.0 / hbar);
  return f * (leftRight(H, id) - leftRight(id, H));
}

MatrixXc dissipator(const MatrixXc& X, double rate) {
  const MatrixXc id = MatrixXc::Identity(X.rows(), X.cols());
  const MatrixXc xdx = X.adjoint() * X;
  return -rate * (leftRight(xdx, id) + leftRight(id, xdx) - 2.0 * leftRight(X, X.adjoint()));
}

MatrixXc toSiteMajor(const MatrixXc& twoSite, int d) {
  const Index d4 = static_cast<Index>(d) * d * d * d;
  if (twoSite.rows() != d4 || twoSite.cols() != d4) {
    throw std::invalid_argument("toSiteMajor: expected a d^4 x d^4 superoperator");
  }
  // site-major index (i1 j1 i2 j2) -> row-major two-site index (i1 i2 j1 j2)
  std::vector<Index> map(static_cast<std::size_t>(d4));
  for (Index i1 = 0; i1 < d; ++i1)
    for (Index j1 = 0; j1 < d; ++j1)
      for (Index i2 = 0; i2 < d; ++i2)
        for (Index j2 = 0; j2 < d; ++j2) {
          const Index site = ((i1 * d + j1) * d + i2) * d + j2;
          const Index pair = ((i1 * d + i2) * d + j1) * d + j2;
          map[static_cast<std::size_t>(site)] = pair;
        }
  MatrixXc out(d4, d4);
  for (Index c = 0; c < d4; ++c)
    for (Index r = 0; r < d4; ++r) out(r, c) = twoSite(map[static_cast<std::size_t>(r)], map[static_cast<std::size_t>(c)]);
  return out;
}

VectorXc vectorize(const MatrixXc& rho) {
  VectorXc v(rho.size());
  for (Index i = 0; i < rho.rows(); ++i)
    for (Index j = 0; j < rho.cols(); ++j) v[i * rho.cols() + j] = rho(i, j);
  return v;
}

MatrixXc unvectorize(const VectorXc& v, Index dim) {
  if (v.size() != dim * dim) throw std::invalid_argument("unvectorize: size mismatch");
  MatrixXc rho(dim, dim);
  for (Index i = 0; i < dim; ++i)
    for (Index j = 0; j < dim; ++j) rho(i, j) = v[i * dim + j];
  return rho;
}

}  // namespace superop

std::vector<MatrixXc> bondLiouvillians(const LatticeModel& m) { return bondLiouvillians(m, TermMask{}); }

std::vector<MatrixXc> bondLiouvillians(const LatticeModel& m, const TermMask& mask) {
  if (m.nSites < 2) throw std::invalid_argument("bondLiouvillians: need at least two sites");
  std::vector<MatrixXc> out;
  out.reserve(static_cast<std::size_t>(m.bondCount()));
  for (int b = 0; b < m.bondCount(); ++b) out.push_back(bondLiouvillian(m, b, mask));
  return out;
}

MatrixXc bondLiouvillian(const LatticeModel& m, int b, const TermMask& mask) {
  if (m.nSites < 2) throw std::invalid_argument("bondLiouvillian: need at least two sites");
  if (b < 0 || b >= m.bondCount()) throw std::out_of_range("bondLiouvillian: bond out of range");
  const LocalOps ops = buildLocalOps(m.fockCutoff);
  const MatrixXc& id = ops.identity;
  auto left = [&](const MatrixXc& o) { return Eigen::kroneckerProduct(o, id).eval(); };
  auto right = [&](const MatrixXc& o) { return Eigen::kroneckerProduct(id, o).eval(); };

  const MatrixXc a1 = left(ops.annihilate), a2 = right(ops.annihilate);
  const MatrixXc c1 = left(ops.create), c2 = right(ops.create);
  const MatrixXc n1 = left(ops.number), n2 = right(ops.number);
  const MatrixXc p1 = left(ops.pairDensity), p2 = right(ops.pairDensity);
  const MatrixXc aa1 = left(ops.pairLoss), aa2 = right(ops.pairLoss);
  const Index dim = n1.rows();
  const MatrixXc id2 = MatrixXc::Identity(dim, dim);

  using superop::commutator;
  using superop::dissipator;
  using superop::leftRight;

  auto onsiteWeight = [&](int site) { return (site == 0 || site == m.nSites - 1) ? 1.0 : 0.5; };
  const double w1 = onsiteWeight(b), w2 = onsiteWeight(b + 1);

  MatrixXc h = MatrixXc::Zero(dim, dim);
  if (mask.hamiltonianOnsite) {
    h += w1 * (2.0 * m.J * n1 + 0.5 * m.U * p1) + w2 * (2.0 * m.J * n2 + 0.5 * m.U * p2);
  }
  if (mask.hopping) h -= m.J * (a1 * c2 + a2 * c1);

  MatrixXc gen = commutator(h, m.hbar);
  if (mask.diffusion && m.gamma1 != 0.0) {
    gen += w1 * dissipator(a1, m.gamma1) + w2 * dissipator(a2, m.gamma1);
    // nearest-neighbour lines of the diffusion dissipator
    const MatrixXc c1a2 = c1 * a2;
    const MatrixXc a1c2 = a1 * c2;
    gen += 0.5 * m.gamma1 * (leftRight(c1a2, id2) + leftRight(id2, c1a2) - 2.0 * leftRight(a2, c1));
    gen += 0.5 * m.gamma1 * (leftRight(a1c2, id2) + leftRight(id2, a1c2) - 2.0 * leftRight(a1, c2));
  }
  if (mask.pairLoss && m.gamma2 != 0.0) {
    gen += w1 * dissipator(aa1, 0.5 * m.gamma2) + w2 * dissipator(aa2, 0.5 * m.gamma2);
  }
  return gen;
}

}  // namespace dtebd
