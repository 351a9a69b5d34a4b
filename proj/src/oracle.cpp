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

#include "dtebd/oracle.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dtebd {

namespace {

SparseMatrixXc sparseIdentity(Index n) {
  SparseMatrixXc id(n, n);
  id.setIdentity();
  return id;
}

Index checkedHilbert(int nSites, int d) {
  Index h = 1;
  for (int l = 0; l < nSites; ++l) h *= d;
  if (h * h > kMaxOracleDimension) {
    std::ostringstream ss;
    ss << "oracle: superoperator dimension " << h * h << " exceeds " << kMaxOracleDimension;
    throw std::invalid_argument(ss.str());
  }
  return h;
}

// A rho B  ->  (A (x) B^T) vec(rho)
SparseMatrixXc lr(const SparseMatrixXc& a, const SparseMatrixXc& b) {
  return Eigen::kroneckerProduct(a, SparseMatrixXc(b.transpose()));
}

}  // namespace

SparseMatrixXc embedSiteOperator(const MatrixXc& op, int site, int nSites) {
  if (site < 0 || site >= nSites) throw std::out_of_range("embedSiteOperator: site out of range");
  const Index d = op.rows();
  SparseMatrixXc out = sparseIdentity(1);
  for (int l = 0; l < nSites; ++l) {
    const SparseMatrixXc f = l == site ? SparseMatrixXc(op.sparseView(1.0, 0.0)) : sparseIdentity(d);
    out = Eigen::kroneckerProduct(out, f).eval();
  }
  return out;
}

DenseLiouvillian assembleDense(const LatticeModel& m) {
  const int d = m.localDim();
  const Index h = checkedHilbert(m.nSites, d);
  const LocalOps ops = buildLocalOps(m.fockCutoff);
  const Complex i{0.0, 1.0};

  std::vector<SparseMatrixXc> a, c;
  for (int l = 0; l < m.nSites; ++l) {
    a.push_back(embedSiteOperator(ops.annihilate, l, m.nSites));
    c.push_back(embedSiteOperator(ops.create, l, m.nSites));
  }
  const SparseMatrixXc id = sparseIdentity(h);

  SparseMatrixXc ham(h, h);
  for (int l = 0; l < m.nSites; ++l) {
    ham += 2.0 * m.J * (c[l] * a[l]);
    ham += 0.5 * m.U * (c[l] * c[l] * a[l] * a[l]);
  }
  for (int l = 0; l + 1 < m.nSites; ++l) ham -= m.J * (a[l] * c[l + 1] + a[l + 1] * c[l]);

  SparseMatrixXc gen = (-i / m.hbar) * (lr(ham, id) - lr(id, ham));

  for (int l = 0; l < m.nSites; ++l) {
    const SparseMatrixXc n = c[l] * a[l];
    gen -= m.gamma1 * (lr(n, id) + lr(id, n) - 2.0 * lr(a[l], c[l]));
    const SparseMatrixXc aa = a[l] * a[l];
    const SparseMatrixXc cc = c[l] * c[l];
    const SparseMatrixXc p = cc * aa;
    gen -= 0.5 * m.gamma2 * (lr(p, id) + lr(id, p) - 2.0 * lr(aa, cc));
  }
  for (int l = 0; l + 1 < m.nSites; ++l) {
    const SparseMatrixXc x = c[l] * a[l + 1];
    gen += 0.5 * m.gamma1 * (lr(x, id) + lr(id, x) - 2.0 * lr(a[l + 1], c[l]));
    const SparseMatrixXc y = a[l] * c[l + 1];
    gen += 0.5 * m.gamma1 * (lr(y, id) + lr(id, y) - 2.0 * lr(a[l], c[l + 1]));
  }
  gen.prune(Complex(0.0, 0.0));
  return DenseLiouvillian{m.nSites, d, h, gen};
}

DenseLiouvillian embedBondGenerators(const LatticeModel& m) {
  const int d = m.localDim();
  const Index h = checkedHilbert(m.nSites, d);
  const auto gens = bondLiouvillians(m);
  std::vector<Eigen::Triplet<Complex>> trip;

  // digits of a Hilbert index, site 0 most significant
  auto digit = [&](Index idx, int site) {
    for (int l = m.nSites - 1; l > site; --l) idx /= d;
    return idx % d;
  };
  auto withPair = [&](Index idx, int b, Index s1, Index s2) {
    Index stride = 1;
    for (int l = m.nSites - 1; l > b + 1; --l) stride *= d;
    idx -= (digit(idx, b) * d + digit(idx, b + 1)) * stride;
    return idx + (s1 * d + s2) * stride;
  };

  const Index d2 = static_cast<Index>(d) * d;
  for (int b = 0; b < m.bondCount(); ++b) {
    const MatrixXc& g = gens[static_cast<std::size_t>(b)];
    for (Index row = 0; row < h * h; ++row) {
      const Index bigI = row / h, bigJ = row % h;
      const Index ri = digit(bigI, b) * d + digit(bigI, b + 1);
      const Index rj = digit(bigJ, b) * d + digit(bigJ, b + 1);
      const Index gRow = ri * d2 + rj;
      for (Index ci = 0; ci < d2; ++ci) {
        for (Index cj = 0; cj < d2; ++cj) {
          const Complex v = g(gRow, ci * d2 + cj);
          if (v == Complex(0.0, 0.0)) continue;
          const Index colI = withPair(bigI, b, ci / d, ci % d);
          const Index colJ = withPair(bigJ, b, cj / d, cj % d);
          trip.emplace_back(row, colI * h + colJ, v);
        }
      }
    }
  }
  SparseMatrixXc gen(h * h, h * h);
  gen.setFromTriplets(trip.begin(), trip.end());
  return DenseLiouvillian{m.nSites, d, h, gen};
}

MatrixXc propagateDense(const DenseLiouvillian& l, const MatrixXc& rho0, double t, double tolerance) {
  const Index h = l.hilbertDim;
  if (rho0.rows() != h || rho0.cols() != h) throw std::invalid_argument("propagateDense: dimension mismatch");
  if (!(t >= 0.0)) throw std::invalid_argument("propagateDense: t must be non-negative");

  VectorXc v(h * h);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < h; ++c) v[r * h + c] = rho0(r, c);
  const Complex tr0 = rho0.trace();

  if (t > 0.0) {
    double norm = 0.0;
    for (Index k = 0; k < l.matrix.outerSize(); ++k) {
      double col = 0.0;
      for (SparseMatrixXc::InnerIterator it(l.matrix, k); it; ++it) col += std::abs(it.value());
      norm = std::max(norm, col);
    }
    const long sub = std::max(1L, static_cast<long>(std::ceil(norm * t / 0.5)));
    const double h0 = t / static_cast<double>(sub);
    for (long s = 0; s < sub; ++s) {
      VectorXc term = v, sum = v;
      bool converged = false;
      for (int k = 1; k <= 80; ++k) {
        term = (l.matrix * term) * (h0 / k);
        sum += term;
        if (term.norm() <= 1e-3 * tolerance * sum.norm()) {
          converged = true;
          break;
        }
      }
      if (!converged) throw NumericalError("propagateDense: Taylor series did not converge");
      v = sum;
    }
  }

  MatrixXc rho(h, h);
  for (Index r = 0; r < h; ++r)
    for (Index c = 0; c < h; ++c) rho(r, c) = v[r * h + c];
  if (std::abs(rho.trace() - tr0) > tolerance * std::max(1.0, std::abs(tr0))) {
    throw NumericalError("propagateDense: trace not preserved to tolerance");
  }
  return rho;
}

MatrixXc productDensityMatrix(const std::vector<MatrixXc>& local) {
  MatrixXc out = MatrixXc::Ones(1, 1);
  for (const auto& r : local) out = Eigen::kroneckerProduct(out, r).eval();
  return out;
}

Complex denseExpectation(const MatrixXc& rho, const SparseMatrixXc& op) {
  return (op * rho).trace();
}

}  // namespace dtebd
