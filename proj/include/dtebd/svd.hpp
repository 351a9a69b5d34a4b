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

#include "dtebd/tensor.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <random>

namespace dtebd {

/// Result of a truncated singular value decomposition M ~ U diag(S) V.
///
/// U has orthonormal columns, V has orthonormal rows, S is real, non-negative
/// and sorted in descending order. `discardedWeight` is the dropped fraction
/// of the squared Frobenius norm.
template <typename Scalar>
struct TruncatedSVD {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Matrix U;
  Eigen::VectorXd S;
  Matrix V;
  double discardedWeight = 0.0;
  double totalWeight = 0.0;
  bool randomized = false;

  Index retained() const { return S.size(); }
};

struct SvdOptions {
  /// Randomized range finding is used when the smaller matrix dimension
  /// exceeds `randomizedFactor * (chiMax + oversample)`; below that the
  /// decomposition is exact.
  double randomizedFactor = 2.0;
  Index oversample = 12;
  int powerIterations = 1;
  bool allowRandomized = true;
};

namespace detail {

/// Number of leading singular values to keep.
inline Index truncationRank(const Eigen::VectorXd& s, double total, Index chiMax, double epsCut) {
  const Index n = s.size();
  if (n == 0) return 0;
  Index keep = std::min<Index>(chiMax, n);
  // never keep exact zeros unless the whole matrix vanishes
  const double floor = s[0] * std::numeric_limits<double>::epsilon() * 4.0;
  while (keep > 1 && s[keep - 1] <= floor) --keep;
  if (epsCut > 0.0 && total > 0.0) {
    double tail = 0.0;
    for (Index k = keep; k < n; ++k) tail += s[k] * s[k];
    while (keep > 1) {
      const double next = tail + s[keep - 1] * s[keep - 1];
      if (next / total > epsCut) break;
      tail = next;
      --keep;
    }
  }
  return std::max<Index>(keep, 1);
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> gaussianMatrix(Index rows, Index cols,
                                                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> g(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      if constexpr (Eigen::NumTraits<Scalar>::IsComplex) {
        const double re = normal(rng);
        const double im = normal(rng);
        g(i, j) = Scalar(re, im);
      } else {
        g(i, j) = normal(rng);
      }
    }
  }
  return g;
}

template <typename Matrix>
Matrix orthonormalColumns(const Matrix& y) {
  Eigen::HouseholderQR<Matrix> qr(y);
  return qr.householderQ() * Matrix::Identity(y.rows(), y.cols());
}

// Thin SVD. BDCSVD occasionally returns NaN on matrices whose entries span many
// decades; one-sided Jacobi is slower but does not.
template <typename Matrix>
void thinSvd(const Matrix& m, Matrix& u, Eigen::VectorXd& s, Matrix& vAdj) {
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() == Eigen::Success && svd.singularValues().allFinite() && svd.matrixU().allFinite() &&
      svd.matrixV().allFinite()) {
    s = svd.singularValues();
    u = svd.matrixU();
    vAdj = svd.matrixV().adjoint();
    return;
  }
  Eigen::JacobiSVD<Matrix> jac(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (jac.info() != Eigen::Success) throw NumericalError("svdTruncate: SVD did not converge");
  s = jac.singularValues();
  u = jac.matrixU();
  vAdj = jac.matrixV().adjoint();
}

}  // namespace detail

/// Truncated SVD of a matrix.
///
/// Keeps at most `chiMax` singular values, then drops trailing values while
/// their cumulative relative squared weight stays at or below `epsCut`.
/// Numerically vanishing values are never kept unless the matrix is zero.
template <typename Derived>
TruncatedSVD<typename Derived::Scalar> svdTruncate(const Eigen::MatrixBase<Derived>& m, Index chiMax,
                                                   double epsCut, const SvdOptions& options = {}) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (chiMax < 1) throw std::invalid_argument("svdTruncate: chiMax must be positive");
  if (epsCut < 0.0) throw std::invalid_argument("svdTruncate: epsCut must be non-negative");
  if (m.rows() == 0 || m.cols() == 0) throw std::invalid_argument("svdTruncate: empty matrix");

  TruncatedSVD<Scalar> out;
  const double total = m.squaredNorm();
  out.totalWeight = total;
  if (!std::isfinite(total)) throw NumericalError("svdTruncate: non-finite input");

  const Index small = std::min(m.rows(), m.cols());
  const Index sketch = chiMax + options.oversample;
  const bool useRandom = options.allowRandomized &&
                         static_cast<double>(small) > options.randomizedFactor * static_cast<double>(sketch);

  Matrix uFull, vFull;
  Eigen::VectorXd sFull;
  if (!useRandom) {
    detail::thinSvd<Matrix>(m, uFull, sFull, vFull);
  } else {
    // Randomized range finder with subspace iteration; deterministic seed.
    const std::uint64_t seed = 0x9e3779b97f4a7c15ULL ^ (static_cast<std::uint64_t>(m.rows()) << 20) ^
                               static_cast<std::uint64_t>(m.cols());
    Matrix q = detail::orthonormalColumns<Matrix>(m * detail::gaussianMatrix<Scalar>(m.cols(), sketch, seed));
    for (int it = 0; it < options.powerIterations; ++it) {
      Matrix z = detail::orthonormalColumns<Matrix>(m.adjoint() * q);
      q = detail::orthonormalColumns<Matrix>(m * z);
    }
    Matrix b = q.adjoint() * m;
    Matrix ub;
    detail::thinSvd<Matrix>(b, ub, sFull, vFull);
    uFull = q * ub;
    out.randomized = true;
  }
  if (!sFull.allFinite()) throw NumericalError("svdTruncate: non-finite singular values");

  const Index keep = detail::truncationRank(sFull, total, chiMax, epsCut);
  out.U = uFull.leftCols(keep);
  out.S = sFull.head(keep);
  out.V = vFull.topRows(keep);

  if (total > 0.0) {
    if (out.randomized) {
      out.discardedWeight = std::max(0.0, 1.0 - out.S.squaredNorm() / total);
    } else {
      out.discardedWeight = sFull.tail(sFull.size() - keep).squaredNorm() / total;
    }
    out.discardedWeight = std::clamp(out.discardedWeight, 0.0, 1.0);
  }
  return out;
}

/// Truncated SVD of a tensor viewed as a matrix split after axis `split`.
template <typename Scalar>
TruncatedSVD<Scalar> svdTruncate(const DenseTensor<Scalar>& t, Index split, Index chiMax, double epsCut,
                                 const SvdOptions& options = {}) {
  return svdTruncate(t.matrix(split), chiMax, epsCut, options);
}

}  // namespace dtebd
