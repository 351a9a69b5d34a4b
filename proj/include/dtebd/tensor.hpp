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

#include <Eigen/Dense>

#include <algorithm>
#include <complex>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <utility>
#include <vector>

namespace dtebd {

using Complex = std::complex<double>;
using Index = Eigen::Index;

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using MatrixXc = Eigen::MatrixXcd;
using VectorXc = Eigen::VectorXcd;

/// Thrown when a numerical kernel cannot deliver a trustworthy result
/// (non-convergent SVD, non-finite exponential, collapsed trace, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dense tensor of arbitrary rank.
///
/// Entries are linearized row-major: the last index runs fastest. Every
/// reshape in the code base is a reinterpretation of this one ordering, so a
/// tensor of shape (a, b, c) viewed as a matrix split after index 1 has rows
/// indexed by a and columns by (b, c) with c fastest.
template <typename Scalar>
class DenseTensor {
 public:
  using Shape = std::vector<Index>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using MatrixMap = Eigen::Map<RowMatrix<Scalar>>;
  using ConstMatrixMap = Eigen::Map<const RowMatrix<Scalar>>;

  DenseTensor() = default;

  explicit DenseTensor(Shape shape) : shape_(std::move(shape)) {
    checkShape(shape_);
    data_ = Vector::Zero(product(shape_));
  }

  DenseTensor(Shape shape, Vector data) : shape_(std::move(shape)), data_(std::move(data)) {
    checkShape(shape_);
    if (product(shape_) != data_.size()) {
      throw std::invalid_argument("DenseTensor: shape product does not match data size");
    }
  }

  /// Copies a matrix into a rank-2 tensor.
  template <typename Derived>
  static DenseTensor fromMatrix(const Eigen::MatrixBase<Derived>& m) {
    DenseTensor t({m.rows(), m.cols()});
    t.matrix(1) = m;
    return t;
  }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index size() const { return data_.size(); }
  Index dim(Index axis) const { return shape_.at(static_cast<std::size_t>(axis)); }

  Vector& data() { return data_; }
  const Vector& data() const { return data_; }

  Scalar& operator()(std::initializer_list<Index> idx) { return data_[offset(idx)]; }
  const Scalar& operator()(std::initializer_list<Index> idx) const { return data_[offset(idx)]; }

  /// Matrix view with rows formed by indices [0, split) and columns by the rest.
  MatrixMap matrix(Index split) {
    auto [r, c] = splitDims(split);
    return MatrixMap(data_.data(), r, c);
  }
  ConstMatrixMap matrix(Index split) const {
    auto [r, c] = splitDims(split);
    return ConstMatrixMap(data_.data(), r, c);
  }

  DenseTensor reshaped(Shape shape) const { return DenseTensor(std::move(shape), data_); }

  /// New tensor whose axis k is axis perm[k] of this one.
  DenseTensor permuted(const std::vector<Index>& perm) const {
    const auto n = shape_.size();
    if (perm.size() != n) throw std::invalid_argument("permuted: permutation rank mismatch");
    std::vector<bool> seen(n, false);
    Shape newShape(n);
    for (std::size_t k = 0; k < n; ++k) {
      const auto p = static_cast<std::size_t>(perm[k]);
      if (p >= n || seen[p]) throw std::invalid_argument("permuted: not a permutation");
      seen[p] = true;
      newShape[k] = shape_[p];
    }
    std::vector<Index> oldStrides = strides(shape_);
    std::vector<Index> srcStride(n);
    for (std::size_t k = 0; k < n; ++k) srcStride[k] = oldStrides[static_cast<std::size_t>(perm[k])];

    DenseTensor out(newShape);
    std::vector<Index> counter(n, 0);
    Index src = 0;
    for (Index dst = 0; dst < out.size(); ++dst) {
      out.data_[dst] = data_[src];
      for (std::size_t k = n; k-- > 0;) {
        ++counter[k];
        src += srcStride[k];
        if (counter[k] < newShape[k]) break;
        src -= srcStride[k] * newShape[k];
        counter[k] = 0;
      }
    }
    return out;
  }

  DenseTensor& operator*=(const Scalar& alpha) {
    data_ *= alpha;
    return *this;
  }
  friend DenseTensor operator*(const Scalar& alpha, DenseTensor t) { return t *= alpha; }

  static Index product(const Shape& s) {
    return std::accumulate(s.begin(), s.end(), Index{1}, std::multiplies<>());
  }

  static std::vector<Index> strides(const Shape& s) {
    std::vector<Index> st(s.size(), 1);
    for (std::size_t k = s.size(); k-- > 1;) st[k - 1] = st[k] * s[k];
    return st;
  }

 private:
  static void checkShape(const Shape& s) {
    for (auto d : s) {
      if (d <= 0) throw std::invalid_argument("DenseTensor: dimensions must be positive");
    }
  }

  Index offset(std::initializer_list<Index> idx) const {
    if (idx.size() != shape_.size()) throw std::out_of_range("DenseTensor: index rank mismatch");
    Index off = 0;
    std::size_t k = 0;
    for (auto i : idx) {
      if (i < 0 || i >= shape_[k]) throw std::out_of_range("DenseTensor: index out of range");
      off = off * shape_[k] + i;
      ++k;
    }
    return off;
  }

  std::pair<Index, Index> splitDims(Index split) const {
    if (split < 0 || split > rank()) throw std::out_of_range("DenseTensor: bad matrix split");
    Index r = 1, c = 1;
    for (Index k = 0; k < rank(); ++k) (k < split ? r : c) *= shape_[static_cast<std::size_t>(k)];
    return {r, c};
  }

  Shape shape_;
  Vector data_;
};

using Tensor = DenseTensor<Complex>;

/// Contracts `a` with `b` over the index pairs (axis of a, axis of b).
///
/// The result carries the unpaired axes of `a` followed by the unpaired axes
/// of `b`, each in their original order.
template <typename Scalar>
DenseTensor<Scalar> contract(const DenseTensor<Scalar>& a, const DenseTensor<Scalar>& b,
                             const std::vector<std::pair<Index, Index>>& pairs) {
  std::vector<bool> aPaired(static_cast<std::size_t>(a.rank()), false);
  std::vector<bool> bPaired(static_cast<std::size_t>(b.rank()), false);
  std::vector<Index> aPerm, bPerm;
  for (auto [ia, ib] : pairs) {
    if (ia < 0 || ia >= a.rank() || ib < 0 || ib >= b.rank()) {
      throw std::invalid_argument("contract: axis out of range");
    }
    if (aPaired[static_cast<std::size_t>(ia)] || bPaired[static_cast<std::size_t>(ib)]) {
      throw std::invalid_argument("contract: axis paired twice");
    }
    if (a.dim(ia) != b.dim(ib)) {
      std::ostringstream ss;
      ss << "contract: dimension mismatch on pair (" << ia << ", " << ib << "): " << a.dim(ia)
         << " vs " << b.dim(ib);
      throw std::invalid_argument(ss.str());
    }
    aPaired[static_cast<std::size_t>(ia)] = true;
    bPaired[static_cast<std::size_t>(ib)] = true;
  }

  typename DenseTensor<Scalar>::Shape outShape;
  for (Index k = 0; k < a.rank(); ++k) {
    if (!aPaired[static_cast<std::size_t>(k)]) {
      aPerm.push_back(k);
      outShape.push_back(a.dim(k));
    }
  }
  const Index aFree = static_cast<Index>(aPerm.size());
  for (auto [ia, ib] : pairs) {
    aPerm.push_back(ia);
    bPerm.push_back(ib);
  }
  for (Index k = 0; k < b.rank(); ++k) {
    if (!bPaired[static_cast<std::size_t>(k)]) {
      bPerm.push_back(k);
      outShape.push_back(b.dim(k));
    }
  }

  const auto ap = a.permuted(aPerm);
  const auto bp = b.permuted(bPerm);
  const auto am = ap.matrix(aFree);
  const auto bm = bp.matrix(static_cast<Index>(pairs.size()));

  if (outShape.empty()) {
    // full contraction yields a scalar stored as a shape-(1) tensor
    typename DenseTensor<Scalar>::Vector v(1);
    v[0] = (am * bm)(0, 0);
    return DenseTensor<Scalar>({1}, v);
  }
  DenseTensor<Scalar> out(outShape);
  out.matrix(aFree).noalias() = am * bm;
  return out;
}

}  // namespace dtebd
