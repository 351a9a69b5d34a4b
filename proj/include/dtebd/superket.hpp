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
#include "dtebd/svd.hpp"
#include "dtebd/tensor.hpp"

#include <Eigen/SparseCore>

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace dtebd {

/// Two-site propagator in site-major order, rows/cols (i1 j1 i2 j2).
using GateMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;

struct TruncationPolicy {
  Index chiMax = 40;
  double epsCut = 1e-12;
  SvdOptions svd{};
};

enum class SweepDirection { Right, Left };

/// Matrix-product representation of a vectorized density operator.
///
/// Site tensors have shape (leftBond, d^2, rightBond); the physical index of
/// site l is s = i * d + j for the local matrix element |i><j|. The state is
/// kept in mixed-canonical form around `center()`: tensors to its left are
/// left isometries and tensors to its right are right isometries, in the
/// superket 2-norm.
class SuperketMPS {
 public:
  SuperketMPS() = default;

  /// Uncorrelated state from local density matrices (each d x d).
  static SuperketMPS product(std::span<const MatrixXc> localRho, const TruncationPolicy& policy);

  int nSites() const { return static_cast<int>(sites_.size()); }
  int localDim() const { return localDim_; }
  int superDim() const { return localDim_ * localDim_; }
  int center() const { return center_; }

  const std::vector<Tensor>& siteTensors() const { return sites_; }
  const Tensor& site(int l) const { return sites_.at(static_cast<std::size_t>(l)); }
  /// Normalized singular values on each bond from the last split of that bond.
  const std::vector<Eigen::VectorXd>& weights() const { return weights_; }

  Index bondDim(int bond) const { return sites_.at(static_cast<std::size_t>(bond)).dim(2); }
  Index maxBondDim() const;

  const TruncationPolicy& policy() const { return policy_; }
  void setPolicy(const TruncationPolicy& p) { policy_ = p; }
  double cumulativeDiscard() const { return cumulativeDiscard_; }
  double lastRenormalization() const { return lastRenormalization_; }

  /// Shifts the orthogonality center with QR sweeps; the state is unchanged.
  void moveCenterTo(int site);

  /// Applies a site-major d^4 x d^4 gate to bond (bond, bond+1) and re-splits
  /// with a truncated SVD. The new center sits right of the bond for
  /// `Right` and left of it for `Left`. Returns the discarded weight.
  double applyGate(int bond, const GateMatrix& gate, SweepDirection dir = SweepDirection::Right);

  /// Multiplies the whole state by alpha (absorbed into the center tensor).
  void scale(Complex alpha);

  /// Largest deviation from isometry of the non-center tensors.
  double canonicalResidual() const;

  /// Inserts X, X^-1 on a bond; a gauge transformation that leaves the state
  /// unchanged but breaks the canonical form until the next gate.
  void applyGauge(int bond, const MatrixXc& x);

  void setRenormalization(double f) { lastRenormalization_ = f; }

  /// Restores mixed-canonical form with the center on site 0.
  void canonicalize();
  bool isCanonical() const { return canonical_; }

  // checkpoint support
  friend void writeState(std::ostream& os, const SuperketMPS& s, const std::string& metadata);
  friend SuperketMPS readState(std::istream& is, std::string& metadata);

 private:
  void shiftRight(int c);
  void shiftLeft(int c);

  std::vector<Tensor> sites_;
  std::vector<Eigen::VectorXd> weights_;
  TruncationPolicy policy_{};
  int localDim_ = 0;
  int center_ = 0;
  double cumulativeDiscard_ = 0.0;
  double lastRenormalization_ = 1.0;
  bool canonical_ = true;
};

/// vec of the d x d identity; contracting it with vec(M) yields Tr M.
VectorXc traceVector(int localDim);

/// Weights w with sum_s w_s vec(rho)_s = Tr(rho O).
VectorXc observableWeights(const MatrixXc& op);

/// Product of local truncated coherent states |c_l><c_l|, each renormalized to
/// unit trace. Rejects amplitudes whose weight beyond the cutoff exceeds 1e-3.
SuperketMPS coherentProductState(std::span<const Complex> amplitudes, const LatticeModel& m,
                                 const TruncationPolicy& policy);

/// Weight of a coherent state with mean occupation x beyond Fock level `cutoff`.
double coherentTailWeight(double meanOccupation, int cutoff);

/// Truncated and renormalized coherent density matrix for amplitude c.
MatrixXc truncatedCoherentState(Complex c, int fockCutoff);

double applyBondGate(SuperketMPS& state, int bond, const GateMatrix& gate);
double applyBondGate(SuperketMPS& state, int bond, const MatrixXc& gate);

Complex traceContraction(const SuperketMPS& state);
Complex localExpectation(const SuperketMPS& state, int site, const MatrixXc& op);
Complex twoSiteExpectation(const SuperketMPS& state, int siteA, const MatrixXc& opA, int siteB,
                           const MatrixXc& opB);

/// Scales the state to unit trace; returns the factor applied.
Complex renormalize(SuperketMPS& state);

/// <<rho|rho>>, which equals Tr(rho^2) for Hermitian rho.
double superketNormSquared(const SuperketMPS& state);

/// Trace-normalized two-site reduced density matrix of sites (l, l+1), in the
/// (i1 i2),(j1 j2) basis.
MatrixXc reducedDensityMatrix(const SuperketMPS& state, int l);

/// Full density matrix (site 0 most significant); small systems only.
MatrixXc toDenseDensityMatrix(const SuperketMPS& state);

/// Cached left/right trace environments of one state snapshot, for cheap
/// repeated expectation values.
class TraceEnvironment {
 public:
  explicit TraceEnvironment(const SuperketMPS& state);

  Complex trace() const { return left_.back()(0); }
  /// Unnormalized Tr(rho O_site).
  Complex local(int site, const MatrixXc& op) const;
  /// Unnormalized Tr(rho O_a O_b), a != b.
  Complex pair(int a, const MatrixXc& opA, int b, const MatrixXc& opB) const;
  /// Unnormalized Tr(rho O_ref O_m) for every m != ref; entry ref holds Tr(rho O2_ref)
  /// where O2 is `onsite`.
  VectorXc row(int ref, const MatrixXc& op, const MatrixXc& onsite) const;
  /// Unnormalized two-site reduced matrix of (l, l+1) in site-major (s1, s2) order.
  MatrixXc twoSiteBlock(int l) const;

 private:
  Eigen::RowVectorXcd transferLeft(const Eigen::RowVectorXcd& env, int site, const VectorXc& w) const;
  VectorXc transferRight(const VectorXc& env, int site, const VectorXc& w) const;

  const SuperketMPS& state_;
  VectorXc id_;
  std::vector<Eigen::RowVectorXcd> left_;  // left_[l]: sites [0, l)
  std::vector<VectorXc> right_;            // right_[l]: sites [l, N)
};

void writeState(std::ostream& os, const SuperketMPS& s, const std::string& metadata);
SuperketMPS readState(std::istream& is, std::string& metadata);

}  // namespace dtebd
