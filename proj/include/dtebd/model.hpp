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

#include <vector>

namespace dtebd {

/// Continuum parameters of the lossy Lieb-Liniger gas with diffusion.
struct PhysicalParams {
  double hbar = 1.0;
  double mass = 1.0;
  double gReal = 0.0;      ///< elastic part of the complex coupling (times length)
  double gImag = 0.0;      ///< dissipative part, must be <= 0
  double diffusionD = 0.1; ///< diffusion constant of the field
  double boxLength = 1.0;
  double meanN0 = 1.0;

  double density() const { return meanN0 / boxLength; }
  double couplingMagnitude() const { return std::hypot(gReal, gImag); }
  void validate() const;
};

/// D = |hbar/m| / 10, the diffusion strength used throughout the experiments.
inline double defaultDiffusion(double hbar, double mass) { return std::abs(hbar / mass) / 10.0; }

/// Discretized generalized Bose-Hubbard model with diffusion and pair loss.
struct LatticeModel {
  int nSites = 2;
  int fockCutoff = 3;
  double hbar = 1.0;
  double deltaZ = 1.0;
  double J = 0.0;
  double U = 0.0;
  double gamma1 = 0.0;
  double gamma2 = 0.0;

  int localDim() const { return fockCutoff + 1; }
  int superDim() const { return localDim() * localDim(); }
  int bondCount() const { return nSites - 1; }
};

/// Ladder and derived operators on a truncated Fock space {|0>, ..., |cutoff>}.
struct LocalOps {
  MatrixXc annihilate;
  MatrixXc create;
  MatrixXc number;
  MatrixXc pairLoss;     ///< a^2
  MatrixXc pairDensity;  ///< a^dag^2 a^2
  MatrixXc identity;
};

struct DimensionlessGroup {
  double liebLinigerG = 0.0;  ///< |G| = m |g| / (hbar^2 rho)
  double tLoc = 0.0;          ///< hbar / (|g| rho)
  double tauC = 0.0;          ///< 2 hbar / sqrt(U^2 + (hbar Gamma2)^2) on the given grid
};

LatticeModel buildLattice(const PhysicalParams& p, int nSites, int fockCutoff);
LocalOps buildLocalOps(int fockCutoff);
DimensionlessGroup dimensionlessGroups(const PhysicalParams& p, int nSites);

/// tau_c = 2 hbar / sqrt(U^2 + (hbar Gamma2)^2); the time unit of the figures.
/// Throws when both interaction couplings vanish.
double collisionTime(const LatticeModel& m);

/// Bond pieces of the Liouvillian.
///
/// Entry b acts on sites (b, b+1). Each generator is a d^4 x d^4 matrix on the
/// two-site density matrix flattened row-major with row index (i1 i2) and
/// column index (j1 j2), so that A rho B maps to (A kron B^T) vec(rho).
/// On-site terms are shared half/half between the two bonds that touch a site,
/// except that the end sites give their full on-site terms to their only bond.
/// The sum over bonds of the embedded generators is the full Liouvillian.
std::vector<MatrixXc> bondLiouvillians(const LatticeModel& m);

/// Which terms of the Liouvillian to include; used to split d<n>/dt into
/// hopping, diffusion and loss contributions.
struct TermMask {
  bool hamiltonianOnsite = true;
  bool hopping = true;
  bool diffusion = true;
  bool pairLoss = true;
};
std::vector<MatrixXc> bondLiouvillians(const LatticeModel& m, const TermMask& mask);

/// Generator of the single bond (b, b+1).
MatrixXc bondLiouvillian(const LatticeModel& m, int b, const TermMask& mask = {});

namespace superop {

/// vec(A rho B) = (A kron B^T) vec(rho) for row-major vectorization.
MatrixXc leftRight(const MatrixXc& A, const MatrixXc& B);

/// -i/hbar [H, .]
MatrixXc commutator(const MatrixXc& H, double hbar);

/// -rate (X^dag X rho + rho X^dag X - 2 X rho X^dag)
MatrixXc dissipator(const MatrixXc& X, double rate);

/// Reorders a two-site superoperator from the (i1 i2),(j1 j2) vectorization
/// to the site-major (i1 j1),(i2 j2) order used by the matrix-product superket.
MatrixXc toSiteMajor(const MatrixXc& twoSite, int d);

/// Row-major vectorization of a square matrix.
VectorXc vectorize(const MatrixXc& rho);
MatrixXc unvectorize(const VectorXc& v, Index dim);

}  // namespace superop

}  // namespace dtebd
