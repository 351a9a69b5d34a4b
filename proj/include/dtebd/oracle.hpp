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
#include "dtebd/tensor.hpp"

#include <Eigen/SparseCore>

#include <vector>

namespace dtebd {

using SparseMatrixXc = Eigen::SparseMatrix<Complex>;

/// Full-chain generator acting on vec(rho), rho row-major with site 0 most
/// significant. Stored sparse; entries are those of the dense generator.
struct DenseLiouvillian {
  int nSites = 0;
  int localDim = 0;
  Index hilbertDim = 0;
  SparseMatrixXc matrix;

  Index dimension() const { return hilbertDim * hilbertDim; }
  MatrixXc dense() const { return MatrixXc(matrix); }
};

inline constexpr Index kMaxOracleDimension = 6561;

DenseLiouvillian assembleDense(const LatticeModel& model);

/// The same generator obtained by embedding the bond generators of the model module.
DenseLiouvillian embedBondGenerators(const LatticeModel& model);

/// exp(L t) vec(rho0) with a Taylor series on scaled substeps.
MatrixXc propagateDense(const DenseLiouvillian& l, const MatrixXc& rho0, double t, double tolerance = 1e-10);

SparseMatrixXc embedSiteOperator(const MatrixXc& op, int site, int nSites);

MatrixXc productDensityMatrix(const std::vector<MatrixXc>& local);

Complex denseExpectation(const MatrixXc& rho, const SparseMatrixXc& op);

}  // namespace dtebd
