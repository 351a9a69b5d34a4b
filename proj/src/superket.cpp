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

#include "dtebd/superket.hpp"

#include <Eigen/QR>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace dtebd {

namespace {

using RowMatrixXc = RowMatrix<Complex>;

}  // namespace

SuperketMPS SuperketMPS::product(std::span<const MatrixXc> localRho, const TruncationPolicy& policy) {
  if (localRho.empty()) throw std::invalid_argument("SuperketMPS::product: no sites");
  SuperketMPS s;
  s.policy_ = policy;
  s.localDim_ = static_cast<int>(localRho.front().rows());
  const Index p = static_cast<Index>(s.localDim_) * s.localDim_;
  double norm = 1.0;
  for (const auto& rho : localRho) {
    if (rho.rows() != s.localDim_ || rho.cols() != s.localDim_) {
      throw std::invalid_argument("SuperketMPS::product: local density matrices must share a square shape");
    }
    VectorXc v = superop::vectorize(rho);
    const double n = v.norm();
    if (!(n > 0.0)) throw std::invalid_argument("SuperketMPS::product: zero local state");
    norm *= n;
    s.sites_.emplace_back(Tensor::Shape{1, p, 1}, v / n);
  }
  s.sites_.front() *= Complex(norm);
  s.weights_.assign(localRho.size() - 1, Eigen::VectorXd::Ones(1));
  s.center_ = 0;
  return s;
}

Index SuperketMPS::maxBondDim() const {
  Index m = 1;
  for (const auto& t : sites_) m = std::max(m, t.dim(2));
  return m;
}

void SuperketMPS::canonicalize() {
  center_ = 0;
  canonical_ = true;
  const int n = nSites();
  // left-to-right QR makes everything but the last site a left isometry,
  // right-to-left QR then restores right isometries
  for (int l = 0; l + 1 < n; ++l) shiftRight(l);
  for (int l = n - 1; l > 0; --l) shiftLeft(l);
  center_ = 0;
}

void SuperketMPS::shiftRight(int c) {
  Tensor& a = sites_[static_cast<std::size_t>(c)];
  Tensor& b = sites_[static_cast<std::size_t>(c + 1)];
  const Index chiL = a.dim(0), p = a.dim(1);
  const MatrixXc m = a.matrix(2);
  const Index k = std::min(m.rows(), m.cols());
  Eigen::HouseholderQR<MatrixXc> qr(m);
  const MatrixXc q = qr.householderQ() * MatrixXc::Identity(m.rows(), k);
  const MatrixXc r = q.adjoint() * m;
  Tensor na({chiL, p, k});
  na.matrix(2) = q;
  const Index chiR = b.dim(2);
  Tensor nb({k, b.dim(1), chiR});
  nb.matrix(1).noalias() = r * b.matrix(1);
  a = std::move(na);
  b = std::move(nb);
}

void SuperketMPS::shiftLeft(int c) {
  Tensor& a = sites_[static_cast<std::size_t>(c - 1)];
  Tensor& b = sites_[static_cast<std::size_t>(c)];
  const Index p = b.dim(1), chiR = b.dim(2);
  const MatrixXc mt = b.matrix(1).adjoint();  // (p chiR) x chiL
  const Index k = std::min(mt.rows(), mt.cols());
  Eigen::HouseholderQR<MatrixXc> qr(mt);
  const MatrixXc q = qr.householderQ() * MatrixXc::Identity(mt.rows(), k);
  const MatrixXc r = q.adjoint() * mt;  // k x chiL, b = r^dag q^dag
  Tensor nb({k, p, chiR});
  nb.matrix(1) = q.adjoint();
  Tensor na({a.dim(0), a.dim(1), k});
  na.matrix(2).noalias() = a.matrix(2) * r.adjoint();
  a = std::move(na);
  b = std::move(nb);
}

void SuperketMPS::moveCenterTo(int site) {
  if (site < 0 || site >= nSites()) throw std::out_of_range("moveCenterTo: site out of range");
  if (!canonical_) canonicalize();
  while (center_ < site) shiftRight(center_++);
  while (center_ > site) shiftLeft(center_--);
}

double SuperketMPS::applyGate(int bond, const GateMatrix& gate, SweepDirection dir) {
  if (bond < 0 || bond + 1 >= nSites()) throw std::out_of_range("applyGate: bond out of range");
  const Index p = superDim();
  if (gate.rows() != p * p || gate.cols() != p * p) {
    throw std::invalid_argument("applyGate: gate dimension does not match d^4");
  }
  if (!canonical_) canonicalize();
  if (center_ < bond) moveCenterTo(bond);
  if (center_ > bond + 1) moveCenterTo(bond + 1);

  Tensor& a = sites_[static_cast<std::size_t>(bond)];
  Tensor& b = sites_[static_cast<std::size_t>(bond + 1)];
  const Index chiL = a.dim(0), chiR = b.dim(2);

  RowMatrixXc theta(chiL * p, p * chiR);
  theta.noalias() = a.matrix(2) * b.matrix(1);

  // gate acts on the (s1 s2) pair; for fixed left index the slice is a
  // contiguous (p^2) x chiR row-major block
  RowMatrixXc slice(p * p, chiR);
  for (Index l = 0; l < chiL; ++l) {
    Eigen::Map<RowMatrixXc> block(theta.data() + l * p * p * chiR, p * p, chiR);
    slice.noalias() = gate * block;
    block = slice;
  }

  auto svd = svdTruncate(theta, policy_.chiMax, policy_.epsCut, policy_.svd);
  const Index k = svd.retained();
  Tensor na({chiL, p, k});
  Tensor nb({k, p, chiR});
  if (dir == SweepDirection::Right) {
    na.matrix(2) = svd.U;
    nb.matrix(1) = svd.S.cast<Complex>().asDiagonal() * svd.V;
    center_ = bond + 1;
  } else {
    na.matrix(2) = svd.U * svd.S.cast<Complex>().asDiagonal();
    nb.matrix(1) = svd.V;
    center_ = bond;
  }
  a = std::move(na);
  b = std::move(nb);
  const double sn = svd.S.norm();
  weights_[static_cast<std::size_t>(bond)] = sn > 0.0 ? Eigen::VectorXd(svd.S / sn) : svd.S;
  cumulativeDiscard_ += svd.discardedWeight;
  return svd.discardedWeight;
}

void SuperketMPS::scale(Complex alpha) {
  sites_.at(static_cast<std::size_t>(canonical_ ? center_ : 0)) *= alpha;
}

double SuperketMPS::canonicalResidual() const {
  if (!canonical_) return std::numeric_limits<double>::infinity();
  double worst = 0.0;
  for (int l = 0; l < nSites(); ++l) {
    if (l == center_) continue;
    const auto& t = sites_[static_cast<std::size_t>(l)];
    if (l < center_) {
      const MatrixXc m = t.matrix(2);
      const MatrixXc g = m.adjoint() * m;
      worst = std::max(worst, (g - MatrixXc::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff());
    } else {
      const MatrixXc m = t.matrix(1);
      const MatrixXc g = m * m.adjoint();
      worst = std::max(worst, (g - MatrixXc::Identity(g.rows(), g.cols())).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

void SuperketMPS::applyGauge(int bond, const MatrixXc& x) {
  if (bond < 0 || bond + 1 >= nSites()) throw std::out_of_range("applyGauge: bond out of range");
  Tensor& a = sites_[static_cast<std::size_t>(bond)];
  Tensor& b = sites_[static_cast<std::size_t>(bond + 1)];
  if (x.rows() != a.dim(2) || x.cols() != a.dim(2)) throw std::invalid_argument("applyGauge: size mismatch");
  const MatrixXc xinv = x.inverse();
  const MatrixXc am = a.matrix(2) * x;
  const MatrixXc bm = xinv * b.matrix(1);
  a.matrix(2) = am;
  b.matrix(1) = bm;
  canonical_ = false;
}

VectorXc traceVector(int localDim) {
  return superop::vectorize(MatrixXc::Identity(localDim, localDim));
}

VectorXc observableWeights(const MatrixXc& op) { return superop::vectorize(op.transpose()); }

double coherentTailWeight(double x, int cutoff) {
  if (x <= 0.0) return 0.0;
  double term = std::exp(-x);
  for (int k = 1; k <= cutoff; ++k) term *= x / k;
  double tail = 0.0;
  for (int k = cutoff + 1; k < cutoff + 400; ++k) {
    term *= x / k;
    tail += term;
    if (term < 1e-30 * tail) break;
  }
  return tail;
}

MatrixXc truncatedCoherentState(Complex c, int fockCutoff) {
  const Index d = fockCutoff + 1;
  VectorXc psi(d);
  psi[0] = 1.0;
  for (Index k = 1; k < d; ++k) psi[k] = psi[k - 1] * c / std::sqrt(static_cast<double>(k));
  psi.normalize();
  return psi * psi.adjoint();
}

SuperketMPS coherentProductState(std::span<const Complex> amplitudes, const LatticeModel& m,
                                 const TruncationPolicy& policy) {
  if (static_cast<int>(amplitudes.size()) != m.nSites) {
    throw std::invalid_argument("coherentProductState: amplitude count must equal nSites");
  }
  std::vector<MatrixXc> rhos;
  rhos.reserve(amplitudes.size());
  for (std::size_t l = 0; l < amplitudes.size(); ++l) {
    const double x = std::norm(amplitudes[l]);
    if (coherentTailWeight(x, m.fockCutoff) > 1e-3) {
      std::ostringstream ss;
      ss << "coherentProductState: |c|^2 = " << x << " at site " << l << " leaves more than 1e-3 weight above Fock cutoff "
         << m.fockCutoff;
      throw std::invalid_argument(ss.str());
    }
    rhos.push_back(truncatedCoherentState(amplitudes[l], m.fockCutoff));
  }
  return SuperketMPS::product(rhos, policy);
}

double applyBondGate(SuperketMPS& state, int bond, const GateMatrix& gate) {
  return state.applyGate(bond, gate, SweepDirection::Right);
}

double applyBondGate(SuperketMPS& state, int bond, const MatrixXc& gate) {
  const GateMatrix g = gate.sparseView(1.0, 0.0);
  return state.applyGate(bond, g, SweepDirection::Right);
}

// --- contractions ----------------------------------------------------------

TraceEnvironment::TraceEnvironment(const SuperketMPS& state) : state_(state), id_(traceVector(state.localDim())) {
  const int n = state.nSites();
  left_.resize(static_cast<std::size_t>(n + 1));
  right_.resize(static_cast<std::size_t>(n + 1));
  left_[0] = Eigen::RowVectorXcd::Ones(1);
  for (int l = 0; l < n; ++l) left_[static_cast<std::size_t>(l + 1)] = transferLeft(left_[static_cast<std::size_t>(l)], l, id_);
  right_[static_cast<std::size_t>(n)] = VectorXc::Ones(1);
  for (int l = n - 1; l >= 0; --l) right_[static_cast<std::size_t>(l)] = transferRight(right_[static_cast<std::size_t>(l + 1)], l, id_);
}

Eigen::RowVectorXcd TraceEnvironment::transferLeft(const Eigen::RowVectorXcd& env, int site, const VectorXc& w) const {
  const Tensor& a = state_.site(site);
  const Index p = a.dim(1), chiR = a.dim(2);
  const Eigen::RowVectorXcd x = env * a.matrix(1);
  Eigen::Map<const RowMatrixXc> xm(x.data(), p, chiR);
  return w.transpose() * xm;
}

VectorXc TraceEnvironment::transferRight(const VectorXc& env, int site, const VectorXc& w) const {
  const Tensor& a = state_.site(site);
  const Index chiL = a.dim(0), p = a.dim(1);
  const VectorXc y = a.matrix(2) * env;
  Eigen::Map<const RowMatrixXc> ym(y.data(), chiL, p);
  return ym * w;
}

Complex TraceEnvironment::local(int site, const MatrixXc& op) const {
  if (site < 0 || site >= state_.nSites()) throw std::out_of_range("local: site out of range");
  return (transferLeft(left_[static_cast<std::size_t>(site)], site, observableWeights(op)) *
          right_[static_cast<std::size_t>(site + 1)])(0);
}

Complex TraceEnvironment::pair(int a, const MatrixXc& opA, int b, const MatrixXc& opB) const {
  const int n = state_.nSites();
  if (a < 0 || b < 0 || a >= n || b >= n) throw std::out_of_range("pair: site out of range");
  if (a == b) throw std::invalid_argument("pair: sites must differ");
  if (a > b) return pair(b, opB, a, opA);
  Eigen::RowVectorXcd e = transferLeft(left_[static_cast<std::size_t>(a)], a, observableWeights(opA));
  for (int k = a + 1; k < b; ++k) e = transferLeft(e, k, id_);
  e = transferLeft(e, b, observableWeights(opB));
  return (e * right_[static_cast<std::size_t>(b + 1)])(0);
}

VectorXc TraceEnvironment::row(int ref, const MatrixXc& op, const MatrixXc& onsite) const {
  const int n = state_.nSites();
  if (ref < 0 || ref >= n) throw std::out_of_range("row: reference site out of range");
  const VectorXc w = observableWeights(op);
  VectorXc out(n);
  out[ref] = local(ref, onsite);
  Eigen::RowVectorXcd e = transferLeft(left_[static_cast<std::size_t>(ref)], ref, w);
  for (int m = ref + 1; m < n; ++m) {
    out[m] = (transferLeft(e, m, w) * right_[static_cast<std::size_t>(m + 1)])(0);
    e = transferLeft(e, m, id_);
  }
  VectorXc f = transferRight(right_[static_cast<std::size_t>(ref + 1)], ref, w);
  for (int m = ref - 1; m >= 0; --m) {
    out[m] = (left_[static_cast<std::size_t>(m)] * transferRight(f, m, w))(0);
    f = transferRight(f, m, id_);
  }
  return out;
}

MatrixXc TraceEnvironment::twoSiteBlock(int l) const {
  if (l < 0 || l + 1 >= state_.nSites()) throw std::out_of_range("twoSiteBlock: bond out of range");
  const Tensor& a = state_.site(l);
  const Tensor& b = state_.site(l + 1);
  const Index p = a.dim(1), chiM = a.dim(2);
  const Eigen::RowVectorXcd x = left_[static_cast<std::size_t>(l)] * a.matrix(1);
  Eigen::Map<const RowMatrixXc> xm(x.data(), p, chiM);
  const VectorXc y = b.matrix(2) * right_[static_cast<std::size_t>(l + 2)];
  Eigen::Map<const RowMatrixXc> ym(y.data(), chiM, p);
  return xm * ym;
}

Complex traceContraction(const SuperketMPS& state) { return TraceEnvironment(state).trace(); }

namespace {
Complex normalizedOrThrow(Complex value, Complex trace, const char* who) {
  if (std::abs(trace) < 1e-300) throw NumericalError(std::string(who) + ": state has zero trace");
  return value / trace;
}
}  // namespace

Complex localExpectation(const SuperketMPS& state, int site, const MatrixXc& op) {
  TraceEnvironment env(state);
  return normalizedOrThrow(env.local(site, op), env.trace(), "localExpectation");
}

Complex twoSiteExpectation(const SuperketMPS& state, int siteA, const MatrixXc& opA, int siteB, const MatrixXc& opB) {
  TraceEnvironment env(state);
  return normalizedOrThrow(env.pair(siteA, opA, siteB, opB), env.trace(), "twoSiteExpectation");
}

Complex renormalize(SuperketMPS& state) {
  const Complex tr = traceContraction(state);
  if (!(std::abs(tr) > 1e-300) || !std::isfinite(std::abs(tr))) {
    throw NumericalError("renormalize: trace collapsed");
  }
  const Complex f = 1.0 / tr;
  state.scale(f);
  state.setRenormalization(std::abs(f));
  return f;
}

double superketNormSquared(const SuperketMPS& state) {
  MatrixXc e = MatrixXc::Ones(1, 1);
  for (const auto& t : state.siteTensors()) {
    const Index chiL = t.dim(0), p = t.dim(1), chiR = t.dim(2);
    // e'_{b b'} = sum_{a a' s} conj(A[a s b]) e_{a a'} A[a' s b']
    const MatrixXc x = e * t.matrix(1);  // chiL x (p chiR)
    MatrixXc next = MatrixXc::Zero(chiR, chiR);
    const RowMatrixXc am = t.matrix(1);
    for (Index s = 0; s < p; ++s) {
      const MatrixXc as = am.middleCols(s * chiR, chiR);
      next.noalias() += as.adjoint() * x.middleCols(s * chiR, chiR);
    }
    (void)chiL;
    e = std::move(next);
  }
  return e(0, 0).real();
}

MatrixXc reducedDensityMatrix(const SuperketMPS& state, int l) {
  TraceEnvironment env(state);
  const MatrixXc block = env.twoSiteBlock(l);
  const Complex tr = env.trace();
  if (std::abs(tr) < 1e-300) throw NumericalError("reducedDensityMatrix: zero trace");
  const Index d = state.localDim();
  MatrixXc rho(d * d, d * d);
  for (Index i1 = 0; i1 < d; ++i1)
    for (Index j1 = 0; j1 < d; ++j1)
      for (Index i2 = 0; i2 < d; ++i2)
        for (Index j2 = 0; j2 < d; ++j2) rho(i1 * d + i2, j1 * d + j2) = block(i1 * d + j1, i2 * d + j2) / tr;
  return rho;
}

MatrixXc toDenseDensityMatrix(const SuperketMPS& state) {
  const int n = state.nSites();
  const Index d = state.localDim();
  const Index p = d * d;
  Index hilbert = 1;
  for (int l = 0; l < n; ++l) hilbert *= d;
  if (hilbert > 4096) throw std::invalid_argument("toDenseDensityMatrix: system too large");

  RowMatrixXc v = RowMatrixXc::Ones(1, 1);  // (accumulated physical) x bond
  for (const auto& t : state.siteTensors()) {
    const Index chiR = t.dim(2);
    RowMatrixXc next = v * t.matrix(1);  // K x (p chiR), row-major so reshape is free
    v = Eigen::Map<RowMatrixXc>(next.data(), next.rows() * p, chiR);
  }
  MatrixXc rho(hilbert, hilbert);
  for (Index flat = 0; flat < v.rows(); ++flat) {
    Index rest = flat, row = 0, col = 0, scaleRow = 1;
    for (int l = n - 1; l >= 0; --l) {
      const Index s = rest % p;
      rest /= p;
      row += (s / d) * scaleRow;
      col += (s % d) * scaleRow;
      scaleRow *= d;
    }
    rho(row, col) = v(flat, 0);
  }
  return rho;
}

// --- checkpoint I/O --------------------------------------------------------

namespace {
constexpr char kMagic[8] = {'D', 'T', 'E', 'B', 'D', 'S', 'K', '1'};

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("readState: truncated checkpoint");
  return v;
}
}  // namespace

void writeState(std::ostream& os, const SuperketMPS& s, const std::string& metadata) {
  os.write(kMagic, sizeof(kMagic));
  put<std::uint64_t>(os, metadata.size());
  os.write(metadata.data(), static_cast<std::streamsize>(metadata.size()));
  put<std::int32_t>(os, s.nSites());
  put<std::int32_t>(os, s.localDim_);
  put<std::int64_t>(os, s.policy_.chiMax);
  put<double>(os, s.policy_.epsCut);
  put<double>(os, s.policy_.svd.randomizedFactor);
  put<std::int64_t>(os, s.policy_.svd.oversample);
  put<std::int32_t>(os, s.policy_.svd.powerIterations);
  put<std::uint8_t>(os, s.policy_.svd.allowRandomized ? 1 : 0);
  put<double>(os, s.cumulativeDiscard_);
  put<double>(os, s.lastRenormalization_);
  put<std::int32_t>(os, s.center_);
  put<std::uint8_t>(os, s.canonical_ ? 1 : 0);
  for (const auto& t : s.sites_) {
    for (Index k = 0; k < 3; ++k) put<std::int64_t>(os, t.dim(k));
    os.write(reinterpret_cast<const char*>(t.data().data()), static_cast<std::streamsize>(t.size() * sizeof(Complex)));
  }
  for (const auto& w : s.weights_) {
    put<std::int64_t>(os, w.size());
    os.write(reinterpret_cast<const char*>(w.data()), static_cast<std::streamsize>(w.size() * sizeof(double)));
  }
  if (!os) throw std::runtime_error("writeState: write failed");
}

SuperketMPS readState(std::istream& is, std::string& metadata) {
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw std::runtime_error("readState: not a dtebd checkpoint");
  const auto metaLen = get<std::uint64_t>(is);
  metadata.resize(metaLen);
  is.read(metadata.data(), static_cast<std::streamsize>(metaLen));
  SuperketMPS s;
  const auto n = get<std::int32_t>(is);
  s.localDim_ = get<std::int32_t>(is);
  s.policy_.chiMax = get<std::int64_t>(is);
  s.policy_.epsCut = get<double>(is);
  s.policy_.svd.randomizedFactor = get<double>(is);
  s.policy_.svd.oversample = get<std::int64_t>(is);
  s.policy_.svd.powerIterations = get<std::int32_t>(is);
  s.policy_.svd.allowRandomized = get<std::uint8_t>(is) != 0;
  s.cumulativeDiscard_ = get<double>(is);
  s.lastRenormalization_ = get<double>(is);
  s.center_ = get<std::int32_t>(is);
  s.canonical_ = get<std::uint8_t>(is) != 0;
  if (n < 1 || s.localDim_ < 1) throw std::runtime_error("readState: corrupt header");
  for (int l = 0; l < n; ++l) {
    Tensor::Shape shape(3);
    for (auto& d : shape) d = get<std::int64_t>(is);
    Tensor t(shape);
    is.read(reinterpret_cast<char*>(t.data().data()), static_cast<std::streamsize>(t.size() * sizeof(Complex)));
    if (!is) throw std::runtime_error("readState: truncated tensor data");
    s.sites_.push_back(std::move(t));
  }
  for (int b = 0; b + 1 < n; ++b) {
    const auto len = get<std::int64_t>(is);
    Eigen::VectorXd w(len);
    is.read(reinterpret_cast<char*>(w.data()), static_cast<std::streamsize>(len * sizeof(double)));
    if (!is) throw std::runtime_error("readState: truncated weights");
    s.weights_.push_back(std::move(w));
  }
  return s;
}

}  // namespace dtebd
