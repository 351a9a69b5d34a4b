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

#include "dtebd/observables.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dtebd {

namespace {

double maxImag(double current, Complex z) { return std::max(current, std::abs(z.imag())); }

// d/dt Tr(n_site rho) carried by the bond generator of (bond, bond+1)
double bondRate(const MatrixXc& rhoPair, const MatrixXc& generator, const MatrixXc& numberOnPair) {
  const VectorXc drho = generator * superop::vectorize(rhoPair);
  return (observableWeights(numberOnPair).transpose() * drho)(0).real();
}

}  // namespace

std::optional<double> g2Local(const SuperketMPS& state, int site, double densityFloor) {
  const LocalOps ops = buildLocalOps(state.localDim() - 1);
  TraceEnvironment env(state);
  const Complex tr = env.trace();
  if (std::abs(tr) < 1e-300) throw NumericalError("g2Local: state has zero trace");
  const double n = (env.local(site, ops.number) / tr).real();
  if (!(n > densityFloor)) return std::nullopt;
  return (env.local(site, ops.pairDensity) / tr).real() / (n * n);
}

std::optional<double> g2NonLocal(const SuperketMPS& state, int siteA, int siteB, double densityFloor) {
  if (siteA == siteB) throw std::invalid_argument("g2NonLocal: sites must differ");
  const LocalOps ops = buildLocalOps(state.localDim() - 1);
  TraceEnvironment env(state);
  const Complex tr = env.trace();
  if (std::abs(tr) < 1e-300) throw NumericalError("g2NonLocal: state has zero trace");
  const double na = (env.local(siteA, ops.number) / tr).real();
  const double nb = (env.local(siteB, ops.number) / tr).real();
  if (!(na > densityFloor) || !(nb > densityFloor)) return std::nullopt;
  return (env.pair(siteA, ops.number, siteB, ops.number) / tr).real() / (na * nb);
}

DensityRates densityRates(const SuperketMPS& state, const LatticeModel& model, int site) {
  const int n = model.nSites;
  if (site < 0 || site >= n) throw std::out_of_range("densityRates: site out of range");
  const LocalOps ops = buildLocalOps(model.fockCutoff);
  const MatrixXc id = ops.identity;

  TermMask hop{false, true, false, false};
  TermMask diff{false, false, true, false};
  DensityRates r;

  TraceEnvironment env(state);
  const Complex tr = env.trace();
  if (std::abs(tr) < 1e-300) throw NumericalError("densityRates: state has zero trace");
  r.loss = -2.0 * model.gamma2 * (env.local(site, ops.pairDensity) / tr).real();

  for (int b : {site - 1, site}) {
    if (b < 0 || b + 1 >= n) continue;
    const MatrixXc rho = reducedDensityMatrix(state, b);
    const MatrixXc num = b == site ? MatrixXc(Eigen::kroneckerProduct(ops.number, id))
                                   : MatrixXc(Eigen::kroneckerProduct(id, ops.number));
    r.flux += bondRate(rho, bondLiouvillian(model, b, hop), num);
    r.diffusion += bondRate(rho, bondLiouvillian(model, b, diff), num);
  }
  return r;
}

ObservableRecord recordObservables(const SuperketMPS& state, const LatticeModel& model, double time,
                                   const RecorderOptions& options) {
  const int n = state.nSites();
  const LocalOps ops = buildLocalOps(model.fockCutoff);
  TraceEnvironment env(state);
  const Complex tr = env.trace();
  if (std::abs(tr) < 1e-300) throw NumericalError("recordObservables: state has zero trace");

  ObservableRecord rec;
  rec.time = time;
  rec.timeScaled = std::isfinite(options.timeUnit) ? time / options.timeUnit : kUndefined;
  rec.referenceSite = options.referenceSite < 0 ? n / 2 : options.referenceSite;
  if (rec.referenceSite >= n) throw std::out_of_range("recordObservables: reference site out of range");
  rec.trace = tr.real();
  rec.maxImaginary = std::abs(tr.imag());
  rec.cumulativeDiscard = state.cumulativeDiscard();
  rec.maxBond = state.maxBondDim();

  rec.density.resize(n);
  rec.g2Local.resize(n);
  std::vector<double> pair(n);
  for (int l = 0; l < n; ++l) {
    const Complex nl = env.local(l, ops.number) / tr;
    const Complex pl = env.local(l, ops.pairDensity) / tr;
    rec.maxImaginary = maxImag(maxImag(rec.maxImaginary, nl), pl);
    rec.density[l] = nl.real();
    pair[l] = pl.real();
  }
  rec.totalN = 0.0;
  for (double x : rec.density) rec.totalN += x;
  for (int l = 0; l < n; ++l) {
    const double nl = rec.density[l];
    rec.g2Local[l] = nl > options.densityFloor ? pair[l] / (nl * nl) : kUndefined;
  }

  const int ref = rec.referenceSite;
  const VectorXc row = env.row(ref, ops.number, ops.pairDensity) / tr;
  rec.g2Row.resize(n);
  const double nRef = rec.density[ref];
  for (int m = 0; m < n; ++m) {
    rec.maxImaginary = maxImag(rec.maxImaginary, row[m]);
    const double nm = rec.density[m];
    if (m == ref) {
      rec.g2Row[m] = rec.g2Local[ref];
    } else {
      rec.g2Row[m] = (nRef > options.densityFloor && nm > options.densityFloor) ? row[m].real() / (nRef * nm) : kUndefined;
    }
  }

  if (options.rates) {
    const DensityRates r = densityRates(state, model, ref);
    rec.lossRate = r.loss;
    rec.fluxRate = r.flux;
    rec.diffusionRate = r.diffusion;
  }
  return rec;
}

DecayCheckReport densityDecayCheck(const ObservableSeries& series, const LatticeModel& model, int site,
                                   double minDensity) {
  const auto& recs = series.records;
  if (recs.size() < 3) throw std::invalid_argument("densityDecayCheck: need at least 3 records");
  if (site < 0 || site >= model.nSites) throw std::out_of_range("densityDecayCheck: site out of range");

  DecayCheckReport rep;
  rep.site = site;
  const std::size_t k = recs.size();
  std::vector<double> g2(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto& r = recs[i];
    if (static_cast<int>(r.density.size()) <= site) throw std::invalid_argument("densityDecayCheck: record too short");
    if (i > 0 && !(r.time > recs[i - 1].time)) throw std::invalid_argument("densityDecayCheck: times not increasing");
    rep.times.push_back(r.time);
    rep.timesScaled.push_back(r.timeScaled);
    rep.recorded.push_back(r.density[site]);
    // below the floor the pair term is negligible anyway
    g2[i] = std::isfinite(r.g2Local[site]) ? r.g2Local[site] : 0.0;
  }

  const double rate = 2.0 * model.gamma2;
  auto g2At = [&](std::size_t i, double s) { return g2[i] + s * (g2[i + 1] - g2[i]); };
  auto integrate = [&](bool unity) {
    std::vector<double> out(k);
    double n = rep.recorded[0];
    out[0] = n;
    for (std::size_t i = 0; i + 1 < k; ++i) {
      const double span = rep.times[i + 1] - rep.times[i];
      // substeps sized so that the local step is small against the loss time
      const double scale = rate * std::max(std::abs(n), 1e-300) * std::max({g2[i], g2[i + 1], unity ? 1.0 : 0.0, 1e-300});
      const int sub = std::clamp(static_cast<int>(std::ceil(span * scale / 1e-3)), 16, 1 << 20);
      const double h = span / sub;
      auto f = [&](double s, double y) { return -rate * (unity ? 1.0 : g2At(i, s)) * y * y; };
      for (int j = 0; j < sub; ++j) {
        const double s0 = static_cast<double>(j) / sub, s1 = (j + 0.5) / sub, s2 = static_cast<double>(j + 1) / sub;
        const double k1 = f(s0, n);
        const double k2 = f(s1, n + 0.5 * h * k1);
        const double k3 = f(s1, n + 0.5 * h * k2);
        const double k4 = f(s2, n + h * k3);
        n += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
      }
      out[i + 1] = n;
    }
    return out;
  };
  rep.odeDensity = integrate(false);
  rep.unityDensity = integrate(true);

  rep.relDeviation.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double rec = rep.recorded[i];
    if (rec > minDensity && rec > 0.0) {
      rep.relDeviation[i] = std::abs(rep.odeDensity[i] - rec) / rec;
      rep.maxRelDeviation = std::max(rep.maxRelDeviation, rep.relDeviation[i]);
    } else {
      rep.relDeviation[i] = kUndefined;
    }
  }

  rep.balanceResidual.assign(k, kUndefined);
  double worst = kUndefined;
  for (std::size_t i = 1; i + 1 < k; ++i) {
    const auto& r = recs[i];
    if (r.referenceSite != site || r.lossRate == 0.0) continue;
    if (!(rep.recorded[i] > minDensity)) continue;
    const double fd = (rep.recorded[i + 1] - rep.recorded[i - 1]) / (rep.times[i + 1] - rep.times[i - 1]);
    const double total = r.lossRate + r.fluxRate + r.diffusionRate;
    rep.balanceResidual[i] = std::abs(fd - total) / std::abs(r.lossRate);
    worst = std::isnan(worst) ? rep.balanceResidual[i] : std::max(worst, rep.balanceResidual[i]);
  }
  rep.maxBalanceResidual = worst;

  rep.lossResidual.assign(k, kUndefined);
  worst = kUndefined;
  for (std::size_t i = 0; i < k; ++i) {
    const auto& r = recs[i];
    if (r.referenceSite != site || r.lossRate == 0.0) continue;
    if (!(rep.recorded[i] > minDensity)) continue;
    rep.lossResidual[i] = std::abs(r.fluxRate + r.diffusionRate) / std::abs(r.lossRate);
    worst = std::isnan(worst) ? rep.lossResidual[i] : std::max(worst, rep.lossResidual[i]);
  }
  rep.maxLossResidual = worst;
  return rep;
}

double tonksAsymptote(double gAbs, double nPh) {
  if (!(gAbs > 0.0)) throw std::invalid_argument("tonksAsymptote: gAbs must be positive");
  return (1.0 - 1.0 / (nPh * nPh)) * 4.0 * std::numbers::pi * std::numbers::pi / (3.0 * gAbs * gAbs);
}

}  // namespace dtebd
