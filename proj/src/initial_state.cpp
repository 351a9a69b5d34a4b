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

#include "dtebd/initial_state.hpp"

#include "dtebd/superket.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace dtebd {

std::string toString(ProfileKind k) {
  switch (k) {
    case ProfileKind::Gaussian:
      return "gaussian";
    case ProfileKind::FlatTop:
      return "flatTop";
    case ProfileKind::Tabulated:
      return "tabulated";
  }
  return "?";
}

ProfileKind profileKindFromString(const std::string& s) {
  if (s == "gaussian") return ProfileKind::Gaussian;
  if (s == "flatTop") return ProfileKind::FlatTop;
  if (s == "tabulated") return ProfileKind::Tabulated;
  throw std::invalid_argument("profile.kind must be gaussian, flatTop or tabulated (got '" + s + "')");
}

void PulseProfile::validate() const {
  if (!std::isfinite(center)) throw std::invalid_argument("profile.center must be finite");
  if (kind != ProfileKind::Tabulated && !(width > 0.0)) throw std::invalid_argument("profile.width must be positive");
  if (!(edge >= 0.0)) throw std::invalid_argument("profile.edge must be non-negative");
  if (kind == ProfileKind::Tabulated) {
    if (table.size() < 2) throw std::invalid_argument("profile.table needs at least two rows");
    for (std::size_t i = 0; i < table.size(); ++i) {
      if (table[i].second < 0.0 || !std::isfinite(table[i].second)) {
        throw std::invalid_argument("profile.table densities must be finite and non-negative");
      }
      if (i > 0 && !(table[i].first > table[i - 1].first)) {
        throw std::invalid_argument("profile.table positions must be strictly increasing");
      }
    }
  }
}

namespace {

double shape(const PulseProfile& p, double x) {
  switch (p.kind) {
    case ProfileKind::Gaussian: {
      const double sigma = p.width / (2.0 * std::sqrt(2.0 * std::log(2.0)));
      const double u = (x - p.center) / sigma;
      return std::exp(-0.5 * u * u);
    }
    case ProfileKind::FlatTop: {
      const double r = std::abs(x - p.center) - 0.5 * p.width;
      if (r <= 0.0) return 1.0;
      if (r >= p.edge) return 0.0;
      return 0.5 * (1.0 + std::cos(std::numbers::pi * r / p.edge));
    }
    case ProfileKind::Tabulated: {
      const auto& t = p.table;
      if (x < t.front().first || x > t.back().first) return 0.0;
      auto hi = std::lower_bound(t.begin(), t.end(), x, [](const auto& row, double v) { return row.first < v; });
      if (hi == t.begin()) return hi->second;
      auto lo = hi - 1;
      const double s = (x - lo->first) / (hi->first - lo->first);
      return lo->second + s * (hi->second - lo->second);
    }
  }
  return 0.0;
}

}  // namespace

std::vector<Complex> buildProfile(const PulseProfile& profile, const LatticeModel& model, double meanN0) {
  profile.validate();
  if (!(meanN0 > 0.0)) throw std::invalid_argument("physical.meanN0 must be positive");
  const int n = model.nSites;
  std::vector<double> dens(static_cast<std::size_t>(n));
  double total = 0.0;
  for (int l = 0; l < n; ++l) {
    dens[l] = shape(profile, static_cast<double>(l) / n);
    total += dens[l];
  }
  if (!(total > 0.0)) throw std::invalid_argument("profile has no weight on the grid");

  std::vector<Complex> amps(static_cast<std::size_t>(n));
  for (int l = 0; l < n; ++l) {
    const double x = dens[l] * meanN0 / total;
    const double tail = coherentTailWeight(x, model.fockCutoff);
    if (tail > kMaxCutoffTail) {
      std::ostringstream ss;
      ss << "cutoff violation: site " << l << " has occupancy " << x << " and truncated weight " << tail
         << " > " << kMaxCutoffTail << " for fockCutoff " << model.fockCutoff;
      throw std::invalid_argument(ss.str());
    }
    amps[l] = std::sqrt(x);
  }
  return amps;
}

std::vector<std::pair<double, double>> readProfileTable(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open profile table '" + path + "'");
  std::vector<std::pair<double, double>> rows;
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    std::istringstream ss(line);
    double x, y;
    if (!(ss >> x)) continue;
    if (!(ss >> y)) throw std::invalid_argument(path + ":" + std::to_string(lineNo) + ": expected two columns");
    rows.emplace_back(x, y);
  }
  return rows;
}

}  // namespace dtebd
