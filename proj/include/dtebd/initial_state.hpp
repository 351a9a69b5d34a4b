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

#include <string>
#include <utility>
#include <vector>

namespace dtebd {

enum class ProfileKind { Gaussian, FlatTop, Tabulated };

std::string toString(ProfileKind k);
ProfileKind profileKindFromString(const std::string& s);

/// Positions are fractions of the box; site l sits at l / nSites.
struct PulseProfile {
  ProfileKind kind = ProfileKind::FlatTop;
  double center = 0.5;
  double width = 0.6;  ///< plateau width (flatTop) or full width at half maximum (gaussian)
  double edge = 0.2;   ///< raised-cosine shoulder width for flatTop
  std::vector<std::pair<double, double>> table;  ///< (position, relative density), tabulated only

  void validate() const;
};

/// Real non-negative amplitudes with sum |c_l|^2 = meanN0.
std::vector<Complex> buildProfile(const PulseProfile& profile, const LatticeModel& model, double meanN0);

/// Two whitespace-separated columns; '#' starts a comment.
std::vector<std::pair<double, double>> readProfileTable(const std::string& path);

inline constexpr double kMaxCutoffTail = 1e-3;

}  // namespace dtebd
