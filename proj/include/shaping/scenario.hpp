// Copyright 2026 The traffic-shaping Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <string>
#include <vector>

namespace shaping {

struct Interval {
  double lo = 0.0;
  double hi = 1.0;

  double span() const { return hi - lo; }
  double clamp(double x) const { return x < lo ? lo : (x > hi ? hi : x); }
  bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Core problem description: user groups, target sets, per-set exposure
/// floors (counts per horizon), and the bonus grid resolution.
struct Scenario {
  int n_groups = 0;
  int n_sets = 0;
  std::vector<double> requirements;  // r_j, expected-exposure floor per horizon
  int grid_k = 1;                    // bonus interval subdivision count
  Interval bonus_domain{0.0, 1.0};

  int cell_count() const { return n_groups * n_sets; }
  int cell_index(int group, int set) const { return group * n_sets + set; }
};

/// The probed bonus values: lo, lo + span/k, ..., hi. k+1 points.
struct BonusGrid {
  std::vector<double> points;

  static BonusGrid make(const Interval& domain, int k) {
    BonusGrid g;
    g.points.reserve(static_cast<std::size_t>(k) + 1);
    for (int t = 0; t <= k; ++t) {
      g.points.push_back(domain.lo +
                         domain.span() * static_cast<double>(t) / static_cast<double>(k));
    }
    g.points.front() = domain.lo;
    g.points.back() = domain.hi;
    return g;
  }

  int size() const { return static_cast<int>(points.size()); }
  double operator[](int t) const { return points[static_cast<std::size_t>(t)]; }

  /// Tolerant lookup of a bonus value; -1 when absent.
  int index_of(double bonus) const {
    for (int t = 0; t < size(); ++t) {
      const double p = points[static_cast<std::size_t>(t)];
      if (std::abs(bonus - p) <= 1e-9 * std::max(1.0, std::abs(p))) return t;
    }
    return -1;
  }
};

/// A named invariant breach. Violations are data, not faults: validation
/// reports all of them instead of stopping at the first.
struct Violation {
  std::string code;
  std::string detail;
};

inline std::vector<Violation> validate_scenario(const Scenario& s) {
  std::vector<Violation> out;
  auto flag = [&out](const char* code, std::string detail) {
    out.push_back({code, std::move(detail)});
  };
  if (s.n_groups < 1) flag("EMPTY_GROUPS", "n_groups must be at least 1");
  if (s.n_sets < 1) flag("EMPTY_SETS", "n_sets must be at least 1");
  if (static_cast<int>(s.requirements.size()) != s.n_sets) {
    flag("REQUIREMENT_COUNT_MISMATCH",
         "expected one exposure floor per set, got " +
             std::to_string(s.requirements.size()));
  }
  for (std::size_t j = 0; j < s.requirements.size(); ++j) {
    const double r = s.requirements[j];
    if (!(r >= 0.0) || !std::isfinite(r)) {
      flag("NEGATIVE_REQUIREMENT",
           "set " + std::to_string(j) + " floor " + std::to_string(r));
    }
  }
  if (s.grid_k < 1) flag("GRID_TOO_COARSE", "grid_k must be at least 1");
  if (!std::isfinite(s.bonus_domain.lo) || !std::isfinite(s.bonus_domain.hi) ||
      !(s.bonus_domain.span() > 0.0)) {
    flag("BONUS_DOMAIN_DEGENERATE", "bonus domain must be a non-degenerate interval");
  }
  return out;
}

}  // namespace shaping
