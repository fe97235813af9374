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

#include <stdexcept>
#include <string>
#include <vector>

#include "shaping/scenario.hpp"

namespace shaping {

/// Estimated responses of one (group, set) cell on the bonus grid:
/// exposure[t] and reward[t] are expected counts per horizon at grid point t,
/// with per-point standard errors (zero for exact probes).
struct ProbeCell {
  std::vector<double> exposure;
  std::vector<double> reward;
  std::vector<double> exposure_stderr;
  std::vector<double> reward_stderr;
};

/// Complete probe estimates over all (group, set, grid point) triples, plus
/// the global error caps that enter the certification slack terms.
struct ProbeTable {
  int n_groups = 0;
  int n_sets = 0;
  BonusGrid grid;
  std::vector<ProbeCell> cells;  // index group * n_sets + set
  double eps_exposure = 0.0;     // worst-case exposure estimation error
  double eps_reward = 0.0;       // worst-case reward estimation error

  int cell_index(int group, int set) const { return group * n_sets + set; }

  const ProbeCell& cell(int group, int set) const {
    return cells[static_cast<std::size_t>(cell_index(group, set))];
  }
  ProbeCell& cell(int group, int set) {
    return cells[static_cast<std::size_t>(cell_index(group, set))];
  }
};

inline std::vector<Violation> validate_probe_table(const ProbeTable& t) {
  std::vector<Violation> out;
  if (static_cast<int>(t.cells.size()) != t.n_groups * t.n_sets) {
    out.push_back({"PROBE_TABLE_INCOMPLETE",
                   "expected " + std::to_string(t.n_groups * t.n_sets) +
                       " cells, got " + std::to_string(t.cells.size())});
    return out;
  }
  const std::size_t points = static_cast<std::size_t>(t.grid.size());
  for (std::size_t c = 0; c < t.cells.size(); ++c) {
    const ProbeCell& cell = t.cells[c];
    if (cell.exposure.size() != points || cell.reward.size() != points ||
        cell.exposure_stderr.size() != points || cell.reward_stderr.size() != points) {
      out.push_back({"PROBE_TABLE_INCOMPLETE",
                     "cell " + std::to_string(c) + " missing grid points"});
      continue;
    }
    for (std::size_t p = 0; p < points; ++p) {
      if (cell.exposure[p] < 0.0 || cell.reward[p] < 0.0) {
        out.push_back({"NEGATIVE_ESTIMATE",
                       "cell " + std::to_string(c) + " point " + std::to_string(p)});
        break;
      }
    }
  }
  if (t.eps_exposure < 0.0 || t.eps_reward < 0.0) {
    out.push_back({"NEGATIVE_ERROR_CAP", "error caps must be non-negative"});
  }
  return out;
}

/// Shape compatibility between a scenario and a probe artifact.
inline bool probe_matches_scenario(const ProbeTable& t, const Scenario& s) {
  return t.n_groups == s.n_groups && t.n_sets == s.n_sets &&
         t.grid.size() == s.grid_k + 1 &&
         t.grid.index_of(s.bonus_domain.lo) == 0 &&
         t.grid.index_of(s.bonus_domain.hi) == s.grid_k;
}

}  // namespace shaping
