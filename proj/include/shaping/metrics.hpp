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
#include <span>
#include <stdexcept>
#include <vector>

#include "shaping/policy.hpp"
#include "shaping/probe.hpp"

namespace shaping {

/// Mean over sets of min(achieved, required) / required. Sets with a zero
/// floor have nothing to comply with and contribute 1. All floors zero (or
/// no sets) gives 1.
inline double compliance_rate(std::span<const double> achieved, std::span<const double> required) {
  if (achieved.size() != required.size()) {
    throw std::invalid_argument("compliance_rate: length mismatch");
  }
  if (required.empty()) return 1.0;
  double sum = 0.0;
  for (std::size_t j = 0; j < required.size(); ++j) {
    sum += required[j] > 0.0 ? std::min(achieved[j], required[j]) / required[j] : 1.0;
  }
  return sum / static_cast<double>(required.size());
}

struct PolicyExpectation {
  std::vector<double> set_exposures;  // f̂_j
  double total_reward = 0.0;          // ĝ
};

/// Expected per-set exposures and total reward of a mixing policy, by
/// linearity of expectation over the independent per-cell coin flips. Every
/// policy endpoint must be a grid point of the table.
inline PolicyExpectation policy_expectation(const StochasticPolicy& policy,
                                            const ProbeTable& table) {
  if (policy.n_groups != table.n_groups || policy.n_sets != table.n_sets) {
    throw std::invalid_argument("policy_expectation: policy/table shape mismatch");
  }
  PolicyExpectation e;
  e.set_exposures.assign(static_cast<std::size_t>(table.n_sets), 0.0);
  for (const MixedAssignment& mix : policy.cells) {
    const int lo = table.grid.index_of(mix.bonus_low);
    const int hi = table.grid.index_of(mix.bonus_high);
    if (lo < 0 || hi < 0) {
      throw std::invalid_argument("policy_expectation: bonus endpoint not on the grid");
    }
    const ProbeCell& cell = table.cell(mix.group, mix.set);
    const double p = mix.p_high;
    e.set_exposures[static_cast<std::size_t>(mix.set)] +=
        (1.0 - p) * cell.exposure[static_cast<std::size_t>(lo)] +
        p * cell.exposure[static_cast<std::size_t>(hi)];
    e.total_reward += (1.0 - p) * cell.reward[static_cast<std::size_t>(lo)] +
                      p * cell.reward[static_cast<std::size_t>(hi)];
  }
  return e;
}

/// Outcome of one simulated horizon: what the policy promised in expectation
/// and what one realization delivered.
struct MetricsReport {
  std::vector<double> expected_exposures;  // per set; valid iff expected_available
  double expected_reward = 0.0;
  bool expected_available = false;

  std::vector<double> realized_exposures;  // per set
  double realized_clicks = 0.0;
  double realized_purchases = 0.0;  // sessions that bought (at most one buy per session)
  double realized_reward = 0.0;     // reward-channel units
  double realized_gmv = 0.0;
  long long sessions = 0;
  double purchase_rate = 0.0;  // purchases / sessions
  double compliance = 0.0;     // realized CR against the scenario floors
};

}  // namespace shaping
