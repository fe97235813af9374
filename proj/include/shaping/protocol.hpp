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

#include <vector>

#include "shaping/hull.hpp"
#include "shaping/metrics.hpp"
#include "shaping/policy.hpp"
#include "shaping/probe.hpp"
#include "shaping/program.hpp"
#include "shaping/scenario.hpp"

namespace shaping {

/// Everything the shaping pipeline produces from one probe table.
struct ProtocolArtifacts {
  std::vector<HullCurve> curves;  // per cell
  ShapingProgram program;
  SolveResult solution;  // greedy, prefix form
  StochasticPolicy policy;
  PolicyExpectation expectation;  // against the solving table
};

/// frontier -> covering program -> greedy fill -> two-point mixing policy.
inline ProtocolArtifacts run_protocol(const Scenario& scenario, const ProbeTable& table) {
  ProtocolArtifacts art;
  art.curves.reserve(static_cast<std::size_t>(scenario.cell_count()));
  for (int i = 0; i < scenario.n_groups; ++i) {
    for (int j = 0; j < scenario.n_sets; ++j) {
      art.curves.push_back(cell_frontier(table.cell(i, j), table.grid));
    }
  }
  art.program = build_program(art.curves, scenario);
  art.solution = solve_greedy(art.program);
  art.policy = derive_policy(art.solution, art.program);
  art.expectation = policy_expectation(art.policy, table);
  return art;
}

}  // namespace shaping
