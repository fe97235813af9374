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

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "shaping/program.hpp"
#include "shaping/simplex.hpp"

namespace shaping {

/// Cross-check solver: the same covering program handed to a generic dense
/// simplex, one LP per set, then canonicalized to prefix form. Shares no
/// solution logic with solve_greedy; the two must agree on the objective.
inline SolveResult solve_reference(const ShapingProgram& p) {
  SolveResult r;
  r.allocation.assign(p.segments.size(), 0.0);
  r.set_feasible.assign(static_cast<std::size_t>(p.n_sets), true);
  r.set_slack.assign(static_cast<std::size_t>(p.n_sets), 0.0);

  std::vector<std::vector<std::size_t>> by_set(static_cast<std::size_t>(p.n_sets));
  for (std::size_t s = 0; s < p.segments.size(); ++s) {
    by_set[static_cast<std::size_t>(p.segments[s].set)].push_back(s);
  }

  for (int j = 0; j < p.n_sets; ++j) {
    const auto& ids = by_set[static_cast<std::size_t>(j)];
    const double rhs = std::max(p.coverage_rhs[static_cast<std::size_t>(j)], 0.0);
    double capacity = 0.0;
    for (std::size_t s : ids) capacity += p.segments[s].width;
    if (rhs > capacity + 1e-9 * std::max(1.0, rhs)) {
      // Same best-effort convention as solve_greedy.
      r.set_feasible[static_cast<std::size_t>(j)] = false;
      for (std::size_t s : ids) r.allocation[s] = p.segments[s].width;
      continue;
    }
    if (ids.empty()) continue;

    // maximize sum(-loss_t * x_t)  s.t.  x_t <= width_t, -sum(x_t) <= -rhs.
    const std::size_t n = ids.size();
    std::vector<std::vector<double>> a(n + 1, std::vector<double>(n, 0.0));
    std::vector<double> b(n + 1, 0.0);
    std::vector<double> c(n, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      a[t][t] = 1.0;
      b[t] = p.segments[ids[t]].width;
      a[n][t] = -1.0;
      c[t] = -p.segments[ids[t]].loss_rate;
    }
    b[n] = -rhs;

    std::vector<double> x;
    const double value = DenseSimplex(a, b, c).solve(x);
    if (!std::isfinite(value)) {
      throw std::runtime_error("solve_reference: simplex failed on a pre-checked set");
    }
    for (std::size_t t = 0; t < n; ++t) {
      r.allocation[ids[t]] = std::clamp(x[t], 0.0, p.segments[ids[t]].width);
    }
  }

  r.allocation = canonicalize_prefix(r.allocation, p);
  for (int j = 0; j < p.n_sets; ++j) {
    double covered = 0.0;
    for (std::size_t s : by_set[static_cast<std::size_t>(j)]) covered += r.allocation[s];
    r.set_slack[static_cast<std::size_t>(j)] = covered - p.coverage_rhs[static_cast<std::size_t>(j)];
  }
  r.objective = program_objective(p, r.allocation);
  return r;
}

}  // namespace shaping
