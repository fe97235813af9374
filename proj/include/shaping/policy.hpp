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
#include "shaping/rng.hpp"

namespace shaping {

/// Randomized bonus rule for one cell: play bonus_high with probability
/// p_high, else bonus_low. Both endpoints are frontier vertices of the cell;
/// p_high in {0, 1} makes the rule deterministic.
struct MixedAssignment {
  int group = 0;
  int set = 0;
  double bonus_low = 0.0;
  double bonus_high = 0.0;
  double p_high = 0.0;
};

struct StochasticPolicy {
  int n_groups = 0;
  int n_sets = 0;
  std::vector<MixedAssignment> cells;  // complete, group * n_sets + set

  int cell_index(int group, int set) const { return group * n_sets + set; }
  const MixedAssignment& cell(int group, int set) const {
    return cells[static_cast<std::size_t>(cell_index(group, set))];
  }
};

/// Turns a prefix-form allocation into the two-point mixing rule: per cell,
/// the deepest positively allocated segment is played fractionally
/// (p_high = allocation / width, an exposure-space weight) and everything
/// before it is saturated. Cells with no allocation play their baseline
/// bonus deterministically.
inline StochasticPolicy derive_policy(const SolveResult& result, const ShapingProgram& p) {
  if (!is_prefix_form(result.allocation, p)) {
    throw std::invalid_argument("derive_policy: allocation is not in prefix form");
  }
  StochasticPolicy policy;
  policy.n_groups = p.n_groups;
  policy.n_sets = p.n_sets;
  policy.cells.resize(static_cast<std::size_t>(p.n_groups * p.n_sets));

  for (int i = 0; i < p.n_groups; ++i) {
    for (int j = 0; j < p.n_sets; ++j) {
      const std::size_t cell = static_cast<std::size_t>(p.cell_index(i, j));
      const CellBaseline& base = p.baselines[cell];
      MixedAssignment mix;
      mix.group = i;
      mix.set = j;
      mix.bonus_low = base.bonus;
      mix.bonus_high = base.bonus;
      mix.p_high = 0.0;
      policy.cells[cell] = mix;
    }
  }

  for (std::size_t s = 0; s < p.segments.size(); ++s) {
    if (result.allocation[s] <= 0.0) continue;
    const Segment& seg = p.segments[s];
    const std::size_t cell = static_cast<std::size_t>(p.cell_index(seg.group, seg.set));
    MixedAssignment& mix = policy.cells[cell];
    // Segments of a cell appear in frontier order, so the last positive
    // one seen is the fractional tail.
    mix.bonus_low = seg.bonus_left;
    mix.bonus_high = seg.bonus_right;
    mix.p_high = std::clamp(result.allocation[s] / seg.width, 0.0, 1.0);
    if (mix.bonus_low == mix.bonus_high) mix.p_high = 0.0;  // degenerate pair
  }
  return policy;
}

/// One independent draw per cell; the stream is derived from
/// (seed, group, set) so results do not depend on iteration order.
inline std::vector<double> sample_policy(const StochasticPolicy& policy, std::uint64_t seed) {
  std::vector<double> bonuses(policy.cells.size(), 0.0);
  for (const MixedAssignment& mix : policy.cells) {
    auto rng = derive_stream(seed, stream_tag::policy_sample, mix.group, mix.set);
    const bool high = rng.bernoulli(mix.p_high);
    bonuses[static_cast<std::size_t>(policy.cell_index(mix.group, mix.set))] =
        high ? mix.bonus_high : mix.bonus_low;
  }
  return bonuses;
}

}  // namespace shaping
