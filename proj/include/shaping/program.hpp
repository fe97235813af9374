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
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "shaping/hull.hpp"
#include "shaping/scenario.hpp"

namespace shaping {

/// One frontier edge, in exposure units: buying `width` exposures on this
/// segment costs `loss_rate` reward per exposure. Within a cell the loss
/// rates are non-decreasing (frontier concavity), which is what makes the
/// greedy fill optimal and the prefix form free.
struct Segment {
  int group = 0;
  int set = 0;
  int index = 0;  // position along the cell's frontier
  double width = 0.0;
  double loss_rate = 0.0;
  double bonus_left = 0.0, bonus_right = 0.0;
  double exposure_left = 0.0, exposure_right = 0.0;
  double reward_left = 0.0, reward_right = 0.0;
};

/// Minimum-exposure frontier vertex of a cell: where the cell sits when no
/// exposure is bought for it.
struct CellBaseline {
  double bonus = 0.0;
  double exposure = 0.0;
  double reward = 0.0;
};

/// The linearized covering program: per-set coverage floors over box-bounded
/// segment variables, all in exposure units.
struct ShapingProgram {
  int n_groups = 0;
  int n_sets = 0;
  std::vector<Segment> segments;
  std::vector<CellBaseline> baselines;     // per cell, group * n_sets + set
  std::vector<double> baseline_exposures;  // b_j = sum of cell baselines per set
  double baseline_reward = 0.0;            // C = sum of all cell baseline rewards
  std::vector<double> coverage_rhs;        // R_j = r_j - b_j (may be negative)

  int cell_index(int group, int set) const { return group * n_sets + set; }
};

/// Allocation per segment plus the resulting objective and per-set status.
/// `set_slack[j]` is the coverage beyond R_j in exposure units; infeasible
/// sets carry best-effort saturation and a cleared flag.
struct SolveResult {
  std::vector<double> allocation;
  double objective = 0.0;
  std::vector<bool> set_feasible;
  std::vector<double> set_slack;
};

inline std::vector<Segment> build_segments(const HullCurve& curve, int group, int set) {
  std::vector<Segment> out;
  if (curve.vertices.size() < 2) return out;
  double max_exposure = 0.0;
  for (const FrontierPoint& p : curve.vertices) {
    max_exposure = std::max(max_exposure, std::abs(p.exposure));
  }
  const double min_width = 1e-12 * max_exposure;
  int index = 0;
  for (std::size_t v = 1; v < curve.vertices.size(); ++v) {
    const FrontierPoint& a = curve.vertices[v - 1];
    const FrontierPoint& b = curve.vertices[v];
    const double width = b.exposure - a.exposure;
    if (width <= min_width) continue;  // no usable exposure capacity
    Segment s;
    s.group = group;
    s.set = set;
    s.index = index++;
    s.width = width;
    s.loss_rate = (a.reward - b.reward) / width;
    s.bonus_left = a.bonus;
    s.bonus_right = b.bonus;
    s.exposure_left = a.exposure;
    s.exposure_right = b.exposure;
    s.reward_left = a.reward;
    s.reward_right = b.reward;
    out.push_back(s);
  }
  return out;
}

/// Assembles the covering program from one frontier per (group, set) cell.
/// `curves` is indexed group * n_sets + set.
inline ShapingProgram build_program(const std::vector<HullCurve>& curves,
                                    const Scenario& scenario) {
  if (static_cast<int>(curves.size()) != scenario.cell_count()) {
    throw std::invalid_argument("build_program: one curve per (group, set) cell required");
  }
  ShapingProgram p;
  p.n_groups = scenario.n_groups;
  p.n_sets = scenario.n_sets;
  p.baselines.resize(curves.size());
  p.baseline_exposures.assign(static_cast<std::size_t>(scenario.n_sets), 0.0);
  for (int i = 0; i < scenario.n_groups; ++i) {
    for (int j = 0; j < scenario.n_sets; ++j) {
      const HullCurve& curve = curves[static_cast<std::size_t>(p.cell_index(i, j))];
      if (curve.vertices.empty()) {
        throw std::invalid_argument("build_program: empty frontier curve");
      }
      const FrontierPoint& base = curve.vertices.front();
      p.baselines[static_cast<std::size_t>(p.cell_index(i, j))] = {base.bonus, base.exposure,
                                                                   base.reward};
      p.baseline_exposures[static_cast<std::size_t>(j)] += base.exposure;
      p.baseline_reward += base.reward;
      auto segs = build_segments(curve, i, j);
      p.segments.insert(p.segments.end(), segs.begin(), segs.end());
    }
  }
  p.coverage_rhs.reserve(static_cast<std::size_t>(scenario.n_sets));
  for (int j = 0; j < scenario.n_sets; ++j) {
    p.coverage_rhs.push_back(scenario.requirements[static_cast<std::size_t>(j)] -
                             p.baseline_exposures[static_cast<std::size_t>(j)]);
  }
  return p;
}

inline double program_objective(const ShapingProgram& p, const std::vector<double>& allocation) {
  double loss = 0.0;
  for (std::size_t s = 0; s < p.segments.size(); ++s) {
    loss += p.segments[s].loss_rate * allocation[s];
  }
  return p.baseline_reward - loss;
}

/// Greedy fill, per set independently: segments in ascending loss-rate order
/// (ties broken by group then frontier index) until the coverage floor is
/// met. Segments with negative loss rate — a frontier that still rises, which
/// happens under probe noise — are always saturated since they improve the
/// objective; this keeps the greedy equal to the exact LP optimum. A set
/// whose total capacity cannot reach R_j is flagged infeasible and saturated
/// best-effort.
inline SolveResult solve_greedy(const ShapingProgram& p) {
  SolveResult r;
  r.allocation.assign(p.segments.size(), 0.0);
  r.set_feasible.assign(static_cast<std::size_t>(p.n_sets), true);
  r.set_slack.assign(static_cast<std::size_t>(p.n_sets), 0.0);

  std::vector<std::vector<std::size_t>> by_set(static_cast<std::size_t>(p.n_sets));
  for (std::size_t s = 0; s < p.segments.size(); ++s) {
    by_set[static_cast<std::size_t>(p.segments[s].set)].push_back(s);
  }

  for (int j = 0; j < p.n_sets; ++j) {
    auto& order = by_set[static_cast<std::size_t>(j)];
    std::sort(order.begin(), order.end(), [&p](std::size_t a, std::size_t b) {
      const Segment& sa = p.segments[a];
      const Segment& sb = p.segments[b];
      if (sa.loss_rate != sb.loss_rate) return sa.loss_rate < sb.loss_rate;
      if (sa.group != sb.group) return sa.group < sb.group;
      return sa.index < sb.index;
    });

    const double rhs = std::max(p.coverage_rhs[static_cast<std::size_t>(j)], 0.0);
    double capacity = 0.0;
    for (std::size_t s : order) capacity += p.segments[s].width;
    const bool feasible = rhs <= capacity + 1e-9 * std::max(1.0, rhs);
    r.set_feasible[static_cast<std::size_t>(j)] = feasible;

    double need = rhs;
    for (std::size_t s : order) {
      const Segment& seg = p.segments[s];
      double take = 0.0;
      if (!feasible || seg.loss_rate < 0.0) {
        take = seg.width;
      } else if (need > 0.0) {
        take = std::min(seg.width, need);
      } else {
        break;
      }
      r.allocation[s] = take;
      need -= take;
    }
    double covered = 0.0;
    for (std::size_t s : order) covered += r.allocation[s];
    r.set_slack[static_cast<std::size_t>(j)] =
        covered - p.coverage_rhs[static_cast<std::size_t>(j)];
  }
  r.objective = program_objective(p, r.allocation);
  return r;
}

/// Re-expresses an allocation so that, within every cell, segments are
/// saturated in frontier order with at most one fractional tail. Per-cell
/// totals are preserved; the objective never worsens because loss rates are
/// non-decreasing along each frontier.
inline std::vector<double> canonicalize_prefix(const std::vector<double>& allocation,
                                               const ShapingProgram& p) {
  if (allocation.size() != p.segments.size()) {
    throw std::invalid_argument("canonicalize_prefix: allocation size mismatch");
  }
  std::vector<double> totals(static_cast<std::size_t>(p.n_groups * p.n_sets), 0.0);
  for (std::size_t s = 0; s < p.segments.size(); ++s) {
    const Segment& seg = p.segments[s];
    totals[static_cast<std::size_t>(p.cell_index(seg.group, seg.set))] += allocation[s];
  }
  std::vector<double> out(allocation.size(), 0.0);
  // Segments of one cell are contiguous and frontier-ordered in p.segments.
  for (std::size_t s = 0; s < p.segments.size(); ++s) {
    const Segment& seg = p.segments[s];
    double& remaining = totals[static_cast<std::size_t>(p.cell_index(seg.group, seg.set))];
    const double take = std::min(seg.width, std::max(remaining, 0.0));
    out[s] = take;
    remaining -= take;
  }
  return out;
}

/// True iff each cell's allocation saturates a prefix of its frontier with at
/// most one fractional segment and zeros after.
inline bool is_prefix_form(const std::vector<double>& allocation, const ShapingProgram& p,
                           double rel_tol = 1e-9) {
  std::vector<bool> broken(static_cast<std::size_t>(p.n_groups * p.n_sets), false);
  for (std::size_t s = 0; s < p.segments.size(); ++s) {
    const Segment& seg = p.segments[s];
    const std::size_t cell = static_cast<std::size_t>(p.cell_index(seg.group, seg.set));
    const double tol = rel_tol * std::max(1.0, seg.width);
    if (broken[cell] && allocation[s] > tol) return false;
    if (allocation[s] < seg.width - tol) broken[cell] = true;
  }
  return true;
}

}  // namespace shaping
