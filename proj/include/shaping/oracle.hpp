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
#include <limits>
#include <stdexcept>
#include <vector>

#include "shaping/metrics.hpp"
#include "shaping/probe.hpp"
#include "shaping/scenario.hpp"

namespace shaping {

/// Raised when an instance exceeds the exhaustive-enumeration budget. The
/// oracle never approximates silently.
class budget_exceeded_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OracleBudget {
  int max_groups = 3;
  int max_sets = 3;
  int max_grid_k = 8;

  void check(const ProbeTable& table) const {
    if (table.n_groups > max_groups || table.n_sets > max_sets ||
        table.grid.size() > max_grid_k + 1) {
      throw budget_exceeded_error("oracle: instance exceeds the enumeration budget");
    }
  }
};

/// Witness mixture of one cell: pure grid point when t_low == t_high.
struct MixtureChoice {
  int group = 0;
  int set = 0;
  int t_low = 0;
  int t_high = 0;
  double p_high = 0.0;
};

struct MixtureOptimum {
  bool feasible = false;
  double value = 0.0;  // g*
  std::vector<bool> set_feasible;
  std::vector<MixtureChoice> witness;  // complete per cell when feasible
};

namespace detail {

// Enumerates, for one set, every basic solution of the one-constraint
// mixture program: each group plays a pure grid point except at most one,
// which mixes two points to pin the coverage constraint.
struct SetOptimum {
  bool feasible = false;
  double value = 0.0;
  std::vector<MixtureChoice> choice;  // one per group
};

inline SetOptimum best_set_mixture(const ProbeTable& table, int set, double floor_required) {
  const int n = table.n_groups;
  const int points = table.grid.size();
  SetOptimum best;
  best.value = -std::numeric_limits<double>::infinity();

  std::vector<const ProbeCell*> cells(static_cast<std::size_t>(n));
  double max_coverage = 0.0;
  for (int i = 0; i < n; ++i) {
    cells[static_cast<std::size_t>(i)] = &table.cell(i, set);
    double mx = 0.0;
    for (int t = 0; t < points; ++t) {
      mx = std::max(mx, cells[static_cast<std::size_t>(i)]->exposure[static_cast<std::size_t>(t)]);
    }
    max_coverage += mx;
  }
  if (max_coverage + 1e-9 * std::max(1.0, floor_required) < floor_required) {
    return best;  // even the most exposing pure profile cannot reach the floor
  }

  const double tol = 1e-9 * std::max(1.0, std::abs(floor_required));
  std::vector<int> pure(static_cast<std::size_t>(n), 0);
  const long long combos = static_cast<long long>(std::pow(points, n));

  auto record = [&](double value, const std::vector<int>& pure_pick, int mix_group, int ta,
                    int tb, double p_high) {
    if (value <= best.value) return;
    best.feasible = true;
    best.value = value;
    best.choice.assign(static_cast<std::size_t>(n), {});
    for (int i = 0; i < n; ++i) {
      MixtureChoice c;
      c.group = i;
      c.set = set;
      c.t_low = c.t_high = pure_pick[static_cast<std::size_t>(i)];
      c.p_high = 0.0;
      if (i == mix_group) {
        c.t_low = ta;
        c.t_high = tb;
        c.p_high = p_high;
      }
      best.choice[static_cast<std::size_t>(i)] = c;
    }
  };

  for (long long combo = 0; combo < combos; ++combo) {
    long long rest = combo;
    double f_others_all = 0.0, g_others_all = 0.0;
    for (int i = 0; i < n; ++i) {
      pure[static_cast<std::size_t>(i)] = static_cast<int>(rest % points);
      rest /= points;
      f_others_all += cells[static_cast<std::size_t>(i)]
                          ->exposure[static_cast<std::size_t>(pure[static_cast<std::size_t>(i)])];
      g_others_all += cells[static_cast<std::size_t>(i)]
                          ->reward[static_cast<std::size_t>(pure[static_cast<std::size_t>(i)])];
    }
    // All-pure profile.
    if (f_others_all + tol >= floor_required) {
      record(g_others_all, pure, -1, 0, 0, 0.0);
    }
    // One group replaced by a two-point mixture that meets the floor exactly.
    for (int i = 0; i < n; ++i) {
      const ProbeCell& cell = *cells[static_cast<std::size_t>(i)];
      const int own = pure[static_cast<std::size_t>(i)];
      const double f_rest =
          f_others_all - cell.exposure[static_cast<std::size_t>(own)];
      const double g_rest = g_others_all - cell.reward[static_cast<std::size_t>(own)];
      const double need = floor_required - f_rest;
      for (int ta = 0; ta < points; ++ta) {
        for (int tb = ta + 1; tb < points; ++tb) {
          const double fa = cell.exposure[static_cast<std::size_t>(ta)];
          const double fb = cell.exposure[static_cast<std::size_t>(tb)];
          if (fa == fb) continue;  // pure profiles already cover this
          const double p_high = (need - fa) / (fb - fa);
          if (p_high < -1e-12 || p_high > 1.0 + 1e-12) continue;
          const double p = std::clamp(p_high, 0.0, 1.0);
          const double value = g_rest + (1.0 - p) * cell.reward[static_cast<std::size_t>(ta)] +
                               p * cell.reward[static_cast<std::size_t>(tb)];
          record(value, pure, i, ta, tb, p);
        }
      }
    }
  }
  return best;
}

}  // namespace detail

/// Exact optimum of the grid-mixture relaxation: every cell may play any
/// probability mixture of its grid points, subject to the per-set expected
/// exposure floors. Sets decompose, and per set a basic optimum mixes in at
/// most one group, so exhaustive support enumeration is exact. Independent
/// of the frontier/program machinery by construction.
inline MixtureOptimum mixture_optimum(const ProbeTable& table, const Scenario& scenario,
                                      const OracleBudget& budget = {}) {
  budget.check(table);
  MixtureOptimum out;
  out.set_feasible.assign(static_cast<std::size_t>(table.n_sets), true);
  out.feasible = true;
  out.value = 0.0;
  for (int j = 0; j < table.n_sets; ++j) {
    const auto best =
        detail::best_set_mixture(table, j, scenario.requirements[static_cast<std::size_t>(j)]);
    if (!best.feasible) {
      out.set_feasible[static_cast<std::size_t>(j)] = false;
      out.feasible = false;
      continue;
    }
    out.value += best.value;
    out.witness.insert(out.witness.end(), best.choice.begin(), best.choice.end());
  }
  if (!out.feasible) {
    out.value = 0.0;
    out.witness.clear();
  }
  return out;
}

struct PureOptimum {
  bool feasible = false;
  double value = 0.0;
  std::vector<bool> set_feasible;
  std::vector<int> choice;  // grid index per cell when feasible
};

/// Best deterministic grid assignment meeting the floors; never exceeds
/// mixture_optimum. The benchmark that shows what the coin flip buys.
inline PureOptimum deterministic_grid_optimum(const ProbeTable& table, const Scenario& scenario,
                                              const OracleBudget& budget = {}) {
  budget.check(table);
  PureOptimum out;
  out.set_feasible.assign(static_cast<std::size_t>(table.n_sets), true);
  out.choice.assign(static_cast<std::size_t>(table.n_groups * table.n_sets), 0);
  out.feasible = true;
  const int points = table.grid.size();
  for (int j = 0; j < table.n_sets; ++j) {
    const double floor_required = scenario.requirements[static_cast<std::size_t>(j)];
    const double tol = 1e-9 * std::max(1.0, std::abs(floor_required));
    const long long combos = static_cast<long long>(std::pow(points, table.n_groups));
    double best = -std::numeric_limits<double>::infinity();
    std::vector<int> best_pick;
    std::vector<int> pick(static_cast<std::size_t>(table.n_groups), 0);
    for (long long combo = 0; combo < combos; ++combo) {
      long long rest = combo;
      double f = 0.0, g = 0.0;
      for (int i = 0; i < table.n_groups; ++i) {
        pick[static_cast<std::size_t>(i)] = static_cast<int>(rest % points);
        rest /= points;
        const ProbeCell& cell = table.cell(i, j);
        f += cell.exposure[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])];
        g += cell.reward[static_cast<std::size_t>(pick[static_cast<std::size_t>(i)])];
      }
      if (f + tol >= floor_required && g > best) {
        best = g;
        best_pick = pick;
      }
    }
    if (best_pick.empty()) {
      out.set_feasible[static_cast<std::size_t>(j)] = false;
      out.feasible = false;
      continue;
    }
    out.value += best;
    for (int i = 0; i < table.n_groups; ++i) {
      out.choice[static_cast<std::size_t>(i * table.n_sets + j)] =
          best_pick[static_cast<std::size_t>(i)];
    }
  }
  if (!out.feasible) out.value = 0.0;
  return out;
}

/// Certification record: protocol expectations against the floors and the
/// oracle optimum, with the probe-error slack terms.
struct CertificationReport {
  std::vector<double> expected_exposures;  // f̂_j
  double expected_reward = 0.0;            // ĝ
  double oracle_optimum = 0.0;             // g*
  bool oracle_feasible = false;
  double eps_exposure = 0.0;               // ε₁ from the probing stage
  double eps_reward = 0.0;                 // ε₂
  double grid_gap = 0.0;                   // δ: max adjacent-grid reward jump
  std::vector<double> exposure_margins;    // f̂_j + n·ε₁ − r_j
  double reward_margin = 0.0;              // ĝ + n·m·ε₂ − g*
  double reward_margin_with_gap = 0.0;     // ĝ + n·m·(ε₂ + δ) − g*
  bool exposure_pass = false;
  bool reward_pass = false;  // uses the finite-grid bound (with δ)
  bool pass = false;
};

/// Evaluates the protocol's policy against a reference table (ground truth
/// when available, else the probes themselves): margins of the exposure
/// floors with n·ε₁ slack, and of the oracle optimum with n·m·ε₂ slack plus
/// the finite-grid term n·m·δ.
inline CertificationReport certify(const StochasticPolicy& policy, double eps_exposure,
                             double eps_reward, const ProbeTable& reference,
                             const Scenario& scenario, const OracleBudget& budget = {}) {
  const MixtureOptimum opt = mixture_optimum(reference, scenario, budget);
  const PolicyExpectation e = policy_expectation(policy, reference);

  CertificationReport rep;
  rep.expected_exposures = e.set_exposures;
  rep.expected_reward = e.total_reward;
  rep.oracle_optimum = opt.value;
  rep.oracle_feasible = opt.feasible;
  rep.eps_exposure = eps_exposure;
  rep.eps_reward = eps_reward;

  for (int i = 0; i < reference.n_groups; ++i) {
    for (int j = 0; j < reference.n_sets; ++j) {
      const ProbeCell& cell = reference.cell(i, j);
      for (int t = 0; t + 1 < reference.grid.size(); ++t) {
        rep.grid_gap = std::max(rep.grid_gap,
                                std::abs(cell.reward[static_cast<std::size_t>(t + 1)] -
                                         cell.reward[static_cast<std::size_t>(t)]));
      }
    }
  }

  const double n = reference.n_groups;
  const double nm = static_cast<double>(reference.n_groups) * reference.n_sets;
  rep.exposure_pass = true;
  rep.exposure_margins.reserve(static_cast<std::size_t>(reference.n_sets));
  for (int j = 0; j < reference.n_sets; ++j) {
    const double margin = e.set_exposures[static_cast<std::size_t>(j)] + n * eps_exposure -
                          scenario.requirements[static_cast<std::size_t>(j)];
    rep.exposure_margins.push_back(margin);
    const double tol = 1e-9 * std::max(1.0, scenario.requirements[static_cast<std::size_t>(j)]);
    if (margin < -tol) rep.exposure_pass = false;
  }
  rep.reward_margin = e.total_reward + nm * eps_reward - opt.value;
  rep.reward_margin_with_gap = rep.reward_margin + nm * rep.grid_gap;
  const double rtol = 1e-9 * std::max(1.0, std::abs(opt.value));
  rep.reward_pass = opt.feasible && rep.reward_margin_with_gap >= -rtol;
  rep.pass = rep.exposure_pass && rep.reward_pass;
  return rep;
}

}  // namespace shaping
