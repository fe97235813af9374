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
#include <string>
#include <vector>

#include "shaping/metrics.hpp"
#include "shaping/policy.hpp"
#include "shaping/probe.hpp"
#include "shaping/rng.hpp"
#include "shaping/scenario.hpp"

namespace shaping {

/// Raised when exact expectation would require enumerating more joint noise
/// realizations than the configured cap; callers should fall back to Monte
/// Carlo probing.
class enumeration_limit_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class RewardChannel { clicks, purchases };

struct ItemSpec {
  double base_score = 0.0;
  double click_prob = 0.0;
  double purchase_prob = 0.0;  // at most click_prob: a purchase implies a click
  double price = 0.0;
  bool target = false;
};

/// Finite symmetric score-noise lattice shared by all candidates of a
/// template; drawn independently per item per session.
struct NoiseModel {
  std::vector<double> support{0.0};
  std::vector<double> probs{1.0};
};

/// Homogeneous behavior model of one (group, set) cell: a ranked session
/// with `slots` display positions over `candidates`, happening
/// `session_weight` (relative) times per horizon.
struct SessionTemplate {
  int group = 0;
  int set = 0;
  int slots = 1;
  double session_weight = 1.0;
  NoiseModel noise;
  std::vector<ItemSpec> candidates;
};

/// Synthetic environment: a complete template grid plus the session budget.
/// The induced exposure function is non-decreasing and the reward function
/// non-increasing in the bonus, because the bonus lifts every target
/// uniformly and each displaced filler clicks at least as well as the target
/// that replaces it (validated below).
struct Marketplace {
  int n_groups = 0;
  int n_sets = 0;
  long long horizon_sessions = 0;
  RewardChannel channel = RewardChannel::clicks;
  std::vector<SessionTemplate> templates;  // complete, group * n_sets + set
  double enumeration_cap = 1e6;

  int cell_index(int group, int set) const { return group * n_sets + set; }
  const SessionTemplate& cell(int group, int set) const {
    return templates[static_cast<std::size_t>(cell_index(group, set))];
  }

  double total_weight() const {
    double w = 0.0;
    for (const auto& t : templates) w += t.session_weight;
    return w;
  }

  /// Expected sessions of a cell per horizon (may be fractional).
  double sessions_per_horizon(int group, int set) const {
    const double w = total_weight();
    if (w <= 0.0 || horizon_sessions <= 0) return 0.0;
    return static_cast<double>(horizon_sessions) * cell(group, set).session_weight / w;
  }

  /// Integer per-cell session counts summing exactly to the horizon
  /// (largest-remainder apportionment, ties by cell index).
  std::vector<long long> integer_session_counts() const {
    const std::size_t cells = templates.size();
    std::vector<long long> counts(cells, 0);
    const double w = total_weight();
    if (w <= 0.0 || horizon_sessions <= 0) return counts;
    long long assigned = 0;
    std::vector<std::pair<double, std::size_t>> remainders;
    remainders.reserve(cells);
    for (std::size_t c = 0; c < cells; ++c) {
      const double exact = static_cast<double>(horizon_sessions) *
                           templates[c].session_weight / w;
      counts[c] = static_cast<long long>(std::floor(exact));
      assigned += counts[c];
      remainders.emplace_back(exact - std::floor(exact), c);
    }
    std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    const long long leftover = horizon_sessions - assigned;
    for (long long r = 0; r < leftover && r < static_cast<long long>(cells); ++r) {
      counts[remainders[static_cast<std::size_t>(r)].second] += 1;
    }
    return counts;
  }
};

inline std::vector<Violation> validate_marketplace(const Marketplace& m, const Scenario& s) {
  std::vector<Violation> out;
  auto flag = [&out](const char* code, std::string detail) {
    out.push_back({code, std::move(detail)});
  };
  if (static_cast<int>(m.templates.size()) != s.n_groups * s.n_sets) {
    flag("MISSING_TEMPLATE", "expected one template per (group, set) cell");
    return out;
  }
  if (m.horizon_sessions < 0) flag("NEGATIVE_HORIZON", "horizon_sessions must be >= 0");
  for (int i = 0; i < s.n_groups; ++i) {
    for (int j = 0; j < s.n_sets; ++j) {
      const SessionTemplate& t = m.cell(i, j);
      const std::string where = "template (" + std::to_string(i) + "," + std::to_string(j) + ")";
      if (t.group != i || t.set != j) flag("TEMPLATE_CELL_MISMATCH", where);
      if (t.candidates.empty()) flag("NO_CANDIDATES", where);
      if (t.slots < 1 || t.slots > static_cast<int>(t.candidates.size())) {
        flag("SLOTS_EXCEED_CANDIDATES", where);
      }
      if (t.session_weight < 0.0) flag("NEGATIVE_WEIGHT", where);
      if (t.noise.support.empty() || t.noise.support.size() != t.noise.probs.size()) {
        flag("NOISE_SHAPE_INVALID", where);
      } else {
        double total = 0.0;
        bool negative = false;
        for (double p : t.noise.probs) {
          total += p;
          negative = negative || p < 0.0;
        }
        if (negative || std::abs(total - 1.0) > 1e-9) flag("NOISE_PROBS_INVALID", where);
        // Symmetry: every (value, prob) needs a mirrored (-value, prob).
        for (std::size_t a = 0; a < t.noise.support.size(); ++a) {
          bool mirrored = false;
          for (std::size_t b = 0; b < t.noise.support.size(); ++b) {
            if (std::abs(t.noise.support[a] + t.noise.support[b]) <= 1e-12 &&
                std::abs(t.noise.probs[a] - t.noise.probs[b]) <= 1e-12) {
              mirrored = true;
              break;
            }
          }
          if (!mirrored) {
            flag("NOISE_ASYMMETRIC", where);
            break;
          }
        }
      }
      double min_filler_click = 1.0, min_filler_purchase = 1.0;
      bool has_target = false;
      for (const ItemSpec& c : t.candidates) {
        if (c.click_prob < 0.0 || c.click_prob > 1.0 || c.purchase_prob < 0.0 ||
            c.purchase_prob > 1.0) {
          flag("PROBABILITY_RANGE", where);
        }
        if (c.purchase_prob > c.click_prob + 1e-12) flag("PURCHASE_EXCEEDS_CLICK", where);
        if (c.price < 0.0) flag("NEGATIVE_PRICE", where);
        if (!c.target) {
          min_filler_click = std::min(min_filler_click, c.click_prob);
          min_filler_purchase = std::min(min_filler_purchase, c.purchase_prob);
        }
        has_target = has_target || c.target;
      }
      for (const ItemSpec& c : t.candidates) {
        if (!c.target) continue;
        if (c.click_prob > min_filler_click + 1e-12 && m.channel == RewardChannel::clicks) {
          flag("TARGET_CLICK_ABOVE_FILLER", where);
          break;
        }
        if (c.purchase_prob > min_filler_purchase + 1e-12 &&
            m.channel == RewardChannel::purchases) {
          flag("TARGET_PURCHASE_ABOVE_FILLER", where);
          break;
        }
      }
      (void)has_target;  // targetless templates are legal: the cell just never exposes
    }
  }
  return out;
}

/// Expectations per horizon for one cell at one bonus. `purchases` counts
/// buying sessions (a session buys at most once, scanning the display
/// top-down), so purchases / sessions is a rate in [0, 1].
struct Response {
  double exposure = 0.0;
  double clicks = 0.0;
  double purchases = 0.0;
  double gmv = 0.0;

  double reward(RewardChannel channel) const {
    return channel == RewardChannel::clicks ? clicks : purchases;
  }
};

namespace detail {

/// Display order: score descending, targets win ties, then lower index.
/// Probed step functions depend on this tie-break; it is part of the model.
inline void rank_candidates(const std::vector<double>& scores,
                            const std::vector<ItemSpec>& candidates,
                            std::vector<int>& order) {
  order.resize(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const double sa = scores[static_cast<std::size_t>(a)];
    const double sb = scores[static_cast<std::size_t>(b)];
    if (sa != sb) return sa > sb;
    const bool ta = candidates[static_cast<std::size_t>(a)].target;
    const bool tb = candidates[static_cast<std::size_t>(b)].target;
    if (ta != tb) return ta;
    return a < b;
  });
}

struct SessionOutcome {
  int exposures = 0;
  int clicks = 0;
  bool purchased = false;
  double gmv = 0.0;
};

/// One realized session. Exactly 2 * |candidates| uniforms are consumed in
/// index order (noise, then click/purchase coupling), so the stream layout
/// is independent of the ranking outcome.
inline SessionOutcome simulate_session(const SessionTemplate& t, double bonus,
                                       const DiscreteSampler& noise, SplitMix64& rng,
                                       std::vector<double>& scores,
                                       std::vector<double>& behavior_u,
                                       std::vector<int>& order) {
  const std::size_t c_count = t.candidates.size();
  scores.resize(c_count);
  behavior_u.resize(c_count);
  for (std::size_t c = 0; c < c_count; ++c) {
    const ItemSpec& item = t.candidates[c];
    const double eps = t.noise.support[static_cast<std::size_t>(noise(rng))];
    scores[c] = item.base_score + eps + (item.target ? bonus : 0.0);
  }
  for (std::size_t c = 0; c < c_count; ++c) behavior_u[c] = rng.uniform();

  rank_candidates(scores, t.candidates, order);

  SessionOutcome out;
  for (int k = 0; k < t.slots; ++k) {
    const int c = order[static_cast<std::size_t>(k)];
    const ItemSpec& item = t.candidates[static_cast<std::size_t>(c)];
    const double u = behavior_u[static_cast<std::size_t>(c)];
    if (item.target) out.exposures += 1;
    if (u < item.click_prob) out.clicks += 1;
    if (!out.purchased && u < item.purchase_prob) {
      out.purchased = true;
      out.gmv += item.price;
    }
  }
  return out;
}

}  // namespace detail

/// Exact expected response of one cell at one bonus, by enumerating the full
/// joint noise lattice, scaled to the cell's share of the horizon. Throws
/// enumeration_limit_error when the joint space exceeds the cap; use Monte
/// Carlo probing instead.
inline Response exact_response(const Marketplace& m, int group, int set, double bonus) {
  const SessionTemplate& t = m.cell(group, set);
  const std::size_t c_count = t.candidates.size();
  const std::size_t s_count = t.noise.support.size();

  const double joint = std::pow(static_cast<double>(s_count), static_cast<double>(c_count));
  if (joint > m.enumeration_cap) {
    throw enumeration_limit_error(
        "exact_response: joint noise space exceeds the enumeration cap; use Monte Carlo");
  }

  Response acc;
  std::vector<int> lattice(c_count, 0);
  std::vector<double> scores(c_count, 0.0);
  std::vector<int> order;
  const long long total = static_cast<long long>(joint);
  for (long long it = 0; it < total; ++it) {
    double prob = 1.0;
    for (std::size_t c = 0; c < c_count; ++c) {
      const std::size_t level = static_cast<std::size_t>(lattice[c]);
      prob *= t.noise.probs[level];
      scores[c] = t.candidates[c].base_score + t.noise.support[level] +
                  (t.candidates[c].target ? bonus : 0.0);
    }
    detail::rank_candidates(scores, t.candidates, order);

    double clicks = 0.0, no_buy = 1.0, gmv = 0.0;
    int exposures = 0;
    for (int k = 0; k < t.slots; ++k) {
      const ItemSpec& item = t.candidates[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])];
      if (item.target) exposures += 1;
      clicks += item.click_prob;
      gmv += item.price * item.purchase_prob * no_buy;
      no_buy *= 1.0 - item.purchase_prob;
    }
    acc.exposure += prob * exposures;
    acc.clicks += prob * clicks;
    acc.purchases += prob * (1.0 - no_buy);
    acc.gmv += prob * gmv;

    for (std::size_t c = 0; c < c_count; ++c) {
      if (++lattice[c] < static_cast<int>(s_count)) break;
      lattice[c] = 0;
    }
  }

  const double scale = m.sessions_per_horizon(group, set);
  acc.exposure *= scale;
  acc.clicks *= scale;
  acc.purchases *= scale;
  acc.gmv *= scale;
  return acc;
}

/// Probe table from exact expectations: zero standard errors, zero caps.
inline ProbeTable exact_probe_table(const Marketplace& m, const BonusGrid& grid) {
  ProbeTable table;
  table.n_groups = m.n_groups;
  table.n_sets = m.n_sets;
  table.grid = grid;
  table.cells.resize(static_cast<std::size_t>(m.n_groups * m.n_sets));
  for (int i = 0; i < m.n_groups; ++i) {
    for (int j = 0; j < m.n_sets; ++j) {
      ProbeCell& cell = table.cell(i, j);
      const std::size_t points = static_cast<std::size_t>(grid.size());
      cell.exposure.resize(points);
      cell.reward.resize(points);
      cell.exposure_stderr.assign(points, 0.0);
      cell.reward_stderr.assign(points, 0.0);
      for (int p = 0; p < grid.size(); ++p) {
        const Response r = exact_response(m, i, j, grid[p]);
        cell.exposure[static_cast<std::size_t>(p)] = r.exposure;
        cell.reward[static_cast<std::size_t>(p)] = r.reward(m.channel);
      }
    }
  }
  return table;
}

/// Monte-Carlo probing: `sessions_per_point` independently simulated sessions
/// per (cell, grid point), scaled to horizon units. Per-point standard errors
/// come from the sample variance; the table's error caps are the worst
/// per-point stderr times `stderr_multiplier`. Deterministic for a fixed
/// seed under any worker count.
inline ProbeTable mc_probe(const Marketplace& m, const BonusGrid& grid,
                           long long sessions_per_point, std::uint64_t seed, int threads = 1,
                           double stderr_multiplier = 3.0) {
  if (sessions_per_point < 1) {
    throw std::invalid_argument("mc_probe: sessions_per_point must be >= 1");
  }
  ProbeTable table;
  table.n_groups = m.n_groups;
  table.n_sets = m.n_sets;
  table.grid = grid;
  table.cells.resize(static_cast<std::size_t>(m.n_groups * m.n_sets));

  constexpr long long kBlock = 4096;
  const long long blocks = (sessions_per_point + kBlock - 1) / kBlock;
  const int points = grid.size();
  const std::int64_t tasks =
      static_cast<std::int64_t>(m.n_groups) * m.n_sets * points * blocks;

  struct BlockSum {
    double f = 0.0, f2 = 0.0, g = 0.0, g2 = 0.0;
  };
  std::vector<BlockSum> partial(static_cast<std::size_t>(tasks));

  parallel_for_index(tasks, threads, [&](std::int64_t task) {
    const long long b = task % blocks;
    std::int64_t rest = task / blocks;
    const int p = static_cast<int>(rest % points);
    rest /= points;
    const int j = static_cast<int>(rest % m.n_sets);
    const int i = static_cast<int>(rest / m.n_sets);

    const SessionTemplate& t = m.cell(i, j);
    const DiscreteSampler noise(t.noise.probs);
    const long long begin = b * kBlock;
    const long long end = std::min(begin + kBlock, sessions_per_point);
    std::vector<double> scores, us;
    std::vector<int> order;
    BlockSum sum;
    for (long long sess = begin; sess < end; ++sess) {
      auto rng = derive_stream(seed, stream_tag::probe, i, j, p, sess);
      const auto out = detail::simulate_session(t, grid[p], noise, rng, scores, us, order);
      const double f = out.exposures;
      const double g = m.channel == RewardChannel::clicks
                           ? static_cast<double>(out.clicks)
                           : static_cast<double>(out.purchased ? 1 : 0);
      sum.f += f;
      sum.f2 += f * f;
      sum.g += g;
      sum.g2 += g * g;
    }
    partial[static_cast<std::size_t>(task)] = sum;
  });

  double max_f_se = 0.0, max_g_se = 0.0;
  for (int i = 0; i < m.n_groups; ++i) {
    for (int j = 0; j < m.n_sets; ++j) {
      ProbeCell& cell = table.cell(i, j);
      cell.exposure.resize(static_cast<std::size_t>(points));
      cell.reward.resize(static_cast<std::size_t>(points));
      cell.exposure_stderr.resize(static_cast<std::size_t>(points));
      cell.reward_stderr.resize(static_cast<std::size_t>(points));
      const double scale = m.sessions_per_horizon(i, j);
      for (int p = 0; p < points; ++p) {
        BlockSum sum;
        for (long long b = 0; b < blocks; ++b) {
          const std::int64_t task =
              ((static_cast<std::int64_t>(i) * m.n_sets + j) * points + p) * blocks + b;
          const BlockSum& part = partial[static_cast<std::size_t>(task)];
          sum.f += part.f;
          sum.f2 += part.f2;
          sum.g += part.g;
          sum.g2 += part.g2;
        }
        const double n = static_cast<double>(sessions_per_point);
        const double f_mean = sum.f / n;
        const double g_mean = sum.g / n;
        double f_var = 0.0, g_var = 0.0;
        if (sessions_per_point > 1) {
          f_var = std::max(0.0, (sum.f2 - n * f_mean * f_mean) / (n - 1.0));
          g_var = std::max(0.0, (sum.g2 - n * g_mean * g_mean) / (n - 1.0));
        }
        const double f_se = std::sqrt(f_var / n) * scale;
        const double g_se = std::sqrt(g_var / n) * scale;
        cell.exposure[static_cast<std::size_t>(p)] = f_mean * scale;
        cell.reward[static_cast<std::size_t>(p)] = g_mean * scale;
        cell.exposure_stderr[static_cast<std::size_t>(p)] = f_se;
        cell.reward_stderr[static_cast<std::size_t>(p)] = g_se;
        max_f_se = std::max(max_f_se, f_se);
        max_g_se = std::max(max_g_se, g_se);
      }
    }
  }
  table.eps_exposure = stderr_multiplier * max_f_se;
  table.eps_reward = stderr_multiplier * max_g_se;
  return table;
}

/// Simulates one full horizon under a mixing policy. The policy coin is
/// flipped once per episode by default; with `redraw_per_session` it is
/// flipped per session instead (same expectations either way). Expected
/// metrics come from exact_response where enumerable.
inline MetricsReport run_episode(const Marketplace& m, const Scenario& scenario,
                                 const StochasticPolicy& policy, std::uint64_t seed,
                                 int threads = 1, bool redraw_per_session = false) {
  const std::vector<long long> counts = m.integer_session_counts();
  const std::vector<double> bonuses = sample_policy(policy, seed);

  constexpr long long kBlock = 4096;
  const std::size_t cells = m.templates.size();
  std::vector<long long> block_base(cells + 1, 0);
  for (std::size_t c = 0; c < cells; ++c) {
    block_base[c + 1] = block_base[c] + (counts[c] + kBlock - 1) / kBlock;
  }

  struct CellSum {
    double exposures = 0.0, clicks = 0.0, purchases = 0.0, gmv = 0.0;
  };
  std::vector<CellSum> partial(static_cast<std::size_t>(block_base[cells]));

  parallel_for_index(block_base[cells], threads, [&](std::int64_t task) {
    std::size_t c = 0;
    while (block_base[c + 1] <= task) ++c;
    const long long b = task - block_base[c];
    const SessionTemplate& t = m.templates[c];
    const MixedAssignment& mix = policy.cells[c];
    const DiscreteSampler noise(t.noise.probs);
    const long long begin = b * kBlock;
    const long long end = std::min(begin + kBlock, counts[c]);
    std::vector<double> scores, us;
    std::vector<int> order;
    CellSum sum;
    for (long long sess = begin; sess < end; ++sess) {
      // One stream per session, addressed by the cell's session counter, so
      // epoch-sliced and whole-horizon runs see identical randomness.
      auto rng = derive_stream(seed, stream_tag::episode, t.group, t.set, sess);
      double bonus = bonuses[c];
      if (redraw_per_session) {
        bonus = rng.bernoulli(mix.p_high) ? mix.bonus_high : mix.bonus_low;
      }
      const auto out = detail::simulate_session(t, bonus, noise, rng, scores, us, order);
      sum.exposures += out.exposures;
      sum.clicks += out.clicks;
      sum.purchases += out.purchased ? 1.0 : 0.0;
      sum.gmv += out.gmv;
    }
    partial[static_cast<std::size_t>(task)] = sum;
  });

  MetricsReport report;
  report.realized_exposures.assign(static_cast<std::size_t>(m.n_sets), 0.0);
  report.expected_exposures.assign(static_cast<std::size_t>(m.n_sets), 0.0);
  report.expected_available = true;
  long long sessions = 0;
  for (std::size_t c = 0; c < cells; ++c) {
    CellSum sum;
    for (long long b = block_base[c]; b < block_base[c + 1]; ++b) {
      const CellSum& part = partial[static_cast<std::size_t>(b)];
      sum.exposures += part.exposures;
      sum.clicks += part.clicks;
      sum.purchases += part.purchases;
      sum.gmv += part.gmv;
    }
    const SessionTemplate& t = m.templates[c];
    report.realized_exposures[static_cast<std::size_t>(t.set)] += sum.exposures;
    report.realized_clicks += sum.clicks;
    report.realized_purchases += sum.purchases;
    report.realized_gmv += sum.gmv;
    sessions += counts[c];

    if (report.expected_available) {
      const MixedAssignment& mix = policy.cells[c];
      try {
        const Response lo = exact_response(m, t.group, t.set, mix.bonus_low);
        const Response hi = mix.p_high > 0.0 ? exact_response(m, t.group, t.set, mix.bonus_high)
                                             : lo;
        const double p = mix.p_high;
        report.expected_exposures[static_cast<std::size_t>(t.set)] +=
            (1.0 - p) * lo.exposure + p * hi.exposure;
        report.expected_reward += (1.0 - p) * lo.reward(m.channel) + p * hi.reward(m.channel);
      } catch (const enumeration_limit_error&) {
        report.expected_available = false;
        report.expected_reward = 0.0;
      }
    }
  }
  report.sessions = sessions;
  report.realized_reward =
      m.channel == RewardChannel::clicks ? report.realized_clicks : report.realized_purchases;
  report.purchase_rate =
      sessions > 0 ? report.realized_purchases / static_cast<double>(sessions) : 0.0;
  report.compliance = compliance_rate(report.realized_exposures, scenario.requirements);
  return report;
}

/// Coupled stress mode: one session per group pools the targets of every
/// set into a shared ranking, so sets contend for the same display slots.
/// This breaks the separable structure the optimality guarantees rest on;
/// it exists to measure how badly, not to satisfy them. Fillers come from
/// the group's first template (the organic inventory), as does the noise
/// model; expected metrics are not defined here.
inline MetricsReport run_coupled_episode(const Marketplace& m, const Scenario& scenario,
                                         const StochasticPolicy& policy, std::uint64_t seed,
                                         int threads = 1) {
  const std::vector<long long> counts = m.integer_session_counts();
  const std::vector<double> bonuses = sample_policy(policy, seed);

  struct PooledGroup {
    SessionTemplate merged;          // fillers + every set's targets
    std::vector<int> target_set;     // per candidate: owning set, -1 for fillers
    long long sessions = 0;
  };
  std::vector<PooledGroup> pools(static_cast<std::size_t>(m.n_groups));
  for (int i = 0; i < m.n_groups; ++i) {
    PooledGroup& pool = pools[static_cast<std::size_t>(i)];
    const SessionTemplate& first = m.cell(i, 0);
    pool.merged.group = i;
    pool.merged.noise = first.noise;
    pool.merged.slots = first.slots;
    for (const ItemSpec& item : first.candidates) {
      if (!item.target) {
        pool.merged.candidates.push_back(item);
        pool.target_set.push_back(-1);
      }
    }
    for (int j = 0; j < m.n_sets; ++j) {
      const SessionTemplate& t = m.cell(i, j);
      pool.merged.slots = std::max(pool.merged.slots, t.slots);
      pool.sessions += counts[static_cast<std::size_t>(m.cell_index(i, j))];
      for (const ItemSpec& item : t.candidates) {
        if (item.target) {
          pool.merged.candidates.push_back(item);
          pool.target_set.push_back(j);
        }
      }
    }
    pool.merged.slots =
        std::min(pool.merged.slots, static_cast<int>(pool.merged.candidates.size()));
  }

  constexpr long long kBlock = 4096;
  std::vector<long long> block_base(pools.size() + 1, 0);
  for (std::size_t g = 0; g < pools.size(); ++g) {
    block_base[g + 1] = block_base[g] + (pools[g].sessions + kBlock - 1) / kBlock;
  }
  struct GroupSum {
    std::vector<double> set_exposures;
    double clicks = 0.0, purchases = 0.0, gmv = 0.0;
  };
  std::vector<GroupSum> partial(static_cast<std::size_t>(block_base[pools.size()]));

  parallel_for_index(block_base[pools.size()], threads, [&](std::int64_t task) {
    std::size_t g = 0;
    while (block_base[g + 1] <= task) ++g;
    const PooledGroup& pool = pools[g];
    const long long b = task - block_base[g];
    const DiscreteSampler noise(pool.merged.noise.probs);
    const long long begin = b * kBlock;
    const long long end = std::min(begin + kBlock, pool.sessions);
    const std::size_t c_count = pool.merged.candidates.size();
    std::vector<double> scores(c_count), us(c_count);
    std::vector<int> order;
    GroupSum sum;
    sum.set_exposures.assign(static_cast<std::size_t>(m.n_sets), 0.0);
    for (long long sess = begin; sess < end; ++sess) {
      auto rng = derive_stream(seed, stream_tag::episode, pool.merged.group, 0x757, sess);
      for (std::size_t c = 0; c < c_count; ++c) {
        const ItemSpec& item = pool.merged.candidates[c];
        const int owner = pool.target_set[c];
        const double bonus =
            owner >= 0 ? bonuses[static_cast<std::size_t>(
                             policy.cell_index(pool.merged.group, owner))]
                       : 0.0;
        scores[c] = item.base_score +
                    pool.merged.noise.support[static_cast<std::size_t>(noise(rng))] + bonus;
      }
      for (std::size_t c = 0; c < c_count; ++c) us[c] = rng.uniform();
      detail::rank_candidates(scores, pool.merged.candidates, order);
      bool bought = false;
      for (int k = 0; k < pool.merged.slots; ++k) {
        const int c = order[static_cast<std::size_t>(k)];
        const ItemSpec& item = pool.merged.candidates[static_cast<std::size_t>(c)];
        const int owner = pool.target_set[static_cast<std::size_t>(c)];
        if (owner >= 0) sum.set_exposures[static_cast<std::size_t>(owner)] += 1.0;
        const double u = us[static_cast<std::size_t>(c)];
        if (u < item.click_prob) sum.clicks += 1.0;
        if (!bought && u < item.purchase_prob) {
          bought = true;
          sum.purchases += 1.0;
          sum.gmv += item.price;
        }
      }
    }
    partial[static_cast<std::size_t>(task)] = std::move(sum);
  });

  MetricsReport report;
  report.realized_exposures.assign(static_cast<std::size_t>(m.n_sets), 0.0);
  report.expected_available = false;
  long long sessions = 0;
  for (std::size_t g = 0; g < pools.size(); ++g) {
    for (long long b = block_base[g]; b < block_base[g + 1]; ++b) {
      const GroupSum& part = partial[static_cast<std::size_t>(b)];
      for (int j = 0; j < m.n_sets; ++j) {
        report.realized_exposures[static_cast<std::size_t>(j)] +=
            part.set_exposures[static_cast<std::size_t>(j)];
      }
      report.realized_clicks += part.clicks;
      report.realized_purchases += part.purchases;
      report.realized_gmv += part.gmv;
    }
    sessions += pools[g].sessions;
  }
  report.sessions = sessions;
  report.realized_reward =
      m.channel == RewardChannel::clicks ? report.realized_clicks : report.realized_purchases;
  report.purchase_rate =
      sessions > 0 ? report.realized_purchases / static_cast<double>(sessions) : 0.0;
  report.compliance = compliance_rate(report.realized_exposures, scenario.requirements);
  return report;
}

/// The do-nothing policy: every cell plays the domain minimum bonus.
inline StochasticPolicy zero_bonus_policy(const Scenario& scenario) {
  StochasticPolicy policy;
  policy.n_groups = scenario.n_groups;
  policy.n_sets = scenario.n_sets;
  policy.cells.resize(static_cast<std::size_t>(scenario.cell_count()));
  for (int i = 0; i < scenario.n_groups; ++i) {
    for (int j = 0; j < scenario.n_sets; ++j) {
      MixedAssignment mix;
      mix.group = i;
      mix.set = j;
      mix.bonus_low = scenario.bonus_domain.lo;
      mix.bonus_high = scenario.bonus_domain.lo;
      mix.p_high = 0.0;
      policy.cells[static_cast<std::size_t>(policy.cell_index(i, j))] = mix;
    }
  }
  return policy;
}

}  // namespace shaping
