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
#include <vector>

#include "shaping/marketplace.hpp"
#include "shaping/metrics.hpp"
#include "shaping/rng.hpp"
#include "shaping/scenario.hpp"

namespace shaping {

/// Comparison system: per-set PID control of the bonus toward the exposure
/// floor, with an epsilon-greedy bandit choosing which group receives each
/// set's bonus per epoch (the other groups stay at zero).

struct PidGains {
  double k_p = 0.3;
  double k_i = 0.05;
  double k_d = 0.0;
};

struct PidState {
  double bonus = 0.0;
  double integral = 0.0;
  double prev_error = 0.0;
  bool primed = false;  // prev_error holds a real observation
};

/// One control step in exposure-rate space. The integral is clamped at the
/// level that already saturates the bonus domain (anti-windup).
inline PidState pid_step(PidState state, double observed_rate, double target_rate,
                         const PidGains& gains, Interval domain) {
  const double error = target_rate - observed_rate;
  state.integral += error;
  if (gains.k_i > 0.0) {
    const double cap = domain.span() / gains.k_i;
    state.integral = std::clamp(state.integral, -cap, cap);
  }
  const double derivative = state.primed ? error - state.prev_error : 0.0;
  state.bonus = domain.clamp(state.bonus + gains.k_p * error + gains.k_i * state.integral +
                             gains.k_d * derivative);
  state.prev_error = error;
  state.primed = true;
  return state;
}

struct BanditParams {
  double epsilon_explore = 0.1;  // decays as 1/sqrt(epoch)
};

/// Per-set arm statistics over groups: mean reward-per-session observed when
/// pushing the set's bonus to that group.
struct BanditState {
  std::vector<double> value;  // mean reward estimate per arm
  std::vector<long long> pulls;
  double epsilon_explore = 0.1;

  explicit BanditState(int arms = 0, double epsilon = 0.1)
      : value(static_cast<std::size_t>(arms), 0.0),
        pulls(static_cast<std::size_t>(arms), 0),
        epsilon_explore(epsilon) {}

  int select(int epoch, SplitMix64& rng) const {
    const int arms = static_cast<int>(value.size());
    const double eps = epsilon_explore / std::sqrt(static_cast<double>(epoch));
    if (rng.uniform() < eps) return static_cast<int>(rng.below(static_cast<std::uint64_t>(arms)));
    for (int a = 0; a < arms; ++a) {
      if (pulls[static_cast<std::size_t>(a)] == 0) return a;
    }
    int best = 0;
    for (int a = 1; a < arms; ++a) {
      if (value[static_cast<std::size_t>(a)] > value[static_cast<std::size_t>(best)]) best = a;
    }
    return best;
  }

  void update(int arm, double reward) {
    auto& n = pulls[static_cast<std::size_t>(arm)];
    n += 1;
    auto& v = value[static_cast<std::size_t>(arm)];
    v += (reward - v) / static_cast<double>(n);
  }
};

struct BaselineParams {
  PidGains gains;
  BanditParams bandit;
  int epochs = 50;
};

/// Per-epoch controller state, for tests and convergence inspection.
struct EpochTrace {
  int epoch = 0;
  std::vector<double> bonus;          // per set, after the update
  std::vector<double> observed_rate;  // per set, exposures per session
  std::vector<int> arm;               // per set, pulled group
};

namespace detail {

struct EpochSums {
  std::vector<double> cell_exposures;  // per cell
  std::vector<double> cell_reward;     // per cell, channel units
  double clicks = 0.0;
  double purchases = 0.0;
  double gmv = 0.0;
};

inline EpochSums simulate_epoch(const Marketplace& m, const std::vector<double>& bonuses,
                                const std::vector<long long>& epoch_counts,
                                const std::vector<long long>& session_offsets,
                                std::uint64_t seed, int threads) {
  constexpr long long kBlock = 4096;
  const std::size_t cells = m.templates.size();
  std::vector<long long> block_base(cells + 1, 0);
  for (std::size_t c = 0; c < cells; ++c) {
    block_base[c + 1] = block_base[c] + (epoch_counts[c] + kBlock - 1) / kBlock;
  }
  struct CellSum {
    double exposures = 0.0, clicks = 0.0, purchases = 0.0, gmv = 0.0, reward = 0.0;
  };
  std::vector<CellSum> partial(static_cast<std::size_t>(block_base[cells]));
  parallel_for_index(block_base[cells], threads, [&](std::int64_t task) {
    std::size_t c = 0;
    while (block_base[c + 1] <= task) ++c;
    const long long b = task - block_base[c];
    const SessionTemplate& t = m.templates[c];
    const DiscreteSampler noise(t.noise.probs);
    const long long begin = b * kBlock;
    const long long end = std::min(begin + kBlock, epoch_counts[c]);
    std::vector<double> scores, us;
    std::vector<int> order;
    CellSum sum;
    for (long long sess = begin; sess < end; ++sess) {
      // Sessions are addressed by the cell's horizon-global counter, the
      // same scheme run_episode uses.
      auto rng =
          derive_stream(seed, stream_tag::episode, t.group, t.set, session_offsets[c] + sess);
      const auto out = simulate_session(t, bonuses[c], noise, rng, scores, us, order);
      sum.exposures += out.exposures;
      sum.clicks += out.clicks;
      sum.purchases += out.purchased ? 1.0 : 0.0;
      sum.gmv += out.gmv;
      sum.reward += m.channel == RewardChannel::clicks ? static_cast<double>(out.clicks)
                                                       : (out.purchased ? 1.0 : 0.0);
    }
    partial[static_cast<std::size_t>(task)] = sum;
  });

  EpochSums sums;
  sums.cell_exposures.assign(cells, 0.0);
  sums.cell_reward.assign(cells, 0.0);
  for (std::size_t c = 0; c < cells; ++c) {
    for (long long b = block_base[c]; b < block_base[c + 1]; ++b) {
      const CellSum& part = partial[static_cast<std::size_t>(b)];
      sums.cell_exposures[c] += part.exposures;
      sums.cell_reward[c] += part.reward;
      sums.clicks += part.clicks;
      sums.purchases += part.purchases;
      sums.gmv += part.gmv;
    }
  }
  return sums;
}

}  // namespace detail

/// Full feedback run: epochs of (bandit arm selection, simulation, PID and
/// bandit updates), metrics accumulated over the whole horizon. Deterministic
/// for a fixed seed under any worker count.
inline MetricsReport run_baseline_episode(const Marketplace& m, const Scenario& scenario,
                                          const BaselineParams& params, std::uint64_t seed,
                                          int threads = 1,
                                          std::vector<EpochTrace>* trace = nullptr) {
  const int epochs = std::max(params.epochs, 1);
  const std::vector<long long> horizon_counts = m.integer_session_counts();
  const std::size_t cells = m.templates.size();

  std::vector<PidState> pid(static_cast<std::size_t>(scenario.n_sets));
  for (auto& s : pid) s.bonus = scenario.bonus_domain.lo;
  std::vector<BanditState> bandit(
      static_cast<std::size_t>(scenario.n_sets),
      BanditState(scenario.n_groups, params.bandit.epsilon_explore));

  MetricsReport report;
  report.realized_exposures.assign(static_cast<std::size_t>(scenario.n_sets), 0.0);
  report.expected_available = false;

  long long sessions_total = 0;
  std::vector<double> bonuses(cells, 0.0);
  std::vector<long long> epoch_counts(cells, 0);
  std::vector<long long> session_offsets(cells, 0);

  for (int epoch = 1; epoch <= epochs; ++epoch) {
    long long epoch_sessions = 0;
    for (std::size_t c = 0; c < cells; ++c) {
      const long long base = horizon_counts[c] / epochs;
      const long long extra = (epoch <= horizon_counts[c] % epochs) ? 1 : 0;
      epoch_counts[c] = base + extra;
      epoch_sessions += epoch_counts[c];
    }

    std::vector<int> arm(static_cast<std::size_t>(scenario.n_sets), 0);
    for (int j = 0; j < scenario.n_sets; ++j) {
      auto rng = derive_stream(seed, stream_tag::bandit, epoch, j);
      arm[static_cast<std::size_t>(j)] = bandit[static_cast<std::size_t>(j)].select(epoch, rng);
    }
    for (int i = 0; i < scenario.n_groups; ++i) {
      for (int j = 0; j < scenario.n_sets; ++j) {
        const std::size_t c = static_cast<std::size_t>(m.cell_index(i, j));
        bonuses[c] = (arm[static_cast<std::size_t>(j)] == i)
                         ? pid[static_cast<std::size_t>(j)].bonus
                         : scenario.bonus_domain.lo;
      }
    }

    const auto sums =
        detail::simulate_epoch(m, bonuses, epoch_counts, session_offsets, seed, threads);
    for (std::size_t c = 0; c < cells; ++c) session_offsets[c] += epoch_counts[c];

    EpochTrace snapshot;
    if (trace != nullptr) {
      snapshot.epoch = epoch;
      snapshot.arm.assign(arm.begin(), arm.end());
      snapshot.bonus.resize(static_cast<std::size_t>(scenario.n_sets));
      snapshot.observed_rate.resize(static_cast<std::size_t>(scenario.n_sets));
    }

    for (int j = 0; j < scenario.n_sets; ++j) {
      double set_exposures = 0.0;
      for (int i = 0; i < scenario.n_groups; ++i) {
        set_exposures += sums.cell_exposures[static_cast<std::size_t>(m.cell_index(i, j))];
      }
      report.realized_exposures[static_cast<std::size_t>(j)] += set_exposures;

      double observed_rate = 0.0;
      if (epoch_sessions > 0) {
        observed_rate = set_exposures / static_cast<double>(epoch_sessions);
        const double target_rate = scenario.requirements[static_cast<std::size_t>(j)] /
                                   static_cast<double>(std::max<long long>(m.horizon_sessions, 1));
        pid[static_cast<std::size_t>(j)] =
            pid_step(pid[static_cast<std::size_t>(j)], observed_rate, target_rate, params.gains,
                     scenario.bonus_domain);
      }
      if (trace != nullptr) {
        snapshot.bonus[static_cast<std::size_t>(j)] = pid[static_cast<std::size_t>(j)].bonus;
        snapshot.observed_rate[static_cast<std::size_t>(j)] = observed_rate;
      }

      const std::size_t pulled =
          static_cast<std::size_t>(m.cell_index(arm[static_cast<std::size_t>(j)], j));
      const long long pulled_sessions = epoch_counts[pulled];
      const double arm_reward =
          pulled_sessions > 0 ? sums.cell_reward[pulled] / static_cast<double>(pulled_sessions)
                              : 0.0;
      bandit[static_cast<std::size_t>(j)].update(arm[static_cast<std::size_t>(j)], arm_reward);
    }

    report.realized_clicks += sums.clicks;
    report.realized_purchases += sums.purchases;
    report.realized_gmv += sums.gmv;
    sessions_total += epoch_sessions;
    if (trace != nullptr) trace->push_back(std::move(snapshot));
  }

  report.sessions = sessions_total;
  report.realized_reward =
      m.channel == RewardChannel::clicks ? report.realized_clicks : report.realized_purchases;
  report.purchase_rate =
      sessions_total > 0 ? report.realized_purchases / static_cast<double>(sessions_total) : 0.0;
  report.compliance = compliance_rate(report.realized_exposures, scenario.requirements);
  // Feedback control has no static policy to take expectations of; callers
  // treat the realized numbers as the estimate.
  report.expected_exposures = report.realized_exposures;
  report.expected_reward = report.realized_reward;
  return report;
}

}  // namespace shaping
