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

#include <cstdint>
#include <vector>

#include "shaping/baseline.hpp"
#include "shaping/io.hpp"
#include "shaping/marketplace.hpp"
#include "shaping/protocol.hpp"

namespace shaping {

/// One seed's head-to-head run of the three systems over the same horizon.
struct CompareRun {
  MetricsReport none;      // zero-bonus policy
  MetricsReport pid;       // PID + bandit controller
  MetricsReport protocol;  // probe -> frontier -> program -> policy
};

/// Runs all three systems per seed. The realized episodes share one session
/// stream per seed (common random numbers), so per-seed differences measure
/// policy quality, not simulation noise. Probing draws from its own stream.
inline std::vector<CompareRun> compare_systems(const ScenarioBundle& bundle,
                                               const std::vector<std::uint64_t>& seeds,
                                               long long probe_sessions, int threads = 1,
                                               bool redraw_per_session = false) {
  const Marketplace& market = *bundle.market;
  const BonusGrid grid =
      BonusGrid::make(bundle.scenario.bonus_domain, bundle.scenario.grid_k);
  std::vector<CompareRun> runs;
  runs.reserve(seeds.size());
  for (const std::uint64_t seed : seeds) {
    const std::uint64_t episode_seed = derive_stream(seed, stream_tag::harness, 0)();
    CompareRun run;
    run.none = run_episode(market, bundle.scenario, zero_bonus_policy(bundle.scenario),
                           episode_seed, threads, redraw_per_session);
    run.pid = run_baseline_episode(market, bundle.scenario, bundle.baseline, episode_seed,
                                   threads);
    const ProbeTable table = mc_probe(market, grid, probe_sessions,
                                      derive_stream(seed, stream_tag::harness, 2)(), threads);
    const ProtocolArtifacts art = run_protocol(bundle.scenario, table);
    run.protocol = run_episode(market, bundle.scenario, art.policy, episode_seed, threads,
                               redraw_per_session);
    runs.push_back(std::move(run));
  }
  return runs;
}

}  // namespace shaping
