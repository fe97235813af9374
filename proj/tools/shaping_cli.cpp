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

// Experiment harness: probe a scenario's marketplace on the bonus grid,
// solve the shaping program into a stochastic policy, compare the protocol
// against PID+bandit and no-shaping, and run the mixture oracle standalone.
//
// Exit codes: 0 success, 2 input error, 3 internal invariant failure.

#include <clocale>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shaping/baseline.hpp"
#include "shaping/harness.hpp"
#include "shaping/io.hpp"
#include "shaping/marketplace.hpp"
#include "shaping/oracle.hpp"
#include "shaping/protocol.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 2;
constexpr int kExitInternal = 3;

void print_violations(const std::vector<shaping::Violation>& violations) {
  for (const auto& v : violations) std::cerr << v.code << ": " << v.detail << "\n";
}

shaping::ScenarioBundle load_or_exit(const std::string& path) {
  auto outcome = shaping::load_scenario_file(path);
  if (!outcome.ok()) {
    print_violations(outcome.violations);
    std::exit(kExitInput);
  }
  return std::move(*outcome.bundle);
}

shaping::Marketplace& market_or_exit(shaping::ScenarioBundle& bundle) {
  if (!bundle.market.has_value()) {
    std::cerr << "SCENARIO_NO_TEMPLATES: this command needs a simulated marketplace\n";
    std::exit(kExitInput);
  }
  return *bundle.market;
}

std::vector<std::uint64_t> parse_seeds(const std::string& spec) {
  std::vector<std::uint64_t> seeds;
  const auto range = spec.find("..");
  if (range != std::string::npos) {
    const std::uint64_t lo = std::stoull(spec.substr(0, range));
    const std::uint64_t hi = std::stoull(spec.substr(range + 2));
    for (std::uint64_t s = lo; s <= hi; ++s) seeds.push_back(s);
    return seeds;
  }
  std::size_t pos = 0;
  while (pos < spec.size()) {
    const std::size_t comma = spec.find(',', pos);
    const std::string tok = spec.substr(pos, comma == std::string::npos ? comma : comma - pos);
    if (!tok.empty()) seeds.push_back(std::stoull(tok));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return seeds;
}

struct SeriesStats {
  double mean = 0.0;
  double stderr_ = 0.0;
};

SeriesStats stats(const std::vector<double>& xs) {
  SeriesStats s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.stderr_ = std::sqrt(ss / (static_cast<double>(xs.size()) - 1.0) /
                          static_cast<double>(xs.size()));
  }
  return s;
}

shaping::ProbeTable probe_table_or_exit(const std::string& path,
                                        const shaping::ScenarioBundle& bundle) {
  std::ifstream in(path);
  if (!in) {
    std::cerr << "PROBES_NOT_FOUND: " << path << "\n";
    std::exit(kExitInput);
  }
  shaping::json root;
  try {
    in >> root;
  } catch (const shaping::json::exception& e) {
    std::cerr << "BAD_JSON: " << e.what() << "\n";
    std::exit(kExitInput);
  }
  std::vector<shaping::Violation> bad;
  shaping::ProbeTable table;
  try {
    table = shaping::probe_table_from_json(root, bad);
  } catch (const shaping::json::exception& e) {
    std::cerr << "BAD_JSON: " << e.what() << "\n";
    std::exit(kExitInput);
  }
  if (!bad.empty()) {
    print_violations(bad);
    std::exit(kExitInput);
  }
  if (!shaping::probe_matches_scenario(table, bundle.scenario)) {
    std::cerr << "PROBE_SHAPE_MISMATCH: probe artifact does not match the scenario\n";
    std::exit(kExitInput);
  }
  return table;
}

int cmd_probe(const std::string& scenario_path, const std::string& mode, long long sessions,
              std::uint64_t seed, int threads, const std::string& out_dir) {
  auto bundle = load_or_exit(scenario_path);
  auto& market = market_or_exit(bundle);
  const auto grid =
      shaping::BonusGrid::make(bundle.scenario.bonus_domain, bundle.scenario.grid_k);

  shaping::ProbeTable table;
  if (mode == "exact") {
    try {
      table = shaping::exact_probe_table(market, grid);
    } catch (const shaping::enumeration_limit_error& e) {
      std::cerr << "ENUMERATION_LIMIT: " << e.what() << "\n";
      return kExitInput;
    }
  } else if (mode == "mc") {
    table = shaping::mc_probe(market, grid, sessions, seed, threads);
  } else {
    std::cerr << "BAD_MODE: --mode must be exact or mc\n";
    return kExitInput;
  }

  std::filesystem::create_directories(out_dir);
  shaping::write_probe_csv(out_dir + "/probes.csv", table, bundle);
  shaping::write_text_file(out_dir + "/probes.json",
                           shaping::probe_table_to_json(table, bundle).dump(2) + "\n");
  std::cout << "probed " << table.n_groups * table.n_sets << " cells x " << table.grid.size()
            << " grid points (eps1=" << shaping::format_numeric(table.eps_exposure)
            << ", eps2=" << shaping::format_numeric(table.eps_reward) << ") -> " << out_dir
            << "/probes.{csv,json}\n";
  return kExitOk;
}

int cmd_solve(const std::string& scenario_path, const std::string& probes_path,
              const std::string& out_dir) {
  auto bundle = load_or_exit(scenario_path);
  const auto table = probe_table_or_exit(probes_path, bundle);

  const auto art = shaping::run_protocol(bundle.scenario, table);

  // Certify against exact ground truth when the marketplace is enumerable;
  // otherwise fall back to the probe table itself as the reference.
  bool certified = false;
  bool used_truth = false;
  shaping::CertificationReport report;
  try {
    if (bundle.market.has_value()) {
      const auto truth = shaping::exact_probe_table(*bundle.market, table.grid);
      report = shaping::certify(art.policy, table.eps_exposure, table.eps_reward, truth,
                                bundle.scenario);
      used_truth = true;
    } else {
      report = shaping::certify(art.policy, table.eps_exposure, table.eps_reward, table,
                                bundle.scenario);
    }
    certified = true;
  } catch (const shaping::budget_exceeded_error&) {
    std::cerr << "warning: oracle budget exceeded, certification skipped\n";
  } catch (const shaping::enumeration_limit_error&) {
    std::cerr << "warning: exact enumeration infeasible, certification skipped\n";
  }

  std::filesystem::create_directories(out_dir);
  shaping::write_text_file(out_dir + "/policy.json",
                           shaping::policy_to_json(art.policy, bundle).dump(2) + "\n");

  std::cout << "objective " << shaping::format_numeric(art.solution.objective) << " (baseline "
            << shaping::format_numeric(art.program.baseline_reward) << ", shaping loss "
            << shaping::format_numeric(art.program.baseline_reward - art.solution.objective)
            << ")";
  for (int j = 0; j < bundle.scenario.n_sets; ++j) {
    std::cout << " | " << bundle.set_ids[static_cast<std::size_t>(j)];
    if (!art.solution.set_feasible[static_cast<std::size_t>(j)]) {
      std::cout << " BEST_EFFORT";
    } else if (certified) {
      std::cout << " margin "
                << shaping::format_numeric(report.exposure_margins[static_cast<std::size_t>(j)]);
    }
  }
  if (certified) {
    shaping::write_text_file(out_dir + "/certification.json",
                             shaping::certification_to_json(report).dump(2) + "\n");
    std::cout << " | " << (used_truth ? "certified-vs-truth " : "certified-vs-probes ")
              << (report.pass ? "PASS" : "FAIL");
  }
  std::cout << " -> " << out_dir << "/policy.json\n";
  return kExitOk;
}

int cmd_oracle(const std::string& scenario_path, const std::string& probes_path,
               const std::string& out_dir) {
  auto bundle = load_or_exit(scenario_path);
  shaping::ProbeTable table;
  if (!probes_path.empty()) {
    table = probe_table_or_exit(probes_path, bundle);
  } else {
    auto& market = market_or_exit(bundle);
    const auto grid =
        shaping::BonusGrid::make(bundle.scenario.bonus_domain, bundle.scenario.grid_k);
    try {
      table = shaping::exact_probe_table(market, grid);
    } catch (const shaping::enumeration_limit_error& e) {
      std::cerr << "ENUMERATION_LIMIT: " << e.what() << "\n";
      return kExitInput;
    }
  }

  try {
    const auto mix = shaping::mixture_optimum(table, bundle.scenario);
    const auto pure = shaping::deterministic_grid_optimum(table, bundle.scenario);
    shaping::json witness = shaping::json::array();
    for (const auto& c : mix.witness) {
      witness.push_back({{"group", bundle.group_ids[static_cast<std::size_t>(c.group)]},
                         {"set", bundle.set_ids[static_cast<std::size_t>(c.set)]},
                         {"bonus_low", table.grid[c.t_low]},
                         {"bonus_high", table.grid[c.t_high]},
                         {"p_high", c.p_high}});
    }
    const shaping::json out = {{"mixture_feasible", mix.feasible},
                               {"mixture_optimum", mix.value},
                               {"deterministic_feasible", pure.feasible},
                               {"deterministic_optimum", pure.value},
                               {"witness", witness}};
    if (!out_dir.empty()) {
      std::filesystem::create_directories(out_dir);
      shaping::write_text_file(out_dir + "/oracle.json", out.dump(2) + "\n");
    }
    std::cout << "mixture optimum " << shaping::format_numeric(mix.value)
              << (mix.feasible ? "" : " (infeasible)") << ", deterministic optimum "
              << shaping::format_numeric(pure.value) << (pure.feasible ? "" : " (infeasible)")
              << "\n";
  } catch (const shaping::budget_exceeded_error& e) {
    std::cerr << "ORACLE_BUDGET_EXCEEDED: " << e.what() << "\n";
    return kExitInput;
  }
  return kExitOk;
}

int cmd_compare(const std::string& scenario_path, const std::string& seeds_spec,
                long long sessions, int threads, bool redraw_per_session,
                const std::string& out_dir) {
  auto bundle = load_or_exit(scenario_path);
  market_or_exit(bundle);
  const auto seeds = parse_seeds(seeds_spec);
  if (seeds.empty()) {
    std::cerr << "BAD_SEEDS: --seeds must name at least one seed\n";
    return kExitInput;
  }
  struct Series {
    std::vector<double> pr, gmv, cr, reward, expected_reward;
  };
  Series none, pid, protocol;

  const auto runs =
      shaping::compare_systems(bundle, seeds, sessions, threads, redraw_per_session);
  auto push = [](Series& s, const shaping::MetricsReport& r) {
    s.pr.push_back(r.purchase_rate);
    s.gmv.push_back(r.realized_gmv);
    s.cr.push_back(r.compliance);
    s.reward.push_back(r.realized_reward);
    s.expected_reward.push_back(r.expected_available ? r.expected_reward : r.realized_reward);
  };
  for (const auto& run : runs) {
    push(none, run.none);
    push(pid, run.pid);
    push(protocol, run.protocol);
  }

  const char* names[3] = {"no-shaping", "pid-bandit", "protocol"};
  const Series* series[3] = {&none, &pid, &protocol};

  const auto gap_pct = [](double value, double base) {
    return base != 0.0 ? 100.0 * (value - base) / base : 0.0;
  };

  std::ostringstream csv;
  csv << "system,pr,pr_stderr,gmv,gmv_stderr,cr,cr_stderr,reward,reward_stderr,"
         "expected_reward,expected_reward_stderr,pr_gap_pct,gmv_gap_pct,reward_gap_pct\n";
  const SeriesStats pr_base = stats(none.pr);
  const SeriesStats gmv_base = stats(none.gmv);
  const SeriesStats reward_base = stats(none.reward);
  for (int s = 0; s < 3; ++s) {
    const SeriesStats pr = stats(series[s]->pr);
    const SeriesStats gmv = stats(series[s]->gmv);
    const SeriesStats cr = stats(series[s]->cr);
    const SeriesStats reward = stats(series[s]->reward);
    const SeriesStats expected = stats(series[s]->expected_reward);
    csv << names[s] << ',' << shaping::format_numeric(pr.mean) << ','
        << shaping::format_numeric(pr.stderr_) << ',' << shaping::format_numeric(gmv.mean) << ','
        << shaping::format_numeric(gmv.stderr_) << ',' << shaping::format_numeric(cr.mean) << ','
        << shaping::format_numeric(cr.stderr_) << ',' << shaping::format_numeric(reward.mean)
        << ',' << shaping::format_numeric(reward.stderr_) << ','
        << shaping::format_numeric(expected.mean) << ','
        << shaping::format_numeric(expected.stderr_) << ','
        << shaping::format_numeric(gap_pct(pr.mean, pr_base.mean)) << ','
        << shaping::format_numeric(gap_pct(gmv.mean, gmv_base.mean)) << ','
        << shaping::format_numeric(gap_pct(reward.mean, reward_base.mean)) << '\n';
  }

  std::filesystem::create_directories(out_dir);
  shaping::write_text_file(out_dir + "/comparison.csv", csv.str());
  std::cout << csv.str();
  std::cout << "-> " << out_dir << "/comparison.csv (" << seeds.size() << " seeds)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  std::setlocale(LC_NUMERIC, "C");
  CLI::App app{"black-box traffic shaping experiments"};
  app.require_subcommand(1);

  std::string scenario_path, probes_path, out_dir = "out";
  std::string mode = "mc", seeds_spec = "1";
  long long sessions = 2000;
  std::uint64_t seed = 1;
  int threads = 1;
  bool redraw_per_session = false;

  auto* probe = app.add_subcommand("probe", "estimate the response table on the bonus grid");
  probe->add_option("--scenario", scenario_path, "scenario JSON")->required();
  probe->add_option("--mode", mode, "exact|mc (default mc)");
  probe->add_option("--sessions", sessions, "sessions per grid point (mc mode)");
  probe->add_option("--seed", seed, "master seed");
  probe->add_option("--threads", threads, "worker count");
  probe->add_option("--out", out_dir, "output directory");

  auto* solve = app.add_subcommand("solve", "probe table -> frontier -> program -> policy");
  solve->add_option("--scenario", scenario_path, "scenario JSON")->required();
  solve->add_option("--probes", probes_path, "probe artifact (probes.json)")->required();
  solve->add_option("--out", out_dir, "output directory");

  auto* compare = app.add_subcommand("compare", "no-shaping vs pid-bandit vs protocol");
  compare->add_option("--scenario", scenario_path, "scenario JSON")->required();
  compare->add_option("--seeds", seeds_spec, "comma list or lo..hi range");
  compare->add_option("--sessions", sessions, "probe sessions per grid point");
  compare->add_option("--threads", threads, "worker count");
  compare->add_flag("--per-session-redraw", redraw_per_session,
                    "flip the policy coin per session instead of per episode");
  compare->add_option("--out", out_dir, "output directory");

  auto* oracle = app.add_subcommand("oracle", "exact mixture optimum on small instances");
  oracle->add_option("--scenario", scenario_path, "scenario JSON")->required();
  oracle->add_option("--probes", probes_path, "probe artifact; exact table when omitted");
  oracle->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (probe->parsed()) {
      return cmd_probe(scenario_path, mode, sessions, seed, threads, out_dir);
    }
    if (solve->parsed()) return cmd_solve(scenario_path, probes_path, out_dir);
    if (compare->parsed()) {
      return cmd_compare(scenario_path, seeds_spec, sessions, threads, redraw_per_session,
                         out_dir);
    }
    if (oracle->parsed()) return cmd_oracle(scenario_path, probes_path, out_dir);
  } catch (const std::invalid_argument& e) {
    std::cerr << "INPUT_ERROR: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "INTERNAL_ERROR: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}
