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

// Acceptance suite: one pass/fail line per criterion. Run it as
//   acceptance --cli <path-to-cli> --scenarios <dir> [criterion numbers...]

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "shaping/harness.hpp"
#include "shaping/hull.hpp"
#include "shaping/io.hpp"
#include "shaping/oracle.hpp"
#include "shaping/protocol.hpp"
#include "shaping/reference.hpp"
#include "shaping/rng.hpp"

namespace fs = std::filesystem;
using namespace shaping;

namespace {

std::string g_cli;
std::string g_scenarios;

struct Check {
  bool ok = true;
  std::string note;

  void expect(bool condition, const std::string& why) {
    if (!condition && ok) {
      ok = false;
      note = why;
    }
  }
};

// ---------- shared generators ----------

std::vector<FrontierPoint> random_points(SplitMix64& rng, int max_points, bool lattice) {
  const int n = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(max_points)));
  std::vector<FrontierPoint> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    FrontierPoint p;
    if (lattice) {
      p.exposure = static_cast<double>(rng.below(32));
      p.reward = static_cast<double>(rng.below(32));
    } else {
      p.exposure = rng.uniform() * 50.0;
      p.reward = rng.uniform() * 50.0;
    }
    p.bonus = rng.uniform();
    pts.push_back(p);
  }
  return pts;
}

struct RandomInstance {
  Scenario scenario;
  ProbeTable table;
};

// Small random covering instances; about half carry probe-noise style
// inversions so the frontier has rising parts.
RandomInstance random_instance(SplitMix64& rng, bool force_feasible) {
  RandomInstance inst;
  Scenario& sc = inst.scenario;
  sc.n_groups = 1 + static_cast<int>(rng.below(3));
  sc.n_sets = 1 + static_cast<int>(rng.below(3));
  sc.grid_k = 2 + static_cast<int>(rng.below(7));
  ProbeTable& t = inst.table;
  t.n_groups = sc.n_groups;
  t.n_sets = sc.n_sets;
  t.grid = BonusGrid::make(sc.bonus_domain, sc.grid_k);
  t.cells.resize(static_cast<std::size_t>(sc.cell_count()));
  const bool noisy = rng.bernoulli(0.5);
  for (auto& cell : t.cells) {
    const int pts = t.grid.size();
    double f = rng.uniform() * 5.0;
    double g = 50.0 + rng.uniform() * 50.0;
    for (int p = 0; p < pts; ++p) {
      cell.exposure.push_back(std::max(0.0, f));
      cell.reward.push_back(std::max(0.0, g));
      f += rng.uniform() * 10.0 + (noisy ? (rng.uniform() - 0.5) * 4.0 : 0.0);
      g -= rng.uniform() * 8.0;
      if (noisy) g += (rng.uniform() - 0.5) * 6.0;
    }
    cell.exposure_stderr.assign(static_cast<std::size_t>(pts), 0.0);
    cell.reward_stderr.assign(static_cast<std::size_t>(pts), 0.0);
  }
  sc.requirements.assign(static_cast<std::size_t>(sc.n_sets), 0.0);
  for (int j = 0; j < sc.n_sets; ++j) {
    double base = 0.0, cap = 0.0;
    for (int i = 0; i < sc.n_groups; ++i) {
      const auto& c = t.cell(i, j);
      double mn = 1e300, mx = -1e300;
      for (double v : c.exposure) {
        mn = std::min(mn, v);
        mx = std::max(mx, v);
      }
      base += mn;
      cap += mx;
    }
    const double frac = force_feasible ? 0.95 * rng.uniform() : 1.2 * rng.uniform();
    sc.requirements[static_cast<std::size_t>(j)] = base + frac * (cap - base);
  }
  return inst;
}

ScenarioBundle load_bundle(const std::string& name) {
  auto out = load_scenario_file(g_scenarios + "/" + name);
  if (!out.ok()) {
    std::ostringstream ss;
    ss << "cannot load " << name << ":";
    for (const auto& v : out.violations) ss << " " << v.code;
    throw std::runtime_error(ss.str());
  }
  return std::move(*out.bundle);
}

int run_cli(const std::string& args, std::string* output = nullptr) {
  const std::string cmd = g_cli + " " + args + " 2>&1";
  std::array<char, 4096> buf{};
  std::string text;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return -1;
  while (fgets(buf.data(), buf.size(), pipe) != nullptr) text += buf.data();
  if (output != nullptr) *output = text;
  return WEXITSTATUS(pclose(pipe));
}

struct Stats {
  double mean = 0.0;
  double se = 0.0;
};

Stats stats_of(const std::vector<double>& xs) {
  Stats s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.se = std::sqrt(ss / (static_cast<double>(xs.size()) - 1.0) /
                     static_cast<double>(xs.size()));
  }
  return s;
}

// ---------- criteria ----------

// Frontier dominance on 1000 random point sets, zero violations, < 5 s.
Check criterion_1() {
  Check c;
  const auto start = std::chrono::steady_clock::now();
  SplitMix64 rng(0xACC1);
  long violations = 0;
  for (int it = 0; it < 1000; ++it) {
    auto pts = random_points(rng, 64, it % 2 == 0);
    const auto curve = outer_convex_curve(pts);
    for (const auto& p : pts) {
      if (hull_value_at(curve, p.exposure) < p.reward) ++violations;
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.expect(violations == 0, "dominance violated " + std::to_string(violations) + " times");
  c.expect(secs < 5.0, "took " + std::to_string(secs) + " s");
  c.note = "1000 point sets, " + std::to_string(secs).substr(0, 5) + " s";
  return c;
}

// Scan output equals the brute-force chord-survivor set, as a function,
// on 500 random instances.
Check criterion_2() {
  Check c;
  SplitMix64 rng(0xACC2);
  for (int it = 0; it < 500 && c.ok; ++it) {
    auto pts = random_points(rng, 24, it % 3 != 0);
    const auto curve = outer_convex_curve(pts);

    std::sort(pts.begin(), pts.end(), [](const FrontierPoint& a, const FrontierPoint& b) {
      if (a.exposure != b.exposure) return a.exposure < b.exposure;
      return a.reward > b.reward;
    });
    std::vector<FrontierPoint> collapsed;
    for (const auto& p : pts) {
      if (!collapsed.empty() &&
          std::abs(collapsed.back().exposure - p.exposure) <=
              1e-9 * std::max(std::abs(collapsed.back().exposure), std::abs(p.exposure))) {
        continue;
      }
      collapsed.push_back(p);
    }
    std::vector<FrontierPoint> survivors;
    for (const auto& p : collapsed) {
      bool eliminated = false;
      for (const auto& a : collapsed) {
        for (const auto& b : collapsed) {
          if (a.exposure <= p.exposure && p.exposure <= b.exposure &&
              eliminate_predicate(p, a, b)) {
            eliminated = true;
          }
        }
      }
      if (!eliminated) survivors.push_back(p);
    }

    // Compare as functions at survivor knots and midpoints.
    auto survivor_value = [&survivors](double x) {
      for (std::size_t i = 1; i < survivors.size(); ++i) {
        if (x <= survivors[i].exposure) {
          const auto& l = survivors[i - 1];
          const auto& r = survivors[i];
          if (x == l.exposure) return l.reward;
          if (x == r.exposure) return r.reward;
          const double t = (x - l.exposure) / (r.exposure - l.exposure);
          return l.reward + t * (r.reward - l.reward);
        }
      }
      return survivors.back().reward;
    };
    for (std::size_t i = 0; i < survivors.size() && c.ok; ++i) {
      const double x = survivors[i].exposure;
      const double diff = std::abs(hull_value_at(curve, x) - survivor_value(x));
      c.expect(diff <= 1e-9 * std::max(1.0, std::abs(survivor_value(x))),
               "mismatch at a survivor knot, instance " + std::to_string(it));
      if (i + 1 < survivors.size()) {
        const double mid = 0.5 * (x + survivors[i + 1].exposure);
        const double mdiff = std::abs(hull_value_at(curve, mid) - survivor_value(mid));
        c.expect(mdiff <= 1e-9 * std::max(1.0, std::abs(survivor_value(mid))),
                 "mismatch between knots, instance " + std::to_string(it));
      }
    }
  }
  c.note = "500 instances";
  return c;
}

// Greedy vs generic simplex on 200 random feasible instances.
Check criterion_3() {
  Check c;
  SplitMix64 rng(0xACC3);
  double worst = 0.0;
  for (int it = 0; it < 200 && c.ok; ++it) {
    const auto inst = random_instance(rng, true);
    std::vector<HullCurve> curves;
    for (int i = 0; i < inst.scenario.n_groups; ++i) {
      for (int j = 0; j < inst.scenario.n_sets; ++j) {
        curves.push_back(cell_frontier(inst.table.cell(i, j), inst.table.grid));
      }
    }
    const auto program = build_program(curves, inst.scenario);
    const auto greedy = solve_greedy(program);
    const auto reference = solve_reference(program);
    const double scale =
        std::max({1.0, std::abs(greedy.objective), std::abs(reference.objective)});
    const double rel = std::abs(greedy.objective - reference.objective) / scale;
    worst = std::max(worst, rel);
    c.expect(rel <= 1e-9, "objectives differ by " + std::to_string(rel) + " relative");
  }
  std::ostringstream ss;
  ss << "200 instances, worst rel gap " << worst;
  c.note = ss.str();
  return c;
}

// Protocol reward equals the mixture oracle with exact probes; coverage
// floors hold; deterministic benchmark never wins, strictly loses on the
// bundled two-point artifact.
Check criterion_4() {
  Check c;
  SplitMix64 rng(0xACC4);
  for (int it = 0; it < 100 && c.ok; ++it) {
    const auto inst = random_instance(rng, true);
    const auto art = run_protocol(inst.scenario, inst.table);
    const auto mix = mixture_optimum(inst.table, inst.scenario);
    c.expect(mix.feasible, "oracle declared a feasible instance infeasible");
    if (!mix.feasible) break;
    const auto e = policy_expectation(art.policy, inst.table);
    const double scale = std::max(1.0, std::abs(mix.value));
    c.expect(std::abs(e.total_reward - mix.value) <= 1e-9 * scale,
             "protocol reward differs from g* on instance " + std::to_string(it));
    for (int j = 0; j < inst.scenario.n_sets; ++j) {
      c.expect(e.set_exposures[static_cast<std::size_t>(j)] >=
                   inst.scenario.requirements[static_cast<std::size_t>(j)] - 1e-9,
               "coverage floor missed on instance " + std::to_string(it));
    }
    const auto pure = deterministic_grid_optimum(inst.table, inst.scenario);
    if (pure.feasible) {
      c.expect(pure.value <= e.total_reward + 1e-9 * scale,
               "deterministic benchmark beat the protocol");
    }
  }

  // Bundled artifact: mixing strictly beats the best pure assignment.
  auto bundle = load_bundle("two_point_mix.json");
  std::ifstream in(g_scenarios + "/two_point_mix_probes.json");
  json probes_json;
  in >> probes_json;
  std::vector<Violation> bad;
  const auto table = probe_table_from_json(probes_json, bad);
  c.expect(bad.empty(), "bundled probe artifact failed to parse");
  const auto art = run_protocol(bundle.scenario, table);
  const auto e = policy_expectation(art.policy, table);
  const auto pure = deterministic_grid_optimum(table, bundle.scenario);
  c.expect(pure.feasible, "bundled pure benchmark infeasible");
  c.expect(e.total_reward > pure.value + 1e-9,
           "expected strict improvement over the deterministic benchmark");
  std::ostringstream ss;
  ss << "100 instances; bundled artifact " << e.total_reward << " > " << pure.value;
  c.note = ss.str();
  return c;
}

// Noisy-probe certification against ground truth passes in >= 95 of 100
// seeded trials, < 2 min.
Check criterion_5() {
  Check c;
  const auto start = std::chrono::steady_clock::now();
  auto bundle = load_bundle("small.json");
  const auto grid = BonusGrid::make(bundle.scenario.bonus_domain, bundle.scenario.grid_k);
  const auto truth = exact_probe_table(*bundle.market, grid);
  int passed = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    const auto table = mc_probe(*bundle.market, grid, 2000, seed);
    const auto art = run_protocol(bundle.scenario, table);
    const auto rep =
        certify(art.policy, table.eps_exposure, table.eps_reward, truth, bundle.scenario);
    passed += rep.pass ? 1 : 0;
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  c.expect(passed >= 95, "only " + std::to_string(passed) + " of 100 trials certified");
  c.expect(secs < 120.0, "took " + std::to_string(secs) + " s");
  c.note = std::to_string(passed) + "/100 trials, " + std::to_string(secs).substr(0, 5) + " s";
  return c;
}

// Mixing-coin sampling: empirical mean exposure over 1e5 draws within
// 3 binomial standard errors of the expectation, per cell.
Check criterion_6() {
  Check c;
  auto bundle = load_bundle("small.json");
  const auto grid = BonusGrid::make(bundle.scenario.bonus_domain, bundle.scenario.grid_k);
  const auto table = mc_probe(*bundle.market, grid, 2000, 7);
  const auto art = run_protocol(bundle.scenario, table);

  const int draws = 100000;
  std::vector<double> mean_exposure(art.policy.cells.size(), 0.0);
  for (int d = 0; d < draws; ++d) {
    const auto bonuses = sample_policy(art.policy, static_cast<std::uint64_t>(d));
    for (std::size_t cell = 0; cell < bonuses.size(); ++cell) {
      const auto& mix = art.policy.cells[cell];
      const int t = table.grid.index_of(bonuses[cell]);
      mean_exposure[cell] +=
          table.cell(mix.group, mix.set).exposure[static_cast<std::size_t>(t)];
    }
  }
  for (std::size_t cell = 0; cell < art.policy.cells.size(); ++cell) {
    mean_exposure[cell] /= draws;
    const auto& mix = art.policy.cells[cell];
    const auto& probe = table.cell(mix.group, mix.set);
    const double f_lo = probe.exposure[static_cast<std::size_t>(table.grid.index_of(mix.bonus_low))];
    const double f_hi =
        probe.exposure[static_cast<std::size_t>(table.grid.index_of(mix.bonus_high))];
    const double expected = (1.0 - mix.p_high) * f_lo + mix.p_high * f_hi;
    const double sigma =
        std::abs(f_hi - f_lo) * std::sqrt(mix.p_high * (1.0 - mix.p_high) / draws);
    const double err = std::abs(mean_exposure[cell] - expected);
    if (sigma == 0.0) {
      c.expect(err <= 1e-9, "deterministic cell drifted");
    } else {
      c.expect(err <= 3.0 * sigma, "cell mean off by " + std::to_string(err / sigma) + " sigma");
    }
  }
  c.note = "1e5 draws per cell";
  return c;
}

// Finer grids never lose expected reward (2-stderr tolerance), evaluated
// against exact ground truth on the smooth bundled scenario.
Check criterion_7() {
  Check c;
  auto bundle = load_bundle("smooth.json");
  double prev_mean = -1e300, prev_se = 0.0;
  std::ostringstream trail;
  for (const int k : {2, 4, 8, 16, 32}) {
    Scenario sc = bundle.scenario;
    sc.grid_k = k;
    const auto grid = BonusGrid::make(sc.bonus_domain, k);
    const auto truth = exact_probe_table(*bundle.market, grid);
    std::vector<double> rewards;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto table = mc_probe(*bundle.market, grid, 4000, seed);
      const auto art = run_protocol(sc, table);
      rewards.push_back(policy_expectation(art.policy, truth).total_reward);
    }
    const auto s = stats_of(rewards);
    const double tolerance = 2.0 * std::sqrt(s.se * s.se + prev_se * prev_se);
    c.expect(s.mean >= prev_mean - tolerance,
             "reward dropped at k=" + std::to_string(k));
    trail << (k == 2 ? "" : " -> ") << std::llround(s.mean);
    prev_mean = s.mean;
    prev_se = s.se;
  }
  c.note = trail.str();
  return c;
}

// Directional comparison on the bundled default scenario, 20 seeds, 95%
// confidence: both shaping systems raise CR and cost reward versus
// no-shaping; the protocol beats PID+bandit on reward at no worse CR.
Check criterion_8() {
  Check c;
  auto bundle = load_bundle("default.json");
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 1; s <= 20; ++s) seeds.push_back(s);
  const auto runs = compare_systems(bundle, seeds, 8000);

  auto paired = [&runs](const std::function<double(const CompareRun&)>& f) {
    std::vector<double> xs;
    xs.reserve(runs.size());
    for (const auto& r : runs) xs.push_back(f(r));
    return stats_of(xs);
  };
  const double t95 = 1.7291;  // one-sided Student t, 19 degrees of freedom

  const auto cr_pid_gain =
      paired([](const CompareRun& r) { return r.pid.compliance - r.none.compliance; });
  const auto cr_proto_gain =
      paired([](const CompareRun& r) { return r.protocol.compliance - r.none.compliance; });
  c.expect(cr_pid_gain.mean - t95 * cr_pid_gain.se > 0.0, "pid CR not above no-shaping");
  c.expect(cr_proto_gain.mean - t95 * cr_proto_gain.se > 0.0, "protocol CR not above no-shaping");

  const auto reward_pid_cost = paired(
      [](const CompareRun& r) { return r.none.realized_reward - r.pid.realized_reward; });
  const auto reward_proto_cost = paired(
      [](const CompareRun& r) { return r.none.realized_reward - r.protocol.realized_reward; });
  c.expect(reward_pid_cost.mean - t95 * reward_pid_cost.se > 0.0,
           "pid reward not below no-shaping");
  c.expect(reward_proto_cost.mean - t95 * reward_proto_cost.se > 0.0,
           "protocol reward not below no-shaping");

  const auto reward_edge = paired(
      [](const CompareRun& r) { return r.protocol.realized_reward - r.pid.realized_reward; });
  c.expect(reward_edge.mean - t95 * reward_edge.se > 0.0,
           "protocol reward does not dominate pid at 95% confidence");
  const auto cr_edge = paired(
      [](const CompareRun& r) { return r.protocol.compliance - r.pid.compliance; });
  c.expect(cr_edge.mean + t95 * cr_edge.se >= 0.0, "protocol CR significantly worse than pid");

  std::ostringstream ss;
  ss << "reward edge " << reward_edge.mean << " +- " << reward_edge.se << ", cr edge "
     << cr_edge.mean << " +- " << cr_edge.se;
  c.note = ss.str();
  return c;
}

// Byte-identical artifacts across reruns and worker counts, through the
// real CLI.
Check criterion_9() {
  Check c;
  const fs::path base = fs::temp_directory_path() / "shaping_acceptance_det";
  fs::remove_all(base);
  fs::create_directories(base);
  const std::string small = g_scenarios + "/small.json";

  auto pipeline = [&](const std::string& tag, int threads) -> fs::path {
    const fs::path dir = base / tag;
    fs::create_directories(dir);
    std::string out;
    int rc = run_cli("probe --scenario " + small + " --mode mc --sessions 500 --seed 11" +
                         " --threads " + std::to_string(threads) + " --out " + dir.string(),
                     &out);
    if (rc != 0) c.expect(false, "probe failed: " + out);
    rc = run_cli("solve --scenario " + small + " --probes " + (dir / "probes.json").string() +
                     " --out " + dir.string(),
                 &out);
    if (rc != 0) c.expect(false, "solve failed: " + out);
    rc = run_cli("compare --scenario " + small + " --seeds 1..3 --sessions 400 --threads " +
                     std::to_string(threads) + " --out " + dir.string(),
                 &out);
    if (rc != 0) c.expect(false, "compare failed: " + out);
    return dir;
  };

  const auto d1 = pipeline("run1_t1", 1);
  const auto d2 = pipeline("run2_t1", 1);
  const auto d3 = pipeline("run3_t4", 4);
  for (const char* name :
       {"probes.csv", "probes.json", "policy.json", "certification.json", "comparison.csv"}) {
    const auto a = read_text_file((d1 / name).string());
    const auto b = read_text_file((d2 / name).string());
    const auto d = read_text_file((d3 / name).string());
    c.expect(!a.empty(), std::string(name) + " missing");
    c.expect(a == b, std::string(name) + " differs across reruns");
    c.expect(a == d, std::string(name) + " differs across worker counts");
  }
  c.note = "probe+solve+compare, 1 vs 4 workers";
  return c;
}

// The three compliance-rate pocket examples, exact.
Check criterion_10() {
  Check c;
  const std::vector<double> req{1.0, 0.5};
  c.expect(compliance_rate(std::vector<double>{1.0, 0.5}, req) == 1.0, "identity case");
  c.expect(compliance_rate(std::vector<double>{0.5, 1.0}, req) == 0.75, "mixed case");
  c.expect(compliance_rate(std::vector<double>{0.0, 0.0}, req) == 0.0, "zero case");
  c.note = "3 exact checks";
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> wanted;
  for (int a = 1; a < argc; ++a) {
    const std::string arg = argv[a];
    if (arg == "--cli" && a + 1 < argc) {
      g_cli = argv[++a];
    } else if (arg == "--scenarios" && a + 1 < argc) {
      g_scenarios = argv[++a];
    } else {
      wanted.push_back(std::atoi(arg.c_str()));
    }
  }
  if (g_cli.empty() || g_scenarios.empty()) {
    std::cerr << "usage: acceptance --cli <binary> --scenarios <dir> [criteria...]\n";
    return 2;
  }

  using Criterion = std::function<Check()>;
  const std::vector<std::pair<std::string, Criterion>> criteria = {
      {"frontier dominance on random point sets", criterion_1},
      {"scan equals brute-force chord survivors", criterion_2},
      {"greedy matches the reference LP solver", criterion_3},
      {"protocol attains the grid mixture optimum", criterion_4},
      {"noisy-probe certification margins hold", criterion_5},
      {"sampled assignments are unbiased", criterion_6},
      {"grid refinement never loses reward", criterion_7},
      {"directional comparison vs pid-bandit", criterion_8},
      {"byte-identical artifacts across runs and workers", criterion_9},
      {"compliance-rate unit examples", criterion_10},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!wanted.empty() &&
        std::find(wanted.begin(), wanted.end(), number) == wanted.end()) {
      continue;
    }
    Check result;
    try {
      result = criteria[i].second();
    } catch (const std::exception& e) {
      result.ok = false;
      result.note = std::string("exception: ") + e.what();
    }
    if (!result.ok) ++failures;
    std::printf("[%s] criterion %d: %s%s%s\n", result.ok ? "PASS" : "FAIL", number,
                criteria[i].first.c_str(), result.note.empty() ? "" : " — ",
                result.note.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
