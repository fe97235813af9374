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

// End-to-end checks through the real binary: exit codes, artifacts,
// reruns. Paths come from the build system.

#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "shaping/io.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

CliResult run_cli(const std::string& args) {
  const std::string cmd = std::string(SHAPING_CLI_PATH) + " " + args + " 2>&1";
  std::array<char, 4096> buf{};
  CliResult result;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (fgets(buf.data(), buf.size(), pipe) != nullptr) result.output += buf.data();
  const int status = pclose(pipe);
  result.exit_code = WEXITSTATUS(status);
  return result;
}

std::string scenario(const std::string& name) {
  return std::string(SHAPING_SCENARIO_DIR) + "/" + name;
}

fs::path fresh_dir(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("shaping_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("missing scenario file exits 2 with a stable code") {
  const auto r = run_cli("probe --scenario /no/such/file.json");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("SCENARIO_NOT_FOUND") != std::string::npos);
}

TEST_CASE("malformed scenario exits 2 and lists violations") {
  const auto dir = fresh_dir("badjson");
  const auto path = dir / "bad.json";
  std::ofstream(path) << R"({"groups": ["a"], "sets": ["s"], "requirements": [],
                            "grid_k": 0, "bonus_domain": [0.0, 1.0], "grid_kk": 1})";
  const auto r = run_cli("probe --scenario " + path.string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("UNKNOWN_KEY") != std::string::npos);
  CHECK(r.output.find("GRID_TOO_COARSE") != std::string::npos);
}

TEST_CASE("probe writes csv and json; identical seeds give identical bytes") {
  const auto dir1 = fresh_dir("probe1");
  const auto dir2 = fresh_dir("probe2");
  const std::string base = "probe --scenario " + scenario("small.json") +
                           " --mode mc --sessions 300 --seed 5 --out ";
  CHECK(run_cli(base + dir1.string()).exit_code == 0);
  CHECK(run_cli(base + dir2.string()).exit_code == 0);
  CHECK(shaping::read_text_file((dir1 / "probes.csv").string()) ==
        shaping::read_text_file((dir2 / "probes.csv").string()));
  CHECK(shaping::read_text_file((dir1 / "probes.json").string()) ==
        shaping::read_text_file((dir2 / "probes.json").string()));
  CHECK(!shaping::read_text_file((dir1 / "probes.csv").string()).empty());
}

TEST_CASE("probe exact mode reports zero stderr") {
  const auto dir = fresh_dir("probe_exact");
  const auto r = run_cli("probe --scenario " + scenario("small.json") +
                         " --mode exact --out " + dir.string());
  CHECK(r.exit_code == 0);
  const auto table_json = shaping::json::parse(
      shaping::read_text_file((dir / "probes.json").string()));
  CHECK(table_json["eps1"].get<double>() == 0.0);
  for (const auto& cell : table_json["cells"]) {
    for (const auto& se : cell["f_stderr"]) CHECK(se.get<double>() == 0.0);
  }
}

TEST_CASE("solve on the bundled two-point artifact yields the known optimum") {
  const auto dir = fresh_dir("solve_demo");
  const auto r = run_cli("solve --scenario " + scenario("two_point_mix.json") + " --probes " +
                         scenario("two_point_mix_probes.json") + " --out " + dir.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("objective 6.5") != std::string::npos);
  CHECK(r.output.find("PASS") != std::string::npos);

  const auto policy_json =
      shaping::json::parse(shaping::read_text_file((dir / "policy.json").string()));
  REQUIRE(policy_json.is_array());
  REQUIRE(policy_json.size() == 1);
  CHECK(policy_json[0]["bonus_low"].get<double>() == 0.5);
  CHECK(policy_json[0]["bonus_high"].get<double>() == 1.0);
  CHECK(policy_json[0]["p_high"].get<double>() == doctest::Approx(0.5));

  const auto report =
      shaping::json::parse(shaping::read_text_file((dir / "certification.json").string()));
  CHECK(report["pass"].get<bool>());
  CHECK(report["oracle_optimum"].get<double>() == doctest::Approx(6.5));
}

TEST_CASE("solve rejects a probe artifact whose shape mismatches the scenario") {
  const auto dir = fresh_dir("solve_mismatch");
  const auto r = run_cli("solve --scenario " + scenario("small.json") + " --probes " +
                         scenario("two_point_mix_probes.json") + " --out " + dir.string());
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("PROBE_SHAPE_MISMATCH") != std::string::npos);
}

TEST_CASE("solve with zero floors emits the zero-bonus policy") {
  const auto dir = fresh_dir("solve_zero");
  // Clone the demo scenario with a zero floor.
  auto root = shaping::json::parse(
      shaping::read_text_file(scenario("two_point_mix.json")));
  root["requirements"][0]["floor"] = 0.0;
  const auto path = dir / "zero.json";
  std::ofstream(path) << root.dump(2);
  const auto r = run_cli("solve --scenario " + path.string() + " --probes " +
                         scenario("two_point_mix_probes.json") + " --out " + dir.string());
  CHECK(r.exit_code == 0);
  const auto policy_json =
      shaping::json::parse(shaping::read_text_file((dir / "policy.json").string()));
  CHECK(policy_json[0]["bonus_low"].get<double>() == 0.0);
  CHECK(policy_json[0]["p_high"].get<double>() == 0.0);
}

TEST_CASE("solve flags best-effort sets and still exits 0") {
  const auto dir = fresh_dir("solve_infeasible");
  auto root = shaping::json::parse(
      shaping::read_text_file(scenario("two_point_mix.json")));
  root["requirements"][0]["floor"] = 99.0;
  const auto path = dir / "steep.json";
  std::ofstream(path) << root.dump(2);
  const auto r = run_cli("solve --scenario " + path.string() + " --probes " +
                         scenario("two_point_mix_probes.json") + " --out " + dir.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("BEST_EFFORT") != std::string::npos);
}

TEST_CASE("oracle subcommand prints both optima") {
  const auto dir = fresh_dir("oracle_demo");
  const auto r = run_cli("oracle --scenario " + scenario("two_point_mix.json") + " --probes " +
                         scenario("two_point_mix_probes.json") + " --out " + dir.string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("mixture optimum 6.5") != std::string::npos);
  CHECK(r.output.find("deterministic optimum 4") != std::string::npos);
  const auto oracle_json =
      shaping::json::parse(shaping::read_text_file((dir / "oracle.json").string()));
  CHECK(oracle_json["mixture_optimum"].get<double>() == doctest::Approx(6.5));
}

TEST_CASE("compare with a single seed reports zero standard errors") {
  const auto dir = fresh_dir("compare_single");
  const auto r = run_cli("compare --scenario " + scenario("small.json") +
                         " --seeds 3 --sessions 200 --out " + dir.string());
  CHECK(r.exit_code == 0);
  const auto body = shaping::read_text_file((dir / "comparison.csv").string());
  REQUIRE(!body.empty());
  // stderr columns (3rd, 5th, ...) are zero with one seed
  std::istringstream lines(body);
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line)) {
    std::istringstream cells(line);
    std::string cell;
    int idx = 0;
    while (std::getline(cells, cell, ',')) {
      if (idx == 2 || idx == 4 || idx == 6 || idx == 8 || idx == 10) CHECK(cell == "0");
      ++idx;
    }
  }
}

TEST_CASE("compare with a zero horizon yields all-zero metric rows") {
  const auto dir = fresh_dir("compare_zero");
  auto root = shaping::json::parse(shaping::read_text_file(scenario("small.json")));
  root["horizon_sessions"] = 0;
  const auto path = dir / "zero_horizon.json";
  std::ofstream(path) << root.dump(2);
  const auto r = run_cli("compare --scenario " + path.string() +
                         " --seeds 1 --sessions 100 --out " + dir.string());
  CHECK(r.exit_code == 0);
  const auto body = shaping::read_text_file((dir / "comparison.csv").string());
  std::istringstream lines(body);
  std::string line;
  std::getline(lines, line);
  while (std::getline(lines, line)) {
    std::istringstream cells(line);
    std::string cell;
    std::getline(cells, cell, ',');  // system name
    for (int idx = 1; idx <= 8 && std::getline(cells, cell, ','); ++idx) {
      CHECK(cell == "0");
    }
  }
}

TEST_CASE("policy artifact reloads into the identical policy") {
  const auto dir = fresh_dir("roundtrip");
  const auto r = run_cli("solve --scenario " + scenario("two_point_mix.json") + " --probes " +
                         scenario("two_point_mix_probes.json") + " --out " + dir.string());
  REQUIRE(r.exit_code == 0);
  const auto bundle =
      std::move(*shaping::load_scenario_file(scenario("two_point_mix.json")).bundle);
  const auto encoded =
      shaping::json::parse(shaping::read_text_file((dir / "policy.json").string()));
  std::vector<shaping::Violation> bad;
  const auto policy = shaping::policy_from_json(encoded, bundle, bad);
  CHECK(bad.empty());
  CHECK(shaping::policy_to_json(policy, bundle) == encoded);
}
