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
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "shaping/baseline.hpp"
#include "shaping/marketplace.hpp"
#include "shaping/oracle.hpp"
#include "shaping/policy.hpp"
#include "shaping/probe.hpp"
#include "shaping/scenario.hpp"

namespace shaping {

using json = nlohmann::json;

/// A scenario file fully parsed: the core problem, the optional simulated
/// marketplace behind it, and baseline-controller parameters.
struct ScenarioBundle {
  Scenario scenario;
  std::vector<std::string> group_ids;
  std::vector<std::string> set_ids;
  std::optional<Marketplace> market;
  BaselineParams baseline;

  int group_index(const std::string& id) const {
    for (std::size_t i = 0; i < group_ids.size(); ++i) {
      if (group_ids[i] == id) return static_cast<int>(i);
    }
    return -1;
  }
  int set_index(const std::string& id) const {
    for (std::size_t j = 0; j < set_ids.size(); ++j) {
      if (set_ids[j] == id) return static_cast<int>(j);
    }
    return -1;
  }
};

struct LoadOutcome {
  std::optional<ScenarioBundle> bundle;
  std::vector<Violation> violations;

  bool ok() const { return bundle.has_value() && violations.empty(); }
};

namespace detail {

// Parsing is strict: unknown keys are rejected so config typos surface as
// violations instead of silently-ignored settings.
inline void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                       const std::string& where, std::vector<Violation>& out) {
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed) {
      if (item.key() == key) {
        known = true;
        break;
      }
    }
    if (!known) out.push_back({"UNKNOWN_KEY", where + "." + item.key()});
  }
}

inline bool want(const json& obj, const char* key, json::value_t type, const std::string& where,
                 std::vector<Violation>& out, bool required = true) {
  if (!obj.contains(key)) {
    if (required) out.push_back({"MISSING_KEY", where + "." + key});
    return false;
  }
  const json& v = obj.at(key);
  const bool numeric_ok = type == json::value_t::number_float && v.is_number();
  const bool int_ok = type == json::value_t::number_integer && v.is_number_integer();
  if (!numeric_ok && !int_ok && v.type() != type) {
    out.push_back({"BAD_TYPE", where + "." + key});
    return false;
  }
  return true;
}

}  // namespace detail

inline LoadOutcome parse_scenario_json(const json& root) {
  using detail::check_keys;
  using detail::want;
  LoadOutcome out;
  std::vector<Violation>& bad = out.violations;

  if (!root.is_object()) {
    bad.push_back({"BAD_JSON", "top-level value must be an object"});
    return out;
  }
  check_keys(root,
             {"groups", "sets", "requirements", "grid_k", "bonus_domain", "horizon_sessions",
              "reward_channel", "templates", "baseline"},
             "scenario", bad);

  ScenarioBundle bundle;
  if (want(root, "groups", json::value_t::array, "scenario", bad)) {
    for (const auto& g : root["groups"]) bundle.group_ids.push_back(g.get<std::string>());
  }
  if (want(root, "sets", json::value_t::array, "scenario", bad)) {
    for (const auto& s : root["sets"]) bundle.set_ids.push_back(s.get<std::string>());
  }
  bundle.scenario.n_groups = static_cast<int>(bundle.group_ids.size());
  bundle.scenario.n_sets = static_cast<int>(bundle.set_ids.size());
  bundle.scenario.requirements.assign(bundle.set_ids.size(), 0.0);

  if (want(root, "requirements", json::value_t::array, "scenario", bad)) {
    for (const auto& r : root["requirements"]) {
      check_keys(r, {"set", "floor"}, "requirements[]", bad);
      if (!want(r, "set", json::value_t::string, "requirements[]", bad) ||
          !want(r, "floor", json::value_t::number_float, "requirements[]", bad)) {
        continue;
      }
      const int j = bundle.set_index(r["set"].get<std::string>());
      if (j < 0) {
        bad.push_back({"UNKNOWN_SET", "requirements[].set = " + r["set"].get<std::string>()});
        continue;
      }
      bundle.scenario.requirements[static_cast<std::size_t>(j)] = r["floor"].get<double>();
    }
  }
  if (want(root, "grid_k", json::value_t::number_integer, "scenario", bad)) {
    bundle.scenario.grid_k = root["grid_k"].get<int>();
  }
  if (want(root, "bonus_domain", json::value_t::array, "scenario", bad)) {
    const auto& d = root["bonus_domain"];
    if (d.size() != 2 || !d[0].is_number() || !d[1].is_number()) {
      bad.push_back({"BAD_TYPE", "scenario.bonus_domain must be [lo, hi]"});
    } else {
      bundle.scenario.bonus_domain = {d[0].get<double>(), d[1].get<double>()};
    }
  }

  RewardChannel channel = RewardChannel::clicks;
  if (root.contains("reward_channel")) {
    const std::string c = root["reward_channel"].is_string()
                              ? root["reward_channel"].get<std::string>()
                              : std::string();
    if (c == "clicks") {
      channel = RewardChannel::clicks;
    } else if (c == "purchases") {
      channel = RewardChannel::purchases;
    } else {
      bad.push_back({"BAD_REWARD_CHANNEL", "reward_channel must be clicks or purchases"});
    }
  }

  if (root.contains("templates")) {
    Marketplace market;
    market.n_groups = bundle.scenario.n_groups;
    market.n_sets = bundle.scenario.n_sets;
    market.channel = channel;
    if (want(root, "horizon_sessions", json::value_t::number_integer, "scenario", bad)) {
      market.horizon_sessions = root["horizon_sessions"].get<long long>();
    }
    market.templates.resize(
        static_cast<std::size_t>(bundle.scenario.n_groups * bundle.scenario.n_sets));
    std::vector<bool> seen(market.templates.size(), false);

    if (want(root, "templates", json::value_t::array, "scenario", bad)) {
      for (const auto& t : root["templates"]) {
        const std::string where = "templates[]";
        check_keys(t, {"group", "set", "slots", "session_weight", "noise", "candidates"}, where,
                   bad);
        if (!want(t, "group", json::value_t::string, where, bad) ||
            !want(t, "set", json::value_t::string, where, bad)) {
          continue;
        }
        const int i = bundle.group_index(t["group"].get<std::string>());
        const int j = bundle.set_index(t["set"].get<std::string>());
        if (i < 0) bad.push_back({"UNKNOWN_GROUP", where + ".group"});
        if (j < 0) bad.push_back({"UNKNOWN_SET", where + ".set"});
        if (i < 0 || j < 0) continue;
        const std::size_t cell = static_cast<std::size_t>(market.cell_index(i, j));
        if (seen[cell]) {
          bad.push_back({"DUPLICATE_TEMPLATE",
                         "(" + t["group"].get<std::string>() + "," + t["set"].get<std::string>() +
                             ")"});
          continue;
        }
        seen[cell] = true;

        SessionTemplate tpl;
        tpl.group = i;
        tpl.set = j;
        if (want(t, "slots", json::value_t::number_integer, where, bad)) {
          tpl.slots = t["slots"].get<int>();
        }
        if (want(t, "session_weight", json::value_t::number_float, where, bad)) {
          tpl.session_weight = t["session_weight"].get<double>();
        }
        if (want(t, "noise", json::value_t::object, where, bad)) {
          const json& noise = t["noise"];
          check_keys(noise, {"support", "probs"}, where + ".noise", bad);
          if (want(noise, "support", json::value_t::array, where + ".noise", bad)) {
            tpl.noise.support.clear();
            for (const auto& v : noise["support"]) tpl.noise.support.push_back(v.get<double>());
          }
          if (want(noise, "probs", json::value_t::array, where + ".noise", bad)) {
            tpl.noise.probs.clear();
            for (const auto& v : noise["probs"]) tpl.noise.probs.push_back(v.get<double>());
          }
        }
        if (want(t, "candidates", json::value_t::array, where, bad)) {
          for (const auto& c : t["candidates"]) {
            const std::string cw = where + ".candidates[]";
            check_keys(c, {"base_score", "click_prob", "purchase_prob", "price", "target"}, cw,
                       bad);
            ItemSpec item;
            if (want(c, "base_score", json::value_t::number_float, cw, bad)) {
              item.base_score = c["base_score"].get<double>();
            }
            if (want(c, "click_prob", json::value_t::number_float, cw, bad)) {
              item.click_prob = c["click_prob"].get<double>();
            }
            if (want(c, "purchase_prob", json::value_t::number_float, cw, bad)) {
              item.purchase_prob = c["purchase_prob"].get<double>();
            }
            if (want(c, "price", json::value_t::number_float, cw, bad)) {
              item.price = c["price"].get<double>();
            }
            if (want(c, "target", json::value_t::boolean, cw, bad)) {
              item.target = c["target"].get<bool>();
            }
            tpl.candidates.push_back(item);
          }
        }
        market.templates[cell] = tpl;
      }
    }
    for (std::size_t cell = 0; cell < seen.size(); ++cell) {
      if (!seen[cell]) {
        bad.push_back({"MISSING_TEMPLATE", "cell index " + std::to_string(cell)});
      }
    }
    bundle.market = std::move(market);
  }

  if (root.contains("baseline")) {
    const json& b = root["baseline"];
    detail::check_keys(b, {"k_p", "k_i", "k_d", "epochs", "epsilon_explore"}, "baseline", bad);
    if (b.contains("k_p")) bundle.baseline.gains.k_p = b["k_p"].get<double>();
    if (b.contains("k_i")) bundle.baseline.gains.k_i = b["k_i"].get<double>();
    if (b.contains("k_d")) bundle.baseline.gains.k_d = b["k_d"].get<double>();
    if (b.contains("epochs")) bundle.baseline.epochs = b["epochs"].get<int>();
    if (b.contains("epsilon_explore")) {
      bundle.baseline.bandit.epsilon_explore = b["epsilon_explore"].get<double>();
    }
  }

  const auto semantic = validate_scenario(bundle.scenario);
  bad.insert(bad.end(), semantic.begin(), semantic.end());
  if (bundle.market.has_value() && bad.empty()) {
    const auto market_bad = validate_marketplace(*bundle.market, bundle.scenario);
    bad.insert(bad.end(), market_bad.begin(), market_bad.end());
  }
  if (bad.empty()) out.bundle = std::move(bundle);
  return out;
}

inline LoadOutcome load_scenario_file(const std::string& path) {
  LoadOutcome out;
  std::ifstream in(path);
  if (!in) {
    out.violations.push_back({"SCENARIO_NOT_FOUND", path});
    return out;
  }
  json root;
  try {
    in >> root;
  } catch (const json::exception& e) {
    out.violations.push_back({"BAD_JSON", e.what()});
    return out;
  }
  return parse_scenario_json(root);
}

/// 12 significant digits, '.' decimal separator, for all CSV numerics.
inline std::string format_numeric(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// ---- probe table artifacts ----

inline json probe_table_to_json(const ProbeTable& t, const ScenarioBundle& bundle) {
  json cells = json::array();
  for (int i = 0; i < t.n_groups; ++i) {
    for (int j = 0; j < t.n_sets; ++j) {
      const ProbeCell& cell = t.cell(i, j);
      cells.push_back({{"group", bundle.group_ids[static_cast<std::size_t>(i)]},
                       {"set", bundle.set_ids[static_cast<std::size_t>(j)]},
                       {"f", cell.exposure},
                       {"g", cell.reward},
                       {"f_stderr", cell.exposure_stderr},
                       {"g_stderr", cell.reward_stderr}});
    }
  }
  return json{{"groups", bundle.group_ids},
              {"sets", bundle.set_ids},
              {"grid", t.grid.points},
              {"eps1", t.eps_exposure},
              {"eps2", t.eps_reward},
              {"cells", cells}};
}

inline ProbeTable probe_table_from_json(const json& root, std::vector<Violation>& bad) {
  ProbeTable t;
  detail::check_keys(root, {"groups", "sets", "grid", "eps1", "eps2", "cells"}, "probes", bad);
  if (!root.contains("groups") || !root.contains("sets") || !root.contains("grid") ||
      !root.contains("cells")) {
    bad.push_back({"MISSING_KEY", "probes requires groups/sets/grid/cells"});
    return t;
  }
  const std::vector<std::string> groups = root["groups"].get<std::vector<std::string>>();
  const std::vector<std::string> sets = root["sets"].get<std::vector<std::string>>();
  t.n_groups = static_cast<int>(groups.size());
  t.n_sets = static_cast<int>(sets.size());
  t.grid.points = root["grid"].get<std::vector<double>>();
  t.eps_exposure = root.value("eps1", 0.0);
  t.eps_reward = root.value("eps2", 0.0);
  t.cells.resize(static_cast<std::size_t>(t.n_groups * t.n_sets));
  std::vector<bool> seen(t.cells.size(), false);
  for (const auto& c : root["cells"]) {
    const auto gid = std::find(groups.begin(), groups.end(), c.at("group").get<std::string>());
    const auto sid = std::find(sets.begin(), sets.end(), c.at("set").get<std::string>());
    if (gid == groups.end() || sid == sets.end()) {
      bad.push_back({"UNKNOWN_CELL", "probe cell names an unknown group or set"});
      continue;
    }
    const int i = static_cast<int>(gid - groups.begin());
    const int j = static_cast<int>(sid - sets.begin());
    ProbeCell cell;
    cell.exposure = c.at("f").get<std::vector<double>>();
    cell.reward = c.at("g").get<std::vector<double>>();
    cell.exposure_stderr = c.value("f_stderr", std::vector<double>(cell.exposure.size(), 0.0));
    cell.reward_stderr = c.value("g_stderr", std::vector<double>(cell.reward.size(), 0.0));
    t.cell(i, j) = std::move(cell);
    seen[static_cast<std::size_t>(t.cell_index(i, j))] = true;
  }
  for (std::size_t c = 0; c < seen.size(); ++c) {
    if (!seen[c]) bad.push_back({"PROBE_TABLE_INCOMPLETE", "cell index " + std::to_string(c)});
  }
  const auto semantic = validate_probe_table(t);
  bad.insert(bad.end(), semantic.begin(), semantic.end());
  return t;
}

inline void write_probe_csv(const std::string& path, const ProbeTable& t,
                            const ScenarioBundle& bundle) {
  std::ofstream out(path);
  out << "group,set,grid_index,bonus,f_mean,f_stderr,g_mean,g_stderr\n";
  for (int i = 0; i < t.n_groups; ++i) {
    for (int j = 0; j < t.n_sets; ++j) {
      const ProbeCell& cell = t.cell(i, j);
      for (int p = 0; p < t.grid.size(); ++p) {
        const std::size_t q = static_cast<std::size_t>(p);
        out << bundle.group_ids[static_cast<std::size_t>(i)] << ','
            << bundle.set_ids[static_cast<std::size_t>(j)] << ',' << p << ','
            << format_numeric(t.grid[p]) << ',' << format_numeric(cell.exposure[q]) << ','
            << format_numeric(cell.exposure_stderr[q]) << ',' << format_numeric(cell.reward[q])
            << ',' << format_numeric(cell.reward_stderr[q]) << '\n';
      }
    }
  }
}

// ---- policy artifacts ----

// The policy artifact is a plain array of per-cell mixing rules.
inline json policy_to_json(const StochasticPolicy& policy, const ScenarioBundle& bundle) {
  json cells = json::array();
  for (const MixedAssignment& mix : policy.cells) {
    cells.push_back({{"group", bundle.group_ids[static_cast<std::size_t>(mix.group)]},
                     {"set", bundle.set_ids[static_cast<std::size_t>(mix.set)]},
                     {"bonus_low", mix.bonus_low},
                     {"bonus_high", mix.bonus_high},
                     {"p_high", mix.p_high}});
  }
  return cells;
}

inline StochasticPolicy policy_from_json(const json& root, const ScenarioBundle& bundle,
                                         std::vector<Violation>& bad) {
  StochasticPolicy policy;
  policy.n_groups = bundle.scenario.n_groups;
  policy.n_sets = bundle.scenario.n_sets;
  policy.cells.resize(static_cast<std::size_t>(bundle.scenario.cell_count()));
  std::vector<bool> seen(policy.cells.size(), false);
  if (!root.is_array()) {
    bad.push_back({"BAD_TYPE", "policy artifact must be an array of mixing rules"});
    return policy;
  }
  for (const auto& c : root) {
    detail::check_keys(c, {"group", "set", "bonus_low", "bonus_high", "p_high"}, "policy[]", bad);
    const int i = bundle.group_index(c.at("group").get<std::string>());
    const int j = bundle.set_index(c.at("set").get<std::string>());
    if (i < 0 || j < 0) {
      bad.push_back({"UNKNOWN_CELL", "policy entry names an unknown group or set"});
      continue;
    }
    MixedAssignment mix;
    mix.group = i;
    mix.set = j;
    mix.bonus_low = c.at("bonus_low").get<double>();
    mix.bonus_high = c.at("bonus_high").get<double>();
    mix.p_high = c.at("p_high").get<double>();
    policy.cells[static_cast<std::size_t>(policy.cell_index(i, j))] = mix;
    seen[static_cast<std::size_t>(policy.cell_index(i, j))] = true;
  }
  for (std::size_t c = 0; c < seen.size(); ++c) {
    if (!seen[c]) bad.push_back({"POLICY_INCOMPLETE", "cell index " + std::to_string(c)});
  }
  return policy;
}

// ---- reports ----

inline json certification_to_json(const CertificationReport& rep) {
  return json{{"expected_exposures", rep.expected_exposures},
              {"expected_reward", rep.expected_reward},
              {"oracle_optimum", rep.oracle_optimum},
              {"oracle_feasible", rep.oracle_feasible},
              {"eps1", rep.eps_exposure},
              {"eps2", rep.eps_reward},
              {"delta", rep.grid_gap},
              {"exposure_margins", rep.exposure_margins},
              {"reward_margin", rep.reward_margin},
              {"reward_margin_with_delta", rep.reward_margin_with_gap},
              {"exposure_pass", rep.exposure_pass},
              {"reward_pass", rep.reward_pass},
              {"pass", rep.pass}};
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  out << body;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace shaping
