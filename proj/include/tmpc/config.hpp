#pragma once

// Batch run configuration: one JSON file with a block per module. Every key
// is optional; missing keys keep the library defaults. Unknown keys are
// rejected so that typos do not silently fall back to defaults.

#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tmpc/ballbot.hpp"
#include "tmpc/core.hpp"
#include "tmpc/mpc.hpp"
#include "tmpc/orca.hpp"
#include "tmpc/sim.hpp"

namespace tmpc::config {

struct ConfigError : Error {
  using Error::Error;
};

using nlohmann::json;

inline const std::vector<std::string>& policy_ids() {
  static const std::vector<std::string> ids{"V-MPC-CV", "V-MPC-ORCA", "T-MPC-CV", "T-MPC-ORCA", "ORCA", "CV",
                                            "external", "V-MPC-external", "T-MPC-external"};
  return ids;
}

inline bool is_mpc_policy(const std::string& id) { return id.rfind("V-MPC-", 0) == 0 || id.rfind("T-MPC-", 0) == 0; }

struct ExternalConfig {
  std::string robot_command;    // policy id "external"
  std::string human_command;    // world "external"
  std::string rollout_command;  // "V-MPC-external" / "T-MPC-external"
};

struct RunConfig {
  std::vector<std::string> policies{"T-MPC-CV"};
  std::vector<sim::ScenarioTemplate> scenarios{sim::three_humans()};
  std::string world = "ORCA";
  int trials = 100;
  std::uint64_t master_seed = 1;
  std::string out = "out";
  int workers = 0;  // 0 = hardware concurrency
  bool log_plans = false;
  bool dump_model = false;

  ballbot::BallbotParams ballbot;
  ballbot::ControllerConfig controller;
  mpc::MpcConfig mpc;
  orca::OrcaConfig orca;
  sim::SimConfig sim;
  ExternalConfig external;

  void validate() const {
    if (trials < 1) throw ConfigError("trials must be >= 1");
    if (workers < 0) throw ConfigError("workers must be >= 0");
    if (policies.empty()) throw ConfigError("no policies selected");
    if (scenarios.empty()) throw ConfigError("no scenarios selected");
    for (const auto& p : policies) {
      if (std::find(policy_ids().begin(), policy_ids().end(), p) == policy_ids().end()) {
        throw ConfigError("unknown policy id '" + p + "'");
      }
      if (p == "external" && external.robot_command.empty()) throw ConfigError("policy 'external' needs external.robot_command");
      if (p.find("-external") != std::string::npos && external.rollout_command.empty()) {
        throw ConfigError("policy '" + p + "' needs external.rollout_command");
      }
    }
    if (world != "ORCA" && world != "external") throw ConfigError("unknown world '" + world + "'");
    if (world == "external" && external.human_command.empty()) throw ConfigError("world 'external' needs external.human_command");
    std::set<std::string> ids;
    for (const auto& s : scenarios) {
      if (!ids.insert(s.id).second) throw ConfigError("duplicate scenario id '" + s.id + "'");
    }
    try {
      for (const auto& s : scenarios) s.validate();
      ballbot.validate();
      mpc.validate();
      orca.validate();
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
    if (std::abs(mpc.dt - ballbot.T) > 1e-12 || std::abs(sim.dt - ballbot.T) > 1e-12) {
      throw ConfigError("mpc.dt, sim.dt and ballbot.T must agree");
    }
    if (!(sim.dt > 0.0 && sim.timeout > 0.0 && sim.goal_tolerance >= 0.0)) throw ConfigError("bad sim block");
  }
};

namespace detail {

inline void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

template <class T>
void get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline Vec2 to_vec2(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline sim::ScenarioTemplate scenario_by_id(const std::string& id) {
  if (id == "three_humans") return sim::three_humans();
  if (id == "four_humans") return sim::four_humans();
  if (id == "five_humans") return sim::five_humans();
  if (id == "empty") return sim::empty_world();
  throw ConfigError("unknown scenario id '" + id + "'");
}

inline sim::ScenarioTemplate parse_scenario(const json& j) {
  if (j.is_string()) return scenario_by_id(j.get<std::string>());
  check_keys(j, "scenario", {"id", "base", "width", "height", "zone_columns", "zone_rows", "humans", "robot_start",
                             "robot_goal", "preferred_speed", "human_radius", "robot_radius", "min_start_separation"});
  sim::ScenarioTemplate t = j.contains("base") ? scenario_by_id(j.at("base").get<std::string>()) : sim::ScenarioTemplate{};
  if (!j.contains("base")) t.humans.clear();
  get(j, "id", t.id);
  get(j, "width", t.width);
  get(j, "height", t.height);
  get(j, "zone_columns", t.zone_columns);
  get(j, "zone_rows", t.zone_rows);
  get(j, "preferred_speed", t.preferred_speed);
  get(j, "human_radius", t.human_radius);
  get(j, "robot_radius", t.robot_radius);
  get(j, "min_start_separation", t.min_start_separation);
  if (j.contains("robot_start")) t.robot_start = to_vec2(j.at("robot_start"));
  if (j.contains("robot_goal")) t.robot_goal = to_vec2(j.at("robot_goal"));
  if (j.contains("humans")) {
    t.humans.clear();
    for (const auto& h : j.at("humans")) {
      if (!h.is_array() || h.size() != 2) throw ConfigError("scenario humans: expected [start_zone, goal_zone]");
      t.humans.push_back({h[0].get<int>(), h[1].get<int>()});
    }
  }
  return t;
}

inline void parse_ballbot(const json& j, RunConfig& c) {
  check_keys(j, "ballbot", {"M", "m_ball", "r", "h", "I0", "g", "T", "verbatim_a", "discretization", "q_diag", "r_diag",
                            "ki", "integral_limit", "integral_band", "max_reference_speed", "theta_bound"});
  auto& p = c.ballbot;
  get(j, "M", p.M);
  get(j, "m_ball", p.m_ball);
  get(j, "r", p.r);
  get(j, "h", p.h);
  get(j, "I0", p.I0);
  get(j, "g", p.g);
  get(j, "T", p.T);
  get(j, "verbatim_a", p.verbatim_a);
  auto& k = c.controller;
  if (j.contains("discretization")) {
    const auto m = j.at("discretization").get<std::string>();
    if (m == "zoh") k.mode = ballbot::Discretization::Zoh;
    else if (m == "paper") k.mode = ballbot::Discretization::Paper;
    else throw ConfigError("ballbot.discretization must be 'zoh' or 'paper'");
  }
  get(j, "q_diag", k.q_diag);
  get(j, "r_diag", k.r_diag);
  get(j, "ki", k.ki);
  get(j, "integral_limit", k.integral_limit);
  get(j, "integral_band", k.integral_band);
  get(j, "max_reference_speed", k.max_reference_speed);
  get(j, "theta_bound", k.theta_bound);
}

inline void parse_mpc(const json& j, RunConfig& c) {
  check_keys(j, "mpc", {"a_g", "a_d", "a_t", "Q_g", "horizon", "dt", "subgoals", "subgoal_radius", "v_pref",
                        "history_winding", "filter", "personal_space"});
  auto& m = c.mpc;
  get(j, "a_g", m.weights.a_g);
  get(j, "a_d", m.weights.a_d);
  get(j, "a_t", m.weights.a_t);
  if (j.contains("Q_g")) {
    const auto& q = j.at("Q_g");
    if (!q.is_array() || q.size() != 2 || q[0].size() != 2 || q[1].size() != 2) throw ConfigError("mpc.Q_g must be 2x2");
    for (int r = 0; r < 2; ++r)
      for (int col = 0; col < 2; ++col) m.weights.Q_g(r, col) = q[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)].get<double>();
  }
  get(j, "horizon", m.horizon);
  get(j, "dt", m.dt);
  get(j, "subgoals", m.subgoals);
  get(j, "subgoal_radius", m.subgoal_radius);
  get(j, "v_pref", m.v_pref);
  get(j, "history_winding", m.history_winding);
  if (j.contains("filter")) {
    const auto& f = j.at("filter");
    check_keys(f, "mpc.filter", {"stationary_speed_threshold", "field_of_view_half_angle", "sign_convention"});
    get(f, "stationary_speed_threshold", m.filter.stationary_speed_threshold);
    get(f, "field_of_view_half_angle", m.filter.field_of_view_half_angle);
    if (f.contains("sign_convention")) {
      const auto s = f.at("sign_convention").get<std::string>();
      if (s == "ccw") m.filter.sign = topology::SignConvention::CCW;
      else if (s == "cw") m.filter.sign = topology::SignConvention::CW;
      else throw ConfigError("mpc.filter.sign_convention must be 'ccw' or 'cw'");
    }
  }
  if (j.contains("personal_space")) {
    const auto& p = j.at("personal_space");
    check_keys(p, "mpc.personal_space", {"sigma_front", "sigma_side", "sigma_rear"});
    get(p, "sigma_front", m.personal.sigma_front);
    get(p, "sigma_side", m.personal.sigma_side);
    get(p, "sigma_rear", m.personal.sigma_rear);
  }
}

inline void parse_orca(const json& j, RunConfig& c) {
  check_keys(j, "orca", {"neighbor_dist", "max_neighbors", "time_horizon", "time_step", "max_speed", "goal_tolerance"});
  get(j, "neighbor_dist", c.orca.neighbor_dist);
  get(j, "max_neighbors", c.orca.max_neighbors);
  get(j, "time_horizon", c.orca.time_horizon);
  get(j, "time_step", c.orca.time_step);
  get(j, "max_speed", c.orca.max_speed);
  get(j, "goal_tolerance", c.orca.goal_tolerance);
}

inline void parse_sim(const json& j, RunConfig& c) {
  check_keys(j, "sim", {"dt", "goal_tolerance", "timeout", "human_goal_tolerance", "history_window"});
  get(j, "dt", c.sim.dt);
  get(j, "goal_tolerance", c.sim.goal_tolerance);
  get(j, "timeout", c.sim.timeout);
  get(j, "human_goal_tolerance", c.sim.human_goal_tolerance);
  get(j, "history_window", c.sim.history_window);
}

}  // namespace detail

inline RunConfig from_json(const json& j) {
  using namespace detail;
  RunConfig c;
  try {
    check_keys(j, "config", {"policies", "scenarios", "world", "trials", "master_seed", "out", "workers", "log_plans",
                             "dump_model", "ballbot", "mpc", "orca", "sim", "external"});
    get(j, "policies", c.policies);
    if (j.contains("scenarios")) {
      c.scenarios.clear();
      for (const auto& s : j.at("scenarios")) c.scenarios.push_back(parse_scenario(s));
    }
    get(j, "world", c.world);
    get(j, "trials", c.trials);
    get(j, "master_seed", c.master_seed);
    get(j, "out", c.out);
    get(j, "workers", c.workers);
    get(j, "log_plans", c.log_plans);
    get(j, "dump_model", c.dump_model);
    if (j.contains("ballbot")) parse_ballbot(j.at("ballbot"), c);
    if (j.contains("mpc")) parse_mpc(j.at("mpc"), c);
    if (j.contains("orca")) parse_orca(j.at("orca"), c);
    if (j.contains("sim")) parse_sim(j.at("sim"), c);
    if (j.contains("external")) {
      const auto& e = j.at("external");
      check_keys(e, "external", {"robot_command", "human_command", "rollout_command"});
      get(e, "robot_command", c.external.robot_command);
      get(e, "human_command", c.external.human_command);
      get(e, "rollout_command", c.external.rollout_command);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline RunConfig load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "': " + e.what());
  }
  return from_json(j);
}

}  // namespace tmpc::config
