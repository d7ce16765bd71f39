#pragma once

// Observation, discrete action set and reward terms of the CADRL-style
// environment, for plugging in an externally trained policy. Training is not
// part of this library.

#include <cmath>
#include <cstdint>
#include <deque>
#include <random>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tmpc/core.hpp"
#include "tmpc/world.hpp"

namespace tmpc::rlenv {

struct RobotObservation {
  double d_g = 0.0;     // distance to goal, m
  double v_pref = 0.0;  // m/s
  double psi = 0.0;     // velocity direction, rad
  double r = 0.0;       // radius, m
  double theta = 0.0;   // inclination magnitude, rad
  double dbar_g = 0.0;  // mean goal distance over the history window, m
};

struct AgentObservation {
  Vec2 position;  // relative to the ego position
  Vec2 velocity;  // relative to the ego velocity
  double radius = 0.0;
  double d_i = 0.0;  // distance from the agent to its goal
  double combined_radius = 0.0;
};

struct Observation {
  RobotObservation robot;
  std::vector<AgentObservation> agents;
};

/// Rolling state needed by the observation: recent goal distances and the
/// last well-defined heading.
struct ObservationHistory {
  std::size_t window = 8;
  std::deque<double> goal_distances;
  double last_psi = 0.0;

  void push(double d_g) {
    goal_distances.push_back(d_g);
    while (goal_distances.size() > window) goal_distances.pop_front();
  }
};

inline Observation build_observation(const AgentState& ego, double inclination, const std::vector<AgentState>& others,
                                     ObservationHistory& history) {
  Observation obs;
  obs.robot.d_g = (ego.goal - ego.position).norm();
  obs.robot.v_pref = ego.preferred_speed;
  if (ego.velocity.norm() > 1e-9) history.last_psi = angle_of(ego.velocity);
  obs.robot.psi = history.last_psi;
  obs.robot.r = ego.radius;
  obs.robot.theta = inclination;

  // A short history is padded with the current distance.
  if (history.window == 0) {
    obs.robot.dbar_g = obs.robot.d_g;
  } else {
    double sum = 0.0;
    std::size_t used = 0;
    for (auto it = history.goal_distances.rbegin(); it != history.goal_distances.rend() && used < history.window;
         ++it, ++used) {
      sum += *it;
    }
    sum += static_cast<double>(history.window - used) * obs.robot.d_g;
    obs.robot.dbar_g = sum / static_cast<double>(history.window);
  }

  for (const auto& a : others) {
    obs.agents.push_back({a.position - ego.position, a.velocity - ego.velocity, a.radius, (a.goal - a.position).norm(),
                          a.radius + ego.radius});
  }
  return obs;
}

/// Observation of the robot in `world`; updates `history` with the current
/// goal distance afterwards.
inline Observation build_observation(const WorldState& world, ObservationHistory& history) {
  Observation obs = build_observation(world.robot_agent(), world.robot.inclination(), world.humans, history);
  history.push(obs.robot.d_g);
  return obs;
}

inline nlohmann::json to_json(const Observation& obs) {
  nlohmann::json agents = nlohmann::json::array();
  for (const auto& a : obs.agents) {
    agents.push_back({{"x", a.position.x},
                      {"y", a.position.y},
                      {"vx", a.velocity.x},
                      {"vy", a.velocity.y},
                      {"r", a.radius},
                      {"d", a.d_i},
                      {"r_sum", a.combined_radius}});
  }
  return {{"robot",
           {{"d_g", obs.robot.d_g},
            {"v_pref", obs.robot.v_pref},
            {"psi", obs.robot.psi},
            {"r", obs.robot.r},
            {"theta", obs.robot.theta},
            {"dbar_g", obs.robot.dbar_g}}},
          {"agents", agents}};
}

// =============================================================================
// Actions
// =============================================================================

struct DiscreteAction {
  double speed = 0.0;
  double heading_change = 0.0;
};

struct ActionSpaceOptions {
  /// Drop the zero-speed, zero-heading entry so the set has 11 actions.
  bool dedupe_zero_heading = false;
  /// Draw the six full-speed headings uniformly at random instead of evenly
  /// spaced endpoints-inclusive values.
  bool random_headings = false;
  std::uint64_t seed = 0;
};

inline std::vector<DiscreteAction> action_space(double v_pref, const ActionSpaceOptions& opt = {}) {
  if (!(v_pref >= 0.0)) throw InvalidArgument("action_space: v_pref must be >= 0");
  constexpr double kMax = kPi / 6.0;
  std::vector<DiscreteAction> actions;
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> heading(-kMax, kMax);
  for (int i = 0; i < 6; ++i) {
    const double h = opt.random_headings ? heading(rng) : -kMax + (2.0 * kMax) * i / 5.0;
    actions.push_back({v_pref, h});
  }
  for (double h : {-kMax, 0.0, kMax}) actions.push_back({0.5 * v_pref, h});
  for (double h : {-kMax, 0.0, kMax}) {
    if (opt.dedupe_zero_heading && h == 0.0) continue;
    actions.push_back({0.0, h});
  }
  return actions;
}

/// Planar velocity produced by an action taken at heading psi.
inline Vec2 action_velocity(const DiscreteAction& a, double psi) {
  const double h = psi + a.heading_change;
  return {a.speed * std::cos(h), a.speed * std::sin(h)};
}

// =============================================================================
// Rewards
// =============================================================================

/// Collision term. `d_min` is the surface distance to the closest agent.
/// Reaching the goal takes precedence; d_min = 0 counts as a collision.
inline double reward_col(bool at_goal, double d_min) {
  if (at_goal) return 1.0;
  if (d_min <= 0.0) return -0.25;
  if (d_min <= 0.2) return -0.1 + 0.05 * d_min;
  return 0.0;
}

struct LeanReward {
  double reward = 0.0;
  bool terminate = false;
};

inline LeanReward reward_lean(double theta, double theta_max = 0.25) {
  if (theta > theta_max) return {-1.0, true};
  return {-0.1 * theta / theta_max, false};
}

inline double reward_prog(double dbar_g, double d_g) { return 0.1 * (dbar_g - d_g); }

}  // namespace tmpc::rlenv
