#pragma once

// Pairwise winding numbers between the robot and other agents, the winding
// profile over a set of agents, and the topology cost built from it.

#include <cstddef>
#include <vector>

#include "tmpc/core.hpp"

namespace tmpc::topology {

/// CCW: counterclockwise relative rotation is positive (mathematical
/// convention). CW flips every sign, so right-side passing is positive.
/// The topology cost depends only on squares and is the same under both.
enum class SignConvention { CCW, CW };

struct WindingProfile {
  std::vector<double> values;
  std::vector<std::size_t> agent_ids;

  std::size_t size() const { return values.size(); }
  bool empty() const { return values.empty(); }
};

struct AgentFilterConfig {
  double stationary_speed_threshold = 0.05;  // m/s
  double field_of_view_half_angle = kPi;     // rad, in (0, pi]
  SignConvention sign = SignConvention::CCW;

  void validate() const {
    if (!(stationary_speed_threshold >= 0.0)) throw InvalidArgument("filter: negative speed threshold");
    if (!(field_of_view_half_angle > 0.0 && field_of_view_half_angle <= kPi)) {
      throw InvalidArgument("filter: field of view half-angle must be in (0, pi]");
    }
  }
};

/// Net relative rotation, in turns, of the robot->agent vector across the
/// aligned trajectories. Every per-step increment lies in (-pi, pi]. The
/// increment is taken from the cross and dot products of consecutive
/// relative vectors, which are unchanged when both are negated, so swapping
/// the two trajectories gives a bit-identical result.
inline double winding_number(const Trajectory& robot, const Trajectory& agent,
                             SignConvention sign = SignConvention::CCW) {
  require_aligned(robot, agent, "winding_number");
  if (robot.size() < 2) throw ShapeMismatch("winding_number: need at least two samples");
  Vec2 prev = agent[0] - robot[0];
  if (prev.x == 0.0 && prev.y == 0.0) throw DegenerateVector("winding_number: coincident positions");
  double total = 0.0;
  for (std::size_t k = 1; k < robot.size(); ++k) {
    const Vec2 cur = agent[k] - robot[k];
    if (cur.x == 0.0 && cur.y == 0.0) throw DegenerateVector("winding_number: coincident positions");
    double step = std::atan2(det(prev, cur), dot(prev, cur));
    if (step == -kPi) step = kPi;
    total += step;
    prev = cur;
  }
  const double lambda = total / kTwoPi;
  return sign == SignConvention::CCW ? lambda : -lambda;
}

struct AgentTrack {
  const AgentState* state;
  const Trajectory* trajectory;
};

/// Heading used for the field-of-view test: the robot trajectory's first
/// displacement. Returns false when the robot is not moving.
inline bool robot_heading(const Trajectory& robot, double& heading) {
  for (std::size_t k = 1; k < robot.size(); ++k) {
    const Vec2 d = robot[k] - robot[0];
    if (d.norm() > 1e-12) {
      heading = angle_of(d);
      return true;
    }
  }
  return false;
}

inline bool agent_considered(const Trajectory& robot, const AgentState& agent, const AgentFilterConfig& filter) {
  if (agent.velocity.norm() < filter.stationary_speed_threshold) return false;
  if (filter.field_of_view_half_angle >= kPi) return true;
  double heading = 0.0;
  if (!robot_heading(robot, heading)) return true;
  const Vec2 rel = agent.position - robot[0];
  if (rel.norm() == 0.0) return true;
  return std::abs(wrap_angle(angle_of(rel) - heading)) <= filter.field_of_view_half_angle;
}

/// One winding number per non-stationary agent inside the field of view.
inline WindingProfile winding_profile(const Trajectory& robot, const std::vector<AgentTrack>& agents,
                                      const AgentFilterConfig& filter = {}) {
  WindingProfile profile;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (!agent_considered(robot, *agents[i].state, filter)) continue;
    profile.values.push_back(winding_number(robot, *agents[i].trajectory, filter.sign));
    profile.agent_ids.push_back(i);
  }
  return profile;
}

inline WindingProfile winding_profile(const Trajectory& robot, const std::vector<AgentState>& states,
                                      const std::vector<Trajectory>& trajectories,
                                      const AgentFilterConfig& filter = {}) {
  if (states.size() != trajectories.size()) throw ShapeMismatch("winding_profile: agent/trajectory count mismatch");
  std::vector<AgentTrack> tracks;
  tracks.reserve(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) tracks.push_back({&states[i], &trajectories[i]});
  return winding_profile(robot, tracks, filter);
}

/// J_t = -(1/n) sum lambda_i^2; zero for an empty profile.
inline double topology_cost(const WindingProfile& profile) {
  if (profile.empty()) return 0.0;
  double sum = 0.0;
  for (double v : profile.values) sum += v * v;
  return -sum / static_cast<double>(profile.size());
}

}  // namespace tmpc::topology
