#pragma once

#include <vector>

#include "tmpc/ballbot.hpp"
#include "tmpc/core.hpp"

namespace tmpc {

/// Joint state of the robot and the humans at one instant.
struct WorldState {
  ballbot::BallbotState robot;
  ballbot::IntegratorState integrator;
  double robot_radius = 0.2;
  double robot_preferred_speed = 0.8;
  Vec2 robot_goal;
  std::vector<AgentState> humans;
  double time = 0.0;

  /// Past planar positions, oldest first, excluding the current one. The
  /// simulator keeps at most a bounded window.
  std::vector<Vec2> robot_history;
  std::vector<std::vector<Vec2>> human_history;

  /// Planar projection of the robot as an agent.
  AgentState robot_agent() const {
    return {robot.position(), robot.velocity(), robot_radius, robot_goal, robot_preferred_speed};
  }
};

}  // namespace tmpc
