#pragma once

// Goal-tracking cost, personal-space cost and the weighted composite cost
// that scores MPC rollouts.

#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "tmpc/core.hpp"
#include "tmpc/topology.hpp"

namespace tmpc::costs {

struct CostWeights {
  double a_g = 5.0;
  double a_d = 1.0;
  double a_t = 5.0;
  Eigen::Matrix2d Q_g = 0.03 * Eigen::Matrix2d::Identity();

  void validate() const {
    for (double w : {a_g, a_d, a_t}) {
      if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("CostWeights: weights must be finite and >= 0");
    }
    if (!Q_g.allFinite() || std::abs(Q_g(0, 1) - Q_g(1, 0)) > 1e-12) {
      throw InvalidArgument("CostWeights: Q_g must be finite and symmetric");
    }
    // 2x2 symmetric PSD <=> non-negative diagonal and determinant.
    if (Q_g(0, 0) < 0.0 || Q_g(1, 1) < 0.0 || Q_g.determinant() < -1e-12) {
      throw InvalidArgument("CostWeights: Q_g must be positive semidefinite");
    }
  }
};

/// Standard deviations of the asymmetric personal-space Gaussian.
struct PersonalSpaceParams {
  double sigma_front = 1.0;
  double sigma_side = 2.0 / 3.0;
  double sigma_rear = 0.5;

  void validate() const {
    if (!(sigma_front > 0.0 && sigma_side > 0.0 && sigma_rear > 0.0)) {
      throw InvalidArgument("PersonalSpaceParams: sigmas must be positive");
    }
  }
};

struct CostBreakdown {
  double goal = 0.0;
  double personal_space = 0.0;
  double topology = 0.0;
  double total = 0.0;
};

/// Sum over every sample of (p - goal)^T Q_g (p - goal).
inline double goal_cost(const Trajectory& robot, const Vec2& goal, const Eigen::Matrix2d& Q_g) {
  double sum = 0.0;
  for (const Vec2& p : robot) {
    const Eigen::Vector2d e(p.x - goal.x, p.y - goal.y);
    sum += e.dot(Q_g * e);
  }
  return sum;
}

/// Velocity-aligned anisotropic Gaussian around the agent. The frontal
/// sigma applies ahead of the agent, the rear sigma behind it. Agents slower
/// than 1e-6 m/s get an axis-aligned frame with sigma_front on x.
inline double asymmetric_gaussian(const Vec2& query, const AgentState& agent, const PersonalSpaceParams& params) {
  const Vec2 rel = query - agent.position;
  const double speed = agent.velocity.norm();
  double d_h = rel.x;
  double d_s = rel.y;
  double sigma_h = params.sigma_front;
  if (speed >= 1e-6) {
    const Vec2 h = agent.velocity / speed;
    d_h = dot(rel, h);
    d_s = det(h, rel);
    sigma_h = d_h >= 0.0 ? params.sigma_front : params.sigma_rear;
  }
  const double sigma_s = params.sigma_side;
  return std::exp(-(d_h * d_h / (2.0 * sigma_h * sigma_h) + d_s * d_s / (2.0 * sigma_s * sigma_s)));
}

/// Sum over samples and agents of the squared personal-space Gaussian.
inline double personal_space_cost(const Trajectory& robot, const std::vector<Trajectory>& humans,
                                  const std::vector<AgentState>& agents, const PersonalSpaceParams& params) {
  if (humans.size() != agents.size()) throw ShapeMismatch("personal_space_cost: agent/trajectory count mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < humans.size(); ++i) {
    require_aligned(robot, humans[i], "personal_space_cost");
    AgentState moving = agents[i];
    for (std::size_t k = 0; k < robot.size(); ++k) {
      moving.position = humans[i][k];
      const double a = asymmetric_gaussian(robot[k], moving, params);
      sum += a * a;
    }
  }
  return sum;
}

/// Scores a rollout. Trajectories hold N+1 samples whose first entry is the
/// current state: goal and personal-space terms use samples 1..N, winding
/// numbers use all N increments. With a_t = 0 this is the vanilla MPC cost.
inline CostBreakdown composite_cost(const Trajectory& robot, const std::vector<Trajectory>& humans,
                                    const std::vector<AgentState>& agents, const Vec2& goal,
                                    const CostWeights& weights, const PersonalSpaceParams& personal,
                                    const topology::AgentFilterConfig& filter) {
  if (robot.size() < 2) throw ShapeMismatch("composite_cost: need the current sample plus at least one step");
  if (humans.size() != agents.size()) throw ShapeMismatch("composite_cost: agent/trajectory count mismatch");
  for (const auto& h : humans) require_aligned(robot, h, "composite_cost");

  const Trajectory future = robot.tail(1);
  std::vector<Trajectory> human_future;
  human_future.reserve(humans.size());
  for (const auto& h : humans) human_future.push_back(h.tail(1));

  CostBreakdown c;
  c.goal = goal_cost(future, goal, weights.Q_g);
  c.personal_space = personal_space_cost(future, human_future, agents, personal);
  c.topology = topology::topology_cost(topology::winding_profile(robot, agents, humans, filter));
  c.total = weights.a_g * c.goal + weights.a_d * c.personal_space + weights.a_t * c.topology;
  return c;
}

}  // namespace tmpc::costs
