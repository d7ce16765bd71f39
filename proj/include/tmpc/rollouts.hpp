#pragma once

// Subgoals, constant-velocity human prediction and candidate rollouts for
// the MPC. A rollout policy proposes N planar velocity references toward a
// subgoal; the ballbot closed loop turns them into the planar path that the
// MPC scores.

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "tmpc/ballbot.hpp"
#include "tmpc/core.hpp"
#include "tmpc/external.hpp"
#include "tmpc/orca.hpp"
#include "tmpc/rlenv.hpp"
#include "tmpc/world.hpp"

namespace tmpc::rollouts {

using ballbot::ReferenceCommand;

struct Subgoal {
  Vec2 position;
  int index = 0;
};

enum class PolicyTag { CV, ORCA, External };

inline std::string to_string(PolicyTag t) {
  switch (t) {
    case PolicyTag::CV: return "CV";
    case PolicyTag::ORCA: return "ORCA";
    case PolicyTag::External: return "external";
  }
  return "?";
}

struct Rollout {
  Subgoal subgoal;
  std::vector<ReferenceCommand> controls;
  Trajectory robot_traj{{Vec2{}}, 0.1};  // N+1 samples, first is the current position
  PolicyTag policy_tag = PolicyTag::CV;
};

/// m points evenly spaced on a circle around the robot, the first one on +x.
inline std::vector<Subgoal> generate_subgoals(const Vec2& robot_pos, int m, double radius) {
  if (m < 1) throw InvalidArgument("generate_subgoals: m must be >= 1");
  if (!(radius > 0.0)) throw InvalidArgument("generate_subgoals: radius must be positive");
  std::vector<Subgoal> out;
  out.reserve(static_cast<std::size_t>(m));
  for (int k = 0; k < m; ++k) {
    const double a = kTwoPi * k / m;
    out.push_back({robot_pos + radius * Vec2(std::cos(a), std::sin(a)), k});
  }
  return out;
}

/// Sample k of each trajectory is position + k*dt*velocity, k = 0..N.
inline std::vector<Trajectory> predict_humans_cv(const std::vector<AgentState>& humans, int N, double dt,
                                                 double start_time = 0.0) {
  if (N < 1) throw InvalidArgument("predict_humans_cv: N must be >= 1");
  std::vector<Trajectory> out;
  out.reserve(humans.size());
  for (const auto& h : humans) {
    std::vector<Vec2> s;
    s.reserve(static_cast<std::size_t>(N) + 1);
    for (int k = 0; k <= N; ++k) s.push_back(h.position + (k * dt) * h.velocity);
    out.emplace_back(std::move(s), dt, start_time);
  }
  return out;
}

inline std::vector<ReferenceCommand> cv_rollout(const WorldState& world, const Subgoal& subgoal, int N,
                                                double v_pref) {
  const Vec2 dir = unit(subgoal.position - world.robot.position());
  return std::vector<ReferenceCommand>(static_cast<std::size_t>(N), ReferenceCommand::from(v_pref * dir));
}

/// Co-simulates the ego robot (as a kinematic ORCA agent heading for the
/// subgoal) with the humans, whose goals are their constant-velocity
/// endpoints at the end of the horizon. Returns the ego velocities.
inline std::vector<ReferenceCommand> orca_rollout(const WorldState& world, const Subgoal& subgoal, int N, double dt,
                                                  const orca::OrcaConfig& cfg) {
  std::vector<AgentState> agents;
  agents.reserve(world.humans.size() + 1);
  AgentState ego = world.robot_agent();
  ego.goal = subgoal.position;
  agents.push_back(ego);
  const double horizon = N * dt;
  for (const auto& h : world.humans) {
    AgentState a = h;
    a.goal = h.position + horizon * h.velocity;
    a.preferred_speed = h.velocity.norm();
    agents.push_back(a);
  }
  orca::OrcaConfig sim_cfg = cfg;
  sim_cfg.time_step = dt;

  std::vector<ReferenceCommand> controls;
  controls.reserve(static_cast<std::size_t>(N));
  for (int k = 0; k < N; ++k) {
    const std::vector<Vec2> v = orca::orca_step_all(agents, sim_cfg);
    controls.push_back(ReferenceCommand::from(v[0]));
    for (std::size_t i = 0; i < agents.size(); ++i) {
      agents[i].velocity = v[i];
      agents[i].position += dt * v[i];
    }
  }
  return controls;
}

/// Produces the control sequence of one rollout.
class RolloutPolicy {
 public:
  virtual ~RolloutPolicy() = default;
  virtual std::vector<ReferenceCommand> controls(const WorldState& world, const Subgoal& subgoal, int N,
                                                 double dt) const = 0;
  virtual PolicyTag tag() const = 0;
};

class CvRolloutPolicy final : public RolloutPolicy {
 public:
  explicit CvRolloutPolicy(double v_pref) : v_pref_(v_pref) {}
  std::vector<ReferenceCommand> controls(const WorldState& world, const Subgoal& subgoal, int N,
                                         double) const override {
    return cv_rollout(world, subgoal, N, v_pref_);
  }
  PolicyTag tag() const override { return PolicyTag::CV; }

 private:
  double v_pref_;
};

class OrcaRolloutPolicy final : public RolloutPolicy {
 public:
  explicit OrcaRolloutPolicy(orca::OrcaConfig cfg) : cfg_(cfg) {}
  std::vector<ReferenceCommand> controls(const WorldState& world, const Subgoal& subgoal, int N,
                                         double dt) const override {
    return orca_rollout(world, subgoal, N, dt, cfg_);
  }
  PolicyTag tag() const override { return PolicyTag::ORCA; }

 private:
  orca::OrcaConfig cfg_;
};

/// Rollouts served by an external policy process. The ego's goal is the
/// subgoal; humans move at constant velocity while the ego is queried once
/// per step.
class ExternalRolloutPolicy final : public RolloutPolicy {
 public:
  explicit ExternalRolloutPolicy(std::shared_ptr<external::PolicyProcess> process, double max_speed)
      : process_(std::move(process)), max_speed_(max_speed) {}

  std::vector<ReferenceCommand> controls(const WorldState& world, const Subgoal& subgoal, int N,
                                         double dt) const override {
    AgentState ego = world.robot_agent();
    ego.goal = subgoal.position;
    std::vector<AgentState> humans = world.humans;
    rlenv::ObservationHistory history;
    std::vector<ReferenceCommand> out;
    out.reserve(static_cast<std::size_t>(N));
    for (int k = 0; k < N; ++k) {
      const auto obs = rlenv::build_observation(ego, world.robot.inclination(), humans, history);
      history.push(obs.robot.d_g);
      const auto cmd = ballbot::clamp_speed(ReferenceCommand::from(external::query(*process_, obs)), max_speed_);
      out.push_back(cmd);
      ego.velocity = cmd.as_vec();
      ego.position += dt * ego.velocity;
      for (auto& h : humans) h.position += dt * h.velocity;
    }
    return out;
  }
  PolicyTag tag() const override { return PolicyTag::External; }

 private:
  std::shared_ptr<external::PolicyProcess> process_;
  double max_speed_;
};

/// Runs the policy, then propagates the ballbot closed loop from the current
/// robot state under the resulting references.
inline Rollout build_rollout(const RolloutPolicy& policy, const WorldState& world, const Subgoal& subgoal, int N,
                             double dt, const ballbot::DiscreteModel& model) {
  if (N < 1) throw InvalidArgument("build_rollout: N must be >= 1");
  auto controls = policy.controls(world, subgoal, N, dt);
  if (controls.size() != static_cast<std::size_t>(N)) throw ShapeMismatch("build_rollout: policy returned wrong length");

  std::vector<Vec2> path;
  path.reserve(static_cast<std::size_t>(N) + 1);
  ballbot::BallbotState s = world.robot;
  ballbot::IntegratorState integ = world.integrator;
  path.push_back(s.position());
  for (const auto& u : controls) {
    s = ballbot::full_state_step(s, ballbot::clamp_speed(u, model.controller.max_reference_speed), model, &integ);
    path.push_back(s.position());
  }
  return {subgoal, std::move(controls), Trajectory(std::move(path), dt, world.time), policy.tag()};
}

}  // namespace tmpc::rollouts
