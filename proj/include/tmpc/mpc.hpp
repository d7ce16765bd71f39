#pragma once

// Receding-horizon controller over a discrete set of rollouts: one rollout
// per subgoal, scored by the composite cost; the first control of the
// cheapest rollout is executed.

#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "tmpc/ballbot.hpp"
#include "tmpc/costs.hpp"
#include "tmpc/rollouts.hpp"
#include "tmpc/topology.hpp"
#include "tmpc/world.hpp"

namespace tmpc::mpc {

enum class Variant { Vanilla, Topology };

struct MpcConfig {
  costs::CostWeights weights;
  int horizon = 10;
  double dt = 0.1;
  int subgoals = 10;
  double subgoal_radius = 8.0;
  double v_pref = 0.8;
  rollouts::PolicyTag rollout_policy = rollouts::PolicyTag::CV;
  Variant variant = Variant::Topology;
  topology::AgentFilterConfig filter;
  costs::PersonalSpaceParams personal;
  /// Prepend the recorded past positions to the trajectories used for
  /// winding numbers.
  bool history_winding = false;

  void validate() const {
    if (horizon < 1) throw InvalidArgument("MpcConfig: horizon must be >= 1");
    if (subgoals < 1) throw InvalidArgument("MpcConfig: subgoal count must be >= 1");
    if (!(dt > 0.0) || !(subgoal_radius > 0.0) || !(v_pref >= 0.0)) throw InvalidArgument("MpcConfig: bad dt/radius/speed");
    weights.validate();
    filter.validate();
    personal.validate();
  }

  /// Weights actually used for scoring: the vanilla variant drops a_t.
  costs::CostWeights effective_weights() const {
    costs::CostWeights w = weights;
    if (variant == Variant::Vanilla) w.a_t = 0.0;
    return w;
  }
};

struct PlanResult {
  rollouts::Rollout chosen;
  std::size_t chosen_index = 0;
  std::vector<costs::CostBreakdown> all_costs;
  std::vector<bool> valid;  // false where the rollout raised an error
  ballbot::ReferenceCommand first_action;
};

namespace detail {

inline Trajectory with_history(const std::vector<Vec2>& past, const Trajectory& future) {
  std::vector<Vec2> s = past;
  s.insert(s.end(), future.begin(), future.end());
  return Trajectory(std::move(s), future.dt(), future.start_time() - static_cast<double>(past.size()) * future.dt());
}

inline costs::CostBreakdown score(const rollouts::Rollout& r, const std::vector<Trajectory>& humans,
                                  const WorldState& world, const MpcConfig& cfg) {
  const auto w = cfg.effective_weights();
  if (!cfg.history_winding || world.robot_history.empty()) {
    return costs::composite_cost(r.robot_traj, humans, world.humans, world.robot_goal, w, cfg.personal, cfg.filter);
  }
  // Goal and personal-space terms stay on the horizon; only winding sees history.
  costs::CostWeights no_topology = w;
  no_topology.a_t = 0.0;
  costs::CostBreakdown c =
      costs::composite_cost(r.robot_traj, humans, world.humans, world.robot_goal, no_topology, cfg.personal, cfg.filter);
  std::vector<Trajectory> human_full;
  for (std::size_t i = 0; i < humans.size(); ++i) {
    const auto& past = i < world.human_history.size() ? world.human_history[i] : std::vector<Vec2>{};
    if (past.size() != world.robot_history.size()) throw ShapeMismatch("plan: human history misaligned");
    human_full.push_back(with_history(past, humans[i]));
  }
  const Trajectory robot_full = with_history(world.robot_history, r.robot_traj);
  c.topology = topology::topology_cost(topology::winding_profile(robot_full, world.humans, human_full, cfg.filter));
  c.total = w.a_g * c.goal + w.a_d * c.personal_space + w.a_t * c.topology;
  return c;
}

}  // namespace detail

/// Evaluates every subgoal rollout and returns the cheapest. Ties go to the
/// lowest subgoal index. Rollouts that throw are skipped; if all of them
/// throw, PlanningFailed is raised.
inline PlanResult plan(const WorldState& world, const MpcConfig& cfg, const ballbot::DiscreteModel& model,
                       const rollouts::RolloutPolicy& policy) {
  if (std::abs(cfg.dt - model.T()) > 1e-12) throw InvalidArgument("plan: MPC dt must equal the ballbot sampling time");
  const auto subgoals = rollouts::generate_subgoals(world.robot.position(), cfg.subgoals, cfg.subgoal_radius);
  const auto humans = rollouts::predict_humans_cv(world.humans, cfg.horizon, cfg.dt, world.time);

  PlanResult res;
  res.all_costs.resize(subgoals.size());
  res.valid.assign(subgoals.size(), false);
  std::optional<rollouts::Rollout> best;
  double best_total = std::numeric_limits<double>::infinity();
  std::string last_error;
  for (std::size_t k = 0; k < subgoals.size(); ++k) {
    try {
      rollouts::Rollout r = rollouts::build_rollout(policy, world, subgoals[k], cfg.horizon, cfg.dt, model);
      const costs::CostBreakdown c = detail::score(r, humans, world, cfg);
      res.all_costs[k] = c;
      res.valid[k] = true;
      if (!best || c.total < best_total) {
        best_total = c.total;
        best = std::move(r);
        res.chosen_index = k;
      }
    } catch (const Error& e) {
      last_error = e.what();
    }
  }
  if (!best) throw PlanningFailed("plan: every rollout failed (" + last_error + ")");
  res.chosen = std::move(*best);
  res.first_action = res.chosen.controls.front();
  return res;
}

struct CycleResult {
  ballbot::ReferenceCommand action;
  PlanResult plan;
};

/// One receding-horizon cycle: plan, then hand back the first action. The
/// caller applies it for one period and calls again.
inline CycleResult control_cycle(const WorldState& world, const MpcConfig& cfg, const ballbot::DiscreteModel& model,
                                 const rollouts::RolloutPolicy& policy) {
  PlanResult p = plan(world, cfg, model, policy);
  const auto a = p.first_action;
  return {a, std::move(p)};
}

}  // namespace tmpc::mpc
