#pragma once

// Scenario sampling, world stepping and trial execution with the Safety (D)
// and Efficiency (T) metrics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tmpc/ballbot.hpp"
#include "tmpc/core.hpp"
#include "tmpc/external.hpp"
#include "tmpc/mpc.hpp"
#include "tmpc/orca.hpp"
#include "tmpc/rlenv.hpp"
#include "tmpc/rollouts.hpp"
#include "tmpc/world.hpp"

namespace tmpc::sim {

// =============================================================================
// Counter-based random numbers
// =============================================================================

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Stream of independent draws: draw i is mix64(key + i * golden). The key
/// is a hash of (master seed, trial id, salt).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}
  static std::uint64_t derive_key(std::uint64_t master_seed, std::uint64_t trial_id, std::uint64_t salt = 0) {
    return mix64(mix64(master_seed) ^ mix64(trial_id + 0x632BE59BD9B4E019ull * (salt + 1)));
  }

  std::uint64_t next() { return mix64(key_ + 0x9E3779B97F4A7C15ull * ++counter_); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// =============================================================================
// Scenarios
// =============================================================================

struct Zone {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  bool contains(const Vec2& p) const { return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max; }
  Vec2 center() const { return {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)}; }
};

struct HumanAssignment {
  int start_zone = 0;
  int goal_zone = 0;
};

/// Template of a scenario; sampling fills in the human endpoints.
struct ScenarioTemplate {
  std::string id = "three_humans";
  double width = 3.6;
  double height = 4.5;
  int zone_columns = 2;
  int zone_rows = 3;
  std::vector<HumanAssignment> humans;
  Vec2 robot_start{0.0, 0.0};
  Vec2 robot_goal{3.6, 4.5};
  double preferred_speed = 0.8;
  double human_radius = 0.3;
  double robot_radius = 0.2;
  /// Resample a start that overlaps an earlier one (centers closer than
  /// this). Zero disables the check.
  double min_start_separation = 0.7;

  /// Zones numbered row-major from the robot's start corner: zone
  /// r * columns + c covers column c, row r.
  std::vector<Zone> zones() const {
    std::vector<Zone> out;
    const double zw = width / zone_columns;
    const double zh = height / zone_rows;
    for (int r = 0; r < zone_rows; ++r) {
      for (int c = 0; c < zone_columns; ++c) out.push_back({c * zw, (c + 1) * zw, r * zh, (r + 1) * zh});
    }
    return out;
  }

  void validate() const {
    if (!(width > 0.0 && height > 0.0) || zone_columns < 1 || zone_rows < 1) throw InvalidArgument("scenario: bad workspace");
    const int nz = zone_columns * zone_rows;
    for (const auto& h : humans) {
      if (h.start_zone < 0 || h.start_zone >= nz || h.goal_zone < 0 || h.goal_zone >= nz) {
        throw InvalidArgument("scenario '" + id + "': zone index out of range");
      }
    }
    if (!(human_radius > 0.0 && robot_radius > 0.0 && preferred_speed >= 0.0)) throw InvalidArgument("scenario: bad radii/speed");
  }
};

// Zone layout (2 columns x 3 rows, robot from zone 0 corner to zone 5
// corner):   4 5 / 2 3 / 0 1. The assignments below are best-effort readings
// of the published scenario sketches.
inline ScenarioTemplate three_humans() {
  ScenarioTemplate t;
  t.id = "three_humans";
  t.humans = {{5, 0}, {4, 1}, {1, 4}};
  return t;
}

inline ScenarioTemplate four_humans() {
  ScenarioTemplate t = three_humans();
  t.id = "four_humans";
  t.humans.push_back({2, 3});
  return t;
}

inline ScenarioTemplate five_humans() {
  ScenarioTemplate t = four_humans();
  t.id = "five_humans";
  t.humans.push_back({3, 2});
  return t;
}

inline ScenarioTemplate empty_world() {
  ScenarioTemplate t;
  t.id = "empty";
  t.humans.clear();
  return t;
}

struct ScenarioSpec {
  ScenarioTemplate tmpl;
  std::vector<AgentState> humans;  // zero initial velocity
  std::uint64_t trial_id = 0;
  std::uint64_t seed = 0;
};

inline Vec2 sample_in_zone(const Zone& z, CounterRng& rng) {
  const double x = rng.uniform(z.x_min, z.x_max);
  const double y = rng.uniform(z.y_min, z.y_max);
  return {x, y};
}

/// Human endpoints drawn uniformly from their zones. Depends only on
/// (template humans, master seed, trial id), never on the robot policy.
inline ScenarioSpec sample_scenario(const ScenarioTemplate& tmpl, std::uint64_t trial_id, std::uint64_t master_seed) {
  tmpl.validate();
  ScenarioSpec spec;
  spec.tmpl = tmpl;
  spec.trial_id = trial_id;
  spec.seed = CounterRng::derive_key(master_seed, trial_id);
  CounterRng rng(spec.seed);
  const auto zones = tmpl.zones();
  for (const auto& h : tmpl.humans) {
    AgentState a;
    a.radius = tmpl.human_radius;
    a.preferred_speed = tmpl.preferred_speed;
    for (int attempt = 0;; ++attempt) {
      a.position = sample_in_zone(zones[static_cast<std::size_t>(h.start_zone)], rng);
      const bool clear = std::none_of(spec.humans.begin(), spec.humans.end(), [&](const AgentState& o) {
        return (o.position - a.position).norm() < tmpl.min_start_separation;
      });
      if (clear || attempt >= 1000) break;
    }
    a.goal = sample_in_zone(zones[static_cast<std::size_t>(h.goal_zone)], rng);
    spec.humans.push_back(a);
  }
  return spec;
}

// =============================================================================
// Policies
// =============================================================================

/// Human motion model of the simulated world.
class HumanPolicy {
 public:
  virtual ~HumanPolicy() = default;
  /// New velocities for all humans from one snapshot; inactive humans get 0.
  virtual std::vector<Vec2> step(const WorldState& world, const std::vector<bool>& active, double dt) = 0;
};

/// Humans are ORCA agents heading for their true goals; the robot is visible
/// to them as an agent with its planar velocity.
class OrcaHumanPolicy final : public HumanPolicy {
 public:
  explicit OrcaHumanPolicy(orca::OrcaConfig cfg) : cfg_(cfg) {}
  std::vector<Vec2> step(const WorldState& world, const std::vector<bool>& active, double dt) override {
    orca::OrcaConfig cfg = cfg_;
    cfg.time_step = dt;
    std::vector<Vec2> out(world.humans.size());
    std::vector<AgentState> others;
    for (std::size_t i = 0; i < world.humans.size(); ++i) {
      if (!active[i]) continue;
      others.clear();
      others.push_back(world.robot_agent());
      for (std::size_t j = 0; j < world.humans.size(); ++j) {
        if (j != i) others.push_back(world.humans[j]);
      }
      out[i] = orca::orca_step(world.humans[i], others, cfg);
    }
    return out;
  }

 private:
  orca::OrcaConfig cfg_;
};

/// Humans driven by an external policy process, queried once per human.
class ExternalHumanPolicy final : public HumanPolicy {
 public:
  ExternalHumanPolicy(std::shared_ptr<external::PolicyProcess> process, double max_speed)
      : process_(std::move(process)), max_speed_(max_speed) {}
  std::vector<Vec2> step(const WorldState& world, const std::vector<bool>& active, double) override {
    histories_.resize(world.humans.size());
    std::vector<Vec2> out(world.humans.size());
    std::vector<AgentState> others;
    for (std::size_t i = 0; i < world.humans.size(); ++i) {
      if (!active[i]) continue;
      others.clear();
      others.push_back(world.robot_agent());
      for (std::size_t j = 0; j < world.humans.size(); ++j) {
        if (j != i) others.push_back(world.humans[j]);
      }
      const auto obs = rlenv::build_observation(world.humans[i], 0.0, others, histories_[i]);
      histories_[i].push(obs.robot.d_g);
      out[i] = ballbot::clamp_speed(ballbot::ReferenceCommand::from(external::query(*process_, obs)), max_speed_).as_vec();
    }
    return out;
  }

 private:
  std::shared_ptr<external::PolicyProcess> process_;
  double max_speed_;
  std::vector<rlenv::ObservationHistory> histories_;
};

/// Robot-side controller; one instance per trial.
class RobotController {
 public:
  virtual ~RobotController() = default;
  virtual ballbot::ReferenceCommand act(const WorldState& world) = 0;
  /// Per-cycle log record, or null when the controller keeps none.
  virtual nlohmann::json last_log() const { return nullptr; }
};

class MpcController final : public RobotController {
 public:
  MpcController(mpc::MpcConfig cfg, std::shared_ptr<const ballbot::DiscreteModel> model,
                std::shared_ptr<const rollouts::RolloutPolicy> policy)
      : cfg_(std::move(cfg)), model_(std::move(model)), policy_(std::move(policy)) {}

  ballbot::ReferenceCommand act(const WorldState& world) override {
    auto cycle = mpc::control_cycle(world, cfg_, *model_, *policy_);
    nlohmann::json costs = nlohmann::json::array();
    for (std::size_t k = 0; k < cycle.plan.all_costs.size(); ++k) {
      const auto& c = cycle.plan.all_costs[k];
      costs.push_back({{"valid", static_cast<bool>(cycle.plan.valid[k])},
                       {"goal", c.goal},
                       {"personal_space", c.personal_space},
                       {"topology", c.topology},
                       {"total", c.total}});
    }
    log_ = {{"t", world.time},
            {"chosen", cycle.plan.chosen_index},
            {"action", {cycle.action.vx, cycle.action.vy}},
            {"costs", std::move(costs)}};
    return cycle.action;
  }
  nlohmann::json last_log() const override { return log_; }

 private:
  mpc::MpcConfig cfg_;
  std::shared_ptr<const ballbot::DiscreteModel> model_;
  std::shared_ptr<const rollouts::RolloutPolicy> policy_;
  nlohmann::json log_;
};

/// Drives straight at the goal with the preferred speed, ignoring humans.
class CvController final : public RobotController {
 public:
  ballbot::ReferenceCommand act(const WorldState& world) override {
    const Vec2 d = world.robot_goal - world.robot.position();
    if (d.norm() == 0.0) return {};
    return ballbot::ReferenceCommand::from(world.robot_preferred_speed * unit(d));
  }
};

/// The robot runs ORCA toward its goal, seeing the humans as agents.
class OrcaController final : public RobotController {
 public:
  explicit OrcaController(orca::OrcaConfig cfg) : cfg_(cfg) {}
  ballbot::ReferenceCommand act(const WorldState& world) override {
    return ballbot::ReferenceCommand::from(orca::orca_step(world.robot_agent(), world.humans, cfg_));
  }

 private:
  orca::OrcaConfig cfg_;
};

class ExternalController final : public RobotController {
 public:
  explicit ExternalController(std::shared_ptr<external::PolicyProcess> process) : process_(std::move(process)) {}
  ballbot::ReferenceCommand act(const WorldState& world) override {
    const auto obs = rlenv::build_observation(world, history_);
    return ballbot::ReferenceCommand::from(external::query(*process_, obs));
  }

 private:
  std::shared_ptr<external::PolicyProcess> process_;
  rlenv::ObservationHistory history_;
};

/// Never moves.
class ZeroController final : public RobotController {
 public:
  ballbot::ReferenceCommand act(const WorldState&) override { return {}; }
};

// =============================================================================
// Stepping and trials
// =============================================================================

struct SimConfig {
  double dt = 0.1;
  double goal_tolerance = 0.3;  // robot, m
  double timeout = 30.0;        // s
  double human_goal_tolerance = 0.1;
  /// Past samples kept in WorldState for history-based winding.
  std::size_t history_window = 50;
};

inline WorldState initial_world(const ScenarioSpec& spec) {
  WorldState w;
  w.robot = ballbot::BallbotState::at(spec.tmpl.robot_start);
  w.robot_radius = spec.tmpl.robot_radius;
  w.robot_preferred_speed = spec.tmpl.preferred_speed;
  w.robot_goal = spec.tmpl.robot_goal;
  w.humans = spec.humans;
  w.human_history.resize(w.humans.size());
  return w;
}

inline std::vector<bool> active_humans(const WorldState& world, double tolerance) {
  std::vector<bool> active(world.humans.size());
  for (std::size_t i = 0; i < world.humans.size(); ++i) {
    active[i] = (world.humans[i].goal - world.humans[i].position).norm() > tolerance;
  }
  return active;
}

/// Advances every agent by dt from the same snapshot. Humans at their goals
/// stop; the robot tracks `robot_action` through its closed loop.
inline WorldState step_world(const WorldState& world, const ballbot::ReferenceCommand& robot_action,
                             HumanPolicy& human_policy, const ballbot::DiscreteModel& model, const SimConfig& cfg) {
  const auto active = active_humans(world, cfg.human_goal_tolerance);
  const bool any_active = std::find(active.begin(), active.end(), true) != active.end();
  const std::vector<Vec2> v =
      any_active ? human_policy.step(world, active, cfg.dt) : std::vector<Vec2>(world.humans.size());

  WorldState next = world;
  for (std::size_t i = 0; i < next.humans.size(); ++i) {
    auto& h = next.humans[i];
    h.velocity = active[i] ? v[i] : Vec2{};
    h.position += cfg.dt * h.velocity;
    if ((h.goal - h.position).norm() <= cfg.human_goal_tolerance) h.velocity = Vec2{};
  }
  next.robot = ballbot::full_state_step(world.robot, ballbot::clamp_speed(robot_action, model.controller.max_reference_speed),
                                        model, &next.integrator);
  next.time = world.time + cfg.dt;

  if (cfg.history_window > 0) {
    next.robot_history.push_back(world.robot.position());
    next.human_history.resize(next.humans.size());
    for (std::size_t i = 0; i < next.humans.size(); ++i) next.human_history[i].push_back(world.humans[i].position);
    if (next.robot_history.size() > cfg.history_window) {
      next.robot_history.erase(next.robot_history.begin());
      for (auto& hh : next.human_history) hh.erase(hh.begin());
    }
  }
  return next;
}

struct TrialResult {
  std::uint64_t trial_id = 0;
  std::uint64_t seed = 0;
  double safety_D = std::numeric_limits<double>::infinity();
  double efficiency_T = 0.0;
  bool collided = false;
  bool timed_out = false;
  bool reached = false;
  bool failed = false;
  std::string error;
  double max_inclination = 0.0;
  Trajectory robot_traj{{Vec2{}}, 0.1};
  std::vector<Trajectory> human_trajs;
  std::vector<nlohmann::json> plan_log;
};

/// Minimum center-to-center robot/human distance over aligned samples;
/// +infinity when there are no humans.
inline double safety_metric(const Trajectory& robot, const std::vector<Trajectory>& humans) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& h : humans) {
    if (h.size() != robot.size()) throw ShapeMismatch("safety_metric: misaligned trajectories");
    for (std::size_t k = 0; k < robot.size(); ++k) d = std::min(d, (robot[k] - h[k]).norm());
  }
  return d;
}

inline double efficiency_metric(const TrialResult& r) { return r.efficiency_T; }

/// Closed-loop trial: control, step, record; stops at the goal, on a
/// collision or at the timeout. T is the arrival time, or the timeout when
/// the goal was not reached.
inline TrialResult run_trial(const ScenarioSpec& scenario, RobotController& controller, HumanPolicy& human_policy,
                             const ballbot::DiscreteModel& model, const SimConfig& cfg, bool log_plans = false) {
  TrialResult res;
  res.trial_id = scenario.trial_id;
  res.seed = scenario.seed;
  WorldState world = initial_world(scenario);

  std::vector<Vec2> robot_path{world.robot.position()};
  std::vector<std::vector<Vec2>> human_paths(world.humans.size());
  for (std::size_t i = 0; i < world.humans.size(); ++i) human_paths[i].push_back(world.humans[i].position);

  auto check_contact = [&](const WorldState& w) {
    for (const auto& h : w.humans) {
      if ((h.position - w.robot.position()).norm() < w.robot_radius + h.radius) return true;
    }
    return false;
  };

  const auto max_steps = static_cast<long>(std::llround(cfg.timeout / cfg.dt));
  res.collided = check_contact(world);
  long step = 0;
  while (!res.collided) {
    if ((world.robot_goal - world.robot.position()).norm() <= cfg.goal_tolerance) {
      res.reached = true;
      break;
    }
    if (step >= max_steps) {
      res.timed_out = true;
      break;
    }
    ballbot::ReferenceCommand action;
    try {
      action = controller.act(world);
    } catch (const std::exception& e) {
      res.failed = true;
      res.error = e.what();
      break;
    }
    if (log_plans) {
      if (auto rec = controller.last_log(); !rec.is_null()) res.plan_log.push_back(std::move(rec));
    }
    world = step_world(world, action, human_policy, model, cfg);
    ++step;
    res.max_inclination = std::max(res.max_inclination, world.robot.inclination());
    robot_path.push_back(world.robot.position());
    for (std::size_t i = 0; i < world.humans.size(); ++i) human_paths[i].push_back(world.humans[i].position);
    res.collided = check_contact(world);
  }

  res.robot_traj = Trajectory(std::move(robot_path), cfg.dt);
  for (auto& p : human_paths) res.human_trajs.emplace_back(std::move(p), cfg.dt);
  res.safety_D = safety_metric(res.robot_traj, res.human_trajs);
  res.efficiency_T = res.reached ? static_cast<double>(step) * cfg.dt : cfg.timeout;
  return res;
}

}  // namespace tmpc::sim
