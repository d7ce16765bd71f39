#pragma once

// Optimal Reciprocal Collision Avoidance for disk agents without static
// obstacles: half-plane construction from truncated velocity obstacles and
// the incremental 2-D linear program with its 3-D fallback.

#include <algorithm>
#include <cmath>
#include <vector>

#include "tmpc/core.hpp"

namespace tmpc::orca {

struct OrcaConfig {
  double neighbor_dist = 10.0;  // m
  int max_neighbors = 10;
  double time_horizon = 5.0;  // s
  double time_step = 0.1;     // s
  double max_speed = 1.0;     // m/s
  /// Agents closer than this to their goal prefer to stand still, m.
  double goal_tolerance = 0.1;

  void validate() const {
    if (!(neighbor_dist > 0.0 && time_horizon > 0.0 && time_step > 0.0 && max_speed > 0.0) || max_neighbors < 0 ||
        !(goal_tolerance >= 0.0)) {
      throw InvalidArgument("OrcaConfig: parameters must be positive");
    }
  }
};

/// Velocity half-plane {v : (v - point) . normal >= 0}.
struct HalfPlane {
  Vec2 point;
  Vec2 normal;

  /// Boundary direction with the feasible side on its left.
  Vec2 direction() const { return {normal.y, -normal.x}; }
  double violation(const Vec2& v) const { return -dot(v - point, normal); }
  bool contains(const Vec2& v, double tol = 0.0) const { return violation(v) <= tol; }
};

namespace detail {

inline constexpr double kEpsilon = 1e-10;

// Boundary line in point/direction form; feasible to the left.
struct Line {
  Vec2 point;
  Vec2 dir;
};

inline Line to_line(const HalfPlane& h) { return {h.point, h.direction()}; }

// Optimizes along line `idx` subject to the lines before it and the disk.
inline bool lp1(const std::vector<Line>& lines, std::size_t idx, double radius, const Vec2& opt, bool direction_opt,
                Vec2& result) {
  const Line& ln = lines[idx];
  const double dp = dot(ln.point, ln.dir);
  const double disc = dp * dp + radius * radius - ln.point.norm_sq();
  if (disc < 0.0) return false;
  const double sq = std::sqrt(disc);
  double t_left = -dp - sq;
  double t_right = -dp + sq;

  for (std::size_t i = 0; i < idx; ++i) {
    const double denom = det(ln.dir, lines[i].dir);
    const double numer = det(lines[i].dir, ln.point - lines[i].point);
    if (std::abs(denom) <= kEpsilon) {
      if (numer < 0.0) return false;
      continue;
    }
    const double t = numer / denom;
    if (denom >= 0.0) {
      t_right = std::min(t_right, t);
    } else {
      t_left = std::max(t_left, t);
    }
    if (t_left > t_right) return false;
  }

  if (direction_opt) {
    result = dot(opt, ln.dir) > 0.0 ? ln.point + t_right * ln.dir : ln.point + t_left * ln.dir;
  } else {
    const double t = dot(ln.dir, opt - ln.point);
    result = ln.point + std::clamp(t, t_left, t_right) * ln.dir;
  }
  return true;
}

// Returns lines.size() on success, else the index of the first line that
// could not be satisfied.
inline std::size_t lp2(const std::vector<Line>& lines, double radius, const Vec2& opt, bool direction_opt,
                       Vec2& result) {
  if (direction_opt) {
    result = opt * radius;
  } else if (opt.norm_sq() > radius * radius) {
    result = unit(opt) * radius;
  } else {
    result = opt;
  }
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (det(lines[i].dir, lines[i].point - result) > 0.0) {
      const Vec2 previous = result;
      if (!lp1(lines, i, radius, opt, direction_opt, result)) {
        result = previous;
        return i;
      }
    }
  }
  return lines.size();
}

// Infeasible case: minimizes the largest violation over lines[begin..].
inline void lp3(const std::vector<Line>& lines, std::size_t begin, double radius, Vec2& result) {
  double distance = 0.0;
  for (std::size_t i = begin; i < lines.size(); ++i) {
    if (det(lines[i].dir, lines[i].point - result) <= distance) continue;
    std::vector<Line> projected;
    projected.reserve(i);
    for (std::size_t j = 0; j < i; ++j) {
      Line l;
      const double d = det(lines[i].dir, lines[j].dir);
      if (std::abs(d) <= kEpsilon) {
        if (dot(lines[i].dir, lines[j].dir) > 0.0) continue;
        l.point = 0.5 * (lines[i].point + lines[j].point);
      } else {
        l.point = lines[i].point + (det(lines[j].dir, lines[i].point - lines[j].point) / d) * lines[i].dir;
      }
      l.dir = unit(lines[j].dir - lines[i].dir);
      projected.push_back(l);
    }
    const Vec2 previous = result;
    if (lp2(projected, radius, Vec2(-lines[i].dir.y, lines[i].dir.x), true, result) < projected.size()) {
      result = previous;
    }
    distance = det(lines[i].dir, lines[i].point - result);
  }
}

}  // namespace detail

/// Neighbors within neighbor_dist, nearest first (index breaks ties), at most
/// max_neighbors of them.
inline std::vector<std::size_t> select_neighbors(const AgentState& agent, const std::vector<AgentState>& others,
                                                 const OrcaConfig& cfg) {
  std::vector<std::pair<double, std::size_t>> cand;
  const double range_sq = cfg.neighbor_dist * cfg.neighbor_dist;
  for (std::size_t i = 0; i < others.size(); ++i) {
    const double d = (others[i].position - agent.position).norm_sq();
    if (d < range_sq) cand.emplace_back(d, i);
  }
  std::sort(cand.begin(), cand.end());
  if (cand.size() > static_cast<std::size_t>(cfg.max_neighbors)) cand.resize(static_cast<std::size_t>(cfg.max_neighbors));
  std::vector<std::size_t> out;
  out.reserve(cand.size());
  for (const auto& c : cand) out.push_back(c.second);
  return out;
}

/// ORCA half-plane induced on `agent` by one neighbor. Each side takes half
/// of the velocity change needed to leave the truncated velocity obstacle.
inline HalfPlane orca_half_plane(const AgentState& agent, const AgentState& other, const OrcaConfig& cfg) {
  const Vec2 rel_pos = other.position - agent.position;
  const Vec2 rel_vel = agent.velocity - other.velocity;
  const double dist_sq = rel_pos.norm_sq();
  if (dist_sq == 0.0) throw DegenerateVector("orca: coincident agent centers");
  const double combined = agent.radius + other.radius;
  const double combined_sq = combined * combined;

  Vec2 dir;
  Vec2 u;
  if (dist_sq > combined_sq) {
    const double inv_tau = 1.0 / cfg.time_horizon;
    const Vec2 w = rel_vel - inv_tau * rel_pos;
    const double w_len_sq = w.norm_sq();
    const double dp1 = dot(w, rel_pos);
    if (dp1 < 0.0 && dp1 * dp1 > combined_sq * w_len_sq) {
      // Closest boundary point lies on the cutoff circle.
      const double w_len = std::sqrt(w_len_sq);
      const Vec2 unit_w = w / w_len;
      dir = {unit_w.y, -unit_w.x};
      u = (combined * inv_tau - w_len) * unit_w;
    } else {
      const double leg = std::sqrt(dist_sq - combined_sq);
      if (det(rel_pos, w) > 0.0) {
        dir = Vec2(rel_pos.x * leg - rel_pos.y * combined, rel_pos.x * combined + rel_pos.y * leg) / dist_sq;
      } else {
        dir = -Vec2(rel_pos.x * leg + rel_pos.y * combined, -rel_pos.x * combined + rel_pos.y * leg) / dist_sq;
      }
      u = dot(rel_vel, dir) * dir - rel_vel;
    }
  } else {
    // Already overlapping: resolve within one time step.
    const double inv_dt = 1.0 / cfg.time_step;
    const Vec2 w = rel_vel - inv_dt * rel_pos;
    const double w_len = w.norm();
    if (w_len == 0.0) throw DegenerateVector("orca: degenerate collision geometry");
    const Vec2 unit_w = w / w_len;
    dir = {unit_w.y, -unit_w.x};
    u = (combined * inv_dt - w_len) * unit_w;
  }
  const Vec2 n = unit(Vec2(-dir.y, dir.x));
  return {agent.velocity + 0.5 * u, n};
}

inline std::vector<HalfPlane> orca_lines(const AgentState& agent, const std::vector<AgentState>& neighbors,
                                         const OrcaConfig& cfg) {
  std::vector<HalfPlane> lines;
  for (std::size_t i : select_neighbors(agent, neighbors, cfg)) lines.push_back(orca_half_plane(agent, neighbors[i], cfg));
  return lines;
}

/// Velocity closest to `pref` inside every half-plane and the max-speed
/// disk. When the constraints are infeasible, returns the velocity that
/// minimizes the largest violation.
inline Vec2 solve_velocity(const Vec2& pref, const std::vector<HalfPlane>& planes, double max_speed) {
  std::vector<detail::Line> lines;
  lines.reserve(planes.size());
  for (const auto& p : planes) lines.push_back(detail::to_line(p));
  Vec2 result;
  const std::size_t fail = detail::lp2(lines, max_speed, pref, false, result);
  if (fail < lines.size()) detail::lp3(lines, fail, max_speed, result);
  return result;
}

inline Vec2 preferred_velocity(const AgentState& agent, const OrcaConfig& cfg) {
  const Vec2 to_goal = agent.goal - agent.position;
  if (to_goal.norm() <= cfg.goal_tolerance) return {};
  return agent.preferred_speed * unit(to_goal);
}

/// New velocity for `agent` among `neighbors` (which must not include it).
inline Vec2 orca_step(const AgentState& agent, const std::vector<AgentState>& neighbors, const OrcaConfig& cfg) {
  return solve_velocity(preferred_velocity(agent, cfg), orca_lines(agent, neighbors, cfg), cfg.max_speed);
}

/// Synchronous ORCA update of every agent from one snapshot. Returns the new
/// velocities; `active[i] == false` agents keep a zero velocity but still act
/// as neighbors.
inline std::vector<Vec2> orca_step_all(const std::vector<AgentState>& agents, const OrcaConfig& cfg,
                                       const std::vector<bool>* active = nullptr) {
  std::vector<Vec2> out(agents.size());
  std::vector<AgentState> others;
  others.reserve(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (active != nullptr && !(*active)[i]) continue;
    others.clear();
    for (std::size_t j = 0; j < agents.size(); ++j) {
      if (j != i) others.push_back(agents[j]);
    }
    out[i] = orca_step(agents[i], others, cfg);
  }
  return out;
}

}  // namespace tmpc::orca
