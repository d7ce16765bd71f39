#pragma once

// Random instances shared by the unit and acceptance tests.

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "tmpc/core.hpp"
#include "tmpc/orca.hpp"

namespace fixture {

using namespace tmpc;
using namespace tmpc::orca;

struct Instance {
  Trajectory robot{{Vec2{}}, 0.1};
  std::vector<Trajectory> humans;
  std::vector<AgentState> agents;
  Vec2 goal;
  Eigen::Matrix2d Q;
};

inline Instance random_instance(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-4, 4), vel(-1, 1), q(0.0, 2.0);
  std::uniform_int_distribution<int> nh(0, 5), steps(2, 12);
  const int n = steps(rng);
  const double dt = 0.1;
  Instance in;
  Vec2 p(pos(rng), pos(rng)), v(vel(rng), vel(rng));
  in.robot = sample_path([&](double t) { return p + t * v + Vec2(0.1 * std::sin(3 * t), 0.0); }, n + 1, dt);
  const int h = nh(rng);
  for (int i = 0; i < h; ++i) {
    AgentState a;
    do a.position = Vec2(pos(rng), pos(rng));
    while ((a.position - p).norm() < 0.5);
    a.velocity = Vec2(vel(rng), vel(rng));
    if (i == 0) a.velocity = Vec2(0.01, 0.0);  // below the stationary threshold
    in.agents.push_back(a);
    in.humans.push_back(sample_path([&](double t) { return a.position + t * a.velocity; }, n + 1, dt));
  }
  in.goal = Vec2(pos(rng), pos(rng));
  const double d = q(rng), e = q(rng), off = 0.5 * std::min(d, e) * vel(rng);
  in.Q << d, off, off, e;
  return in;
}

inline bool well_separated(const Instance& in) {
  for (const auto& h : in.humans)
    for (std::size_t k = 0; k < h.size(); ++k)
      if ((h[k] - in.robot[k]).norm() < 1e-3) return false;
  return true;
}


struct LpInstance {
  Vec2 pref;
  std::vector<HalfPlane> planes;
  double max_speed = 1.0;
};

// Every half-plane keeps a disk of radius 0.1 around a common interior point.
inline LpInstance random_feasible(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1), speed(0.5, 2.0), ang(-kPi, kPi), margin(0.1, 1.0);
  std::uniform_int_distribution<int> count(1, 6);
  LpInstance in;
  in.max_speed = speed(rng);
  Vec2 c;
  do c = Vec2(u(rng), u(rng)) * in.max_speed;
  while (c.norm() > in.max_speed - 0.1);
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    const double a = ang(rng);
    const Vec2 normal(std::cos(a), std::sin(a));
    in.planes.push_back({c - margin(rng) * normal, normal});
  }
  in.pref = Vec2(u(rng), u(rng)) * (1.5 * in.max_speed);
  return in;
}

inline bool feasible(const LpInstance& in, const Vec2& v) {
  if (v.norm() > in.max_speed) return false;
  for (const auto& p : in.planes)
    if (!p.contains(v)) return false;
  return true;
}

// Feasible grid point nearest to pref: coarse 0.01 grid, then 1e-3 around the best.
inline Vec2 grid_search(const LpInstance& in) {
  Vec2 best;
  double best_d = INFINITY;
  auto scan = [&](Vec2 lo, Vec2 hi, double h) {
    for (double x = lo.x; x <= hi.x; x += h)
      for (double y = lo.y; y <= hi.y; y += h) {
        const Vec2 v(x, y);
        if (!feasible(in, v)) continue;
        const double d = (v - in.pref).norm();
        if (d < best_d) best_d = d, best = v;
      }
  };
  const double R = in.max_speed;
  scan({-R, -R}, {R, R}, 0.01);
  const Vec2 c = best;
  scan(c - Vec2(0.05, 0.05), c + Vec2(0.05, 0.05), 1e-3);
  return best;
}

inline bool any_overlap(const std::vector<AgentState>& a) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j)
      if ((a[i].position - a[j].position).norm() < a[i].radius + a[j].radius) return true;
  return false;
}


}  // namespace fixture
