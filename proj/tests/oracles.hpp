#pragma once

// Independent reference computations used by the tests. They deliberately
// avoid the library's helpers so that agreement is meaningful.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "tmpc/core.hpp"

namespace oracle {

using tmpc::AgentState;
using tmpc::Trajectory;
using tmpc::Vec2;

// Unwraps the absolute bearing sample by sample.
inline double winding(const Trajectory& r, const Trajectory& a) {
  double prev = std::atan2(a[0].y - r[0].y, a[0].x - r[0].x);
  double total = 0.0;
  for (std::size_t k = 1; k < r.size(); ++k) {
    const double cur = std::atan2(a[k].y - r[k].y, a[k].x - r[k].x);
    double d = cur - prev;
    while (d > M_PI) d -= 2.0 * M_PI;
    while (d <= -M_PI) d += 2.0 * M_PI;
    total += d;
    prev = cur;
  }
  return total / (2.0 * M_PI);
}

// Winding cost over agents that move and lie inside the field of view of
// the robot's first displacement.
inline double topology_cost(const Trajectory& r, const std::vector<AgentState>& agents, const std::vector<Trajectory>& tr,
                            double speed_threshold, double fov) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    if (std::hypot(agents[i].velocity.x, agents[i].velocity.y) < speed_threshold) continue;
    if (fov < M_PI) {
      std::size_t k = 1;
      while (k < r.size() && r[k].x == r[0].x && r[k].y == r[0].y) ++k;
      if (k < r.size()) {
        const double hx = r[k].x - r[0].x, hy = r[k].y - r[0].y;
        const double ax = agents[i].position.x - r[0].x, ay = agents[i].position.y - r[0].y;
        const double c = (hx * ax + hy * ay) / (std::hypot(hx, hy) * std::hypot(ax, ay));
        if (std::acos(std::clamp(c, -1.0, 1.0)) > fov) continue;
      }
    }
    const double l = winding(r, tr[i]);
    sum += l * l;
    ++n;
  }
  return n == 0 ? 0.0 : -sum / n;
}

inline double goal_cost(const Trajectory& r, const Vec2& g, const Eigen::Matrix2d& Q) {
  double s = 0.0;
  for (std::size_t k = 0; k < r.size(); ++k) {
    const double ex = r[k].x - g.x, ey = r[k].y - g.y;
    s += Q(0, 0) * ex * ex + (Q(0, 1) + Q(1, 0)) * ex * ey + Q(1, 1) * ey * ey;
  }
  return s;
}

inline double gaussian(const Vec2& q, const Vec2& p, const Vec2& v, double sf, double ss, double sr) {
  const double dx = q.x - p.x, dy = q.y - p.y;
  const double speed = std::hypot(v.x, v.y);
  double fwd = dx, side = dy, sh = sf;
  if (speed >= 1e-6) {
    const double phi = std::atan2(v.y, v.x);
    fwd = std::cos(phi) * dx + std::sin(phi) * dy;
    side = -std::sin(phi) * dx + std::cos(phi) * dy;
    sh = fwd >= 0.0 ? sf : sr;
  }
  return std::exp(-0.5 * (fwd * fwd / (sh * sh) + side * side / (ss * ss)));
}

inline double personal_space(const Trajectory& r, const std::vector<Trajectory>& h, const std::vector<AgentState>& a,
                             double sf, double ss, double sr) {
  double s = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i)
    for (std::size_t k = 0; k < r.size(); ++k) {
      const double g = gaussian(r[k], h[i][k], a[i].velocity, sf, ss, sr);
      s += g * g;
    }
  return s;
}

// sum_{k<terms} X^k T^(k+off) / (k+off)!
inline Eigen::MatrixXd series(const Eigen::MatrixXd& X, double T, int off, int terms = 40) {
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(X.rows(), X.cols());
  Eigen::MatrixXd Xk = Eigen::MatrixXd::Identity(X.rows(), X.cols());
  for (int k = 0; k < terms; ++k) {
    double c = 1.0;
    for (int j = 1; j <= k + off; ++j) c *= T / j;
    out += c * Xk;
    Xk = Xk * X;
  }
  return out;
}

// U = #(a > b) + 0.5 #(a == b) by pair counting.
inline double u_pairs(const std::vector<double>& a, const std::vector<double>& b) {
  double u = 0.0;
  for (double x : a)
    for (double y : b) u += x > y ? 1.0 : x == y ? 0.5 : 0.0;
  return u;
}

struct PermutationP {
  double greater = 0.0;  // P(U >= observed)
  double less = 0.0;     // P(U <= observed)
};

// Exact permutation distribution by enumerating every split of the pooled
// values into groups of the original sizes.
inline PermutationP exact_permutation(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size(), na = a.size();
  const double obs = u_pairs(a, b);
  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(na), true);
  double total = 0, ge = 0, le = 0;
  // prev_permutation over a sorted-descending mask enumerates all subsets.
  do {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n; ++i) (pick[i] ? x : y).push_back(pooled[i]);
    const double u = u_pairs(x, y);
    total += 1;
    ge += u >= obs;
    le += u <= obs;
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return {ge / total, le / total};
}

// Two-sided Monte Carlo permutation p-value via random relabeling of the
// pooled midranks: P(|U - mu| >= |U_obs - mu|).
inline double monte_carlo_two_sided(const std::vector<double>& a, const std::vector<double>& b, int draws,
                                    std::uint64_t seed) {
  std::vector<double> pooled = a;
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size(), na = a.size();
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return pooled[i] < pooled[j]; });
  std::vector<double> rank(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && pooled[idx[j + 1]] == pooled[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) rank[idx[k]] = 0.5 * (i + j) + 1.0;
    i = j + 1;
  }
  const double shift = na * (na + 1.0) / 2.0;
  const double mu = na * static_cast<double>(n - na) / 2.0;
  double obs = 0.0;
  for (std::size_t i = 0; i < na; ++i) obs += rank[i];
  const double dev = std::abs(obs - shift - mu);
  std::mt19937_64 rng(seed);
  std::size_t hits = 0;
  for (int d = 0; d < draws; ++d) {
    double s = 0.0;
    for (std::size_t i = 0; i < na; ++i) {
      std::uniform_int_distribution<std::size_t> pickd(i, n - 1);
      std::swap(rank[i], rank[pickd(rng)]);
      s += rank[i];
    }
    if (std::abs(s - shift - mu) >= dev - 1e-9) ++hits;
  }
  return static_cast<double>(hits) / draws;
}

}  // namespace oracle
