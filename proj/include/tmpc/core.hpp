#pragma once

// Shared planar types, errors and trajectory containers.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tmpc {

// =============================================================================
// Errors
// =============================================================================

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DegenerateVector : Error {
  using Error::Error;
};
struct ShapeMismatch : Error {
  using Error::Error;
};
struct NonConvergence : Error {
  using Error::Error;
};
struct Unstabilizable : Error {
  using Error::Error;
};
struct PlanningFailed : Error {
  using Error::Error;
};
struct InvalidArgument : Error {
  using Error::Error;
};

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// =============================================================================
// Vec2
// =============================================================================

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {
    if (!std::isfinite(x) || !std::isfinite(y)) {
      throw InvalidArgument("Vec2: non-finite component");
    }
  }

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator-() const { return {-x, -y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(const Vec2& o) { return *this = *this + o; }
  Vec2& operator-=(const Vec2& o) { return *this = *this - o; }
  bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
  double norm_sq() const { return x * x + y * y; }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }
inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
/// z-component of the 3D cross product.
inline double det(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }

inline Vec2 rotate(const Vec2& v, double phi) {
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

/// Unit vector along v; throws DegenerateVector for the zero vector.
inline Vec2 unit(const Vec2& v) {
  const double n = v.norm();
  if (n == 0.0) throw DegenerateVector("unit: zero vector");
  return v / n;
}

/// Wraps to (-pi, pi].
inline double wrap_angle(double a) {
  if (!std::isfinite(a)) throw InvalidArgument("wrap_angle: non-finite angle");
  double w = std::remainder(a, kTwoPi);  // [-pi, pi]
  if (w <= -kPi) w += kTwoPi;
  return w;
}

/// Counterclockwise angle from +x in (-pi, pi].
inline double angle_of(const Vec2& v) {
  if (v.x == 0.0 && v.y == 0.0) throw DegenerateVector("angle_of: zero vector");
  double a = std::atan2(v.y, v.x);
  if (a == -kPi) a = kPi;
  return a;
}

// =============================================================================
// Agents and trajectories
// =============================================================================

/// Planar kinematic state of a human (or the robot's planar projection).
struct AgentState {
  Vec2 position;
  Vec2 velocity;
  double radius = 0.3;
  Vec2 goal;
  double preferred_speed = 0.8;

  void validate() const {
    if (!(radius > 0.0) || !std::isfinite(radius)) {
      throw InvalidArgument("AgentState: radius must be positive");
    }
    if (!(preferred_speed >= 0.0) || !std::isfinite(preferred_speed)) {
      throw InvalidArgument("AgentState: preferred_speed must be >= 0");
    }
  }
};

/// Uniformly sampled planar path.
class Trajectory {
 public:
  Trajectory(std::vector<Vec2> samples, double dt, double start_time = 0.0)
      : samples_(std::move(samples)), dt_(dt), start_time_(start_time) {
    if (samples_.empty()) throw InvalidArgument("Trajectory: needs at least one sample");
    if (!(dt_ > 0.0) || !std::isfinite(dt_)) throw InvalidArgument("Trajectory: dt must be positive");
    if (!std::isfinite(start_time_)) throw InvalidArgument("Trajectory: non-finite start time");
  }

  std::size_t size() const { return samples_.size(); }
  double dt() const { return dt_; }
  double start_time() const { return start_time_; }
  double time_at(std::size_t k) const { return start_time_ + static_cast<double>(k) * dt_; }
  const Vec2& operator[](std::size_t k) const { return samples_[k]; }
  const Vec2& front() const { return samples_.front(); }
  const Vec2& back() const { return samples_.back(); }
  const std::vector<Vec2>& samples() const { return samples_; }
  auto begin() const { return samples_.begin(); }
  auto end() const { return samples_.end(); }

  /// Samples [first, size()) as a new trajectory starting at time_at(first).
  Trajectory tail(std::size_t first) const {
    if (first >= samples_.size()) throw InvalidArgument("Trajectory::tail: out of range");
    return Trajectory({samples_.begin() + static_cast<std::ptrdiff_t>(first), samples_.end()}, dt_,
                      time_at(first));
  }

 private:
  std::vector<Vec2> samples_;
  double dt_;
  double start_time_;
};

inline void require_aligned(const Trajectory& a, const Trajectory& b, const char* what) {
  if (a.size() != b.size()) {
    throw ShapeMismatch(std::string(what) + ": trajectory lengths differ (" + std::to_string(a.size()) +
                        " vs " + std::to_string(b.size()) + ")");
  }
  if (std::abs(a.dt() - b.dt()) > 1e-12) throw ShapeMismatch(std::string(what) + ": trajectory dt differs");
}

/// Builds a uniform trajectory from any callable t -> Vec2 sampled at start + k*dt, k = 0..n-1.
template <typename F>
Trajectory sample_path(F&& path, std::size_t n, double dt, double start_time = 0.0) {
  std::vector<Vec2> s;
  s.reserve(n);
  for (std::size_t k = 0; k < n; ++k) s.push_back(path(start_time + static_cast<double>(k) * dt));
  return Trajectory(std::move(s), dt, start_time);
}

}  // namespace tmpc
