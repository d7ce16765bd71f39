#pragma once

// Linearized ballbot body dynamics: continuous model, discretization, LQR
// gain synthesis and the closed-loop velocity controller.
//
// Body state q = (theta_x, dtheta_x, dx, theta_y, dtheta_y, dy), where theta
// is the body inclination and (dx, dy) the body CoM velocity. Input u is the
// ball angular acceleration (ddtheta2_x, ddtheta2_y). The two planar axes
// decouple into identical 3-state blocks.

#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "tmpc/core.hpp"

namespace tmpc::ballbot {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;
using Matrix62d = Eigen::Matrix<double, 6, 2>;
using Matrix26d = Eigen::Matrix<double, 2, 6>;

// Body-state component indices.
inline constexpr int kThetaX = 0;
inline constexpr int kThetaRateX = 1;
inline constexpr int kVelX = 2;
inline constexpr int kThetaY = 3;
inline constexpr int kThetaRateY = 4;
inline constexpr int kVelY = 5;

/// Physical constants. Defaults are engineering choices for a 20 kg, 1 m
/// tall ballbot, not measured values.
struct BallbotParams {
  double M = 17.0;      // body mass, kg
  double m_ball = 3.0;  // ball mass, kg
  double r = 0.11;      // ball radius, m
  double h = 0.5;       // body CoM height above ball center, m
  double I0 = 2.0;      // body moment of inertia, kg m^2
  double g = 9.81;      // m/s^2
  double T = 0.1;       // sampling time, s
  /// Use the literal constant 2 instead of I0 in the denominator of `a`.
  bool verbatim_a = false;

  void validate() const {
    for (double v : {M, m_ball, r, h, I0, g, T}) {
      if (!(v > 0.0) || !std::isfinite(v)) throw InvalidArgument("BallbotParams: all constants must be positive");
    }
  }

  double inertia_sum(double leading) const { return leading + M * (r + h) * (r + h) + m_ball * r * r; }
  double a() const { return M * g * h / inertia_sum(verbatim_a ? 2.0 : I0); }
  double b() const { return (M * r * (r + h) + m_ball * r * r) / inertia_sum(I0); }
};

/// Full robot state s = (x, y, dx, dy, theta_x, dtheta_x, theta_y, dtheta_y).
struct BallbotState {
  Eigen::Matrix<double, 8, 1> s = Eigen::Matrix<double, 8, 1>::Zero();

  Vec2 position() const { return {s(0), s(1)}; }
  Vec2 velocity() const { return {s(2), s(3)}; }
  double inclination() const { return std::hypot(s(4), s(6)); }

  static BallbotState at(const Vec2& p) {
    BallbotState st;
    st.s(0) = p.x;
    st.s(1) = p.y;
    return st;
  }
};

inline Vector6d body_state(const BallbotState& st) {
  Vector6d q;
  q << st.s(4), st.s(5), st.s(2), st.s(6), st.s(7), st.s(3);
  return q;
}

inline BallbotState with_body_state(BallbotState st, const Vector6d& q) {
  st.s(4) = q(kThetaX);
  st.s(5) = q(kThetaRateX);
  st.s(2) = q(kVelX);
  st.s(6) = q(kThetaY);
  st.s(7) = q(kThetaRateY);
  st.s(3) = q(kVelY);
  return st;
}

inline bool within_linear_region(const Vector6d& q, double theta_bound) {
  return q.allFinite() && std::abs(q(kThetaX)) < theta_bound && std::abs(q(kThetaY)) < theta_bound;
}

struct ReferenceCommand {
  double vx = 0.0;
  double vy = 0.0;

  Vec2 as_vec() const { return {vx, vy}; }
  static ReferenceCommand from(const Vec2& v) { return {v.x, v.y}; }
  double speed() const { return std::hypot(vx, vy); }
};

/// Scales the command down onto the max-speed disk when it lies outside.
inline ReferenceCommand clamp_speed(ReferenceCommand c, double max_speed) {
  const double s = c.speed();
  if (s > max_speed && s > 0.0) {
    c.vx *= max_speed / s;
    c.vy *= max_speed / s;
  }
  return c;
}

// =============================================================================
// Continuous model and discretization
// =============================================================================

struct ContinuousModel {
  Matrix6d A = Matrix6d::Zero();
  Matrix62d B = Matrix62d::Zero();
};

inline ContinuousModel continuous_matrices(const BallbotParams& p) {
  p.validate();
  const double a = p.a();
  const double b = p.b();
  ContinuousModel cm;
  for (int blk = 0; blk < 2; ++blk) {
    const int o = 3 * blk;
    cm.A(o + 0, o + 1) = 1.0;
    cm.A(o + 1, o + 0) = a;
    cm.A(o + 2, o + 0) = a * (p.r + p.h);
    cm.B(o + 1, blk) = -b;
    cm.B(o + 2, blk) = p.r - (p.r + p.h) * b;
  }
  return cm;
}

/// Matrix exponential by scaling and squaring of a Taylor series. The series
/// runs until the next term falls below 1e-16 relative to the partial sum.
inline Eigen::MatrixXd expm(const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows();
  if (n != X.cols()) throw ShapeMismatch("expm: matrix must be square");
  const double norm = X.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm / 0.5)));
  const Eigen::MatrixXd Y = X / std::ldexp(1.0, squarings);

  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k < 64; ++k) {
    term = term * Y / static_cast<double>(k);
    sum += term;
    if (term.cwiseAbs().maxCoeff() <= 1e-16 * std::max(1.0, sum.cwiseAbs().maxCoeff())) break;
  }
  for (int i = 0; i < squarings; ++i) sum = sum * sum;
  return sum;
}

enum class Discretization {
  Zoh,    ///< B_d = (int_0^T e^{A tau} dtau) B
  Paper,  ///< B_d = (e^{AT} - I) B, reproduced literally
};

struct DiscretePair {
  Matrix6d Ad;
  Matrix62d Bd;
};

inline DiscretePair discretize(const Matrix6d& A, const Matrix62d& B, double T, Discretization mode) {
  if (!(T > 0.0)) throw InvalidArgument("discretize: T must be positive");
  DiscretePair out;
  if (mode == Discretization::Paper) {
    out.Ad = expm(A * T);
    out.Bd = (out.Ad - Matrix6d::Identity()) * B;
    return out;
  }
  // exp([[A, I], [0, 0]] T) = [[e^{AT}, sum_k A^k T^{k+1}/(k+1)!], [0, I]]
  Eigen::MatrixXd aug = Eigen::MatrixXd::Zero(12, 12);
  aug.topLeftCorner(6, 6) = A * T;
  aug.topRightCorner(6, 6) = Matrix6d::Identity() * T;
  const Eigen::MatrixXd E = expm(aug);
  out.Ad = E.topLeftCorner(6, 6);
  out.Bd = E.topRightCorner(6, 6) * B;
  return out;
}

// =============================================================================
// LQR
// =============================================================================

inline double spectral_radius(const Eigen::MatrixXd& M) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
  if (es.info() != Eigen::Success) throw NonConvergence("spectral_radius: eigen decomposition failed");
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

struct LqrResult {
  Eigen::MatrixXd K;
  Eigen::MatrixXd P;
  int iterations = 0;
};

/// Infinite-horizon discrete LQR by fixed-point iteration of the Riccati
/// recursion, started from P = Q. Converged when the change in P has
/// infinity norm below `tol`.
inline LqrResult lqr_gain(const Eigen::MatrixXd& Ad, const Eigen::MatrixXd& Bd, const Eigen::MatrixXd& Q,
                          const Eigen::MatrixXd& R, double tol = 1e-9, int max_iterations = 10000) {
  const Eigen::Index n = Ad.rows();
  if (Ad.cols() != n || Bd.rows() != n || Q.rows() != n || Q.cols() != n || R.rows() != Bd.cols() ||
      R.cols() != Bd.cols()) {
    throw ShapeMismatch("lqr_gain: inconsistent matrix sizes");
  }
  Eigen::MatrixXd P = Q;
  LqrResult res;
  for (int it = 1; it <= max_iterations; ++it) {
    const Eigen::MatrixXd BtP = Bd.transpose() * P;
    const Eigen::MatrixXd gain = (R + BtP * Bd).partialPivLu().solve(BtP * Ad);
    Eigen::MatrixXd next = Q + Ad.transpose() * P * Ad - Ad.transpose() * P * Bd * gain;
    next = 0.5 * (next + next.transpose());
    if (!next.allFinite()) throw NonConvergence("lqr_gain: Riccati iteration diverged");
    const double delta = (next - P).cwiseAbs().rowwise().sum().maxCoeff();
    P = std::move(next);
    if (delta < tol) {
      res.iterations = it;
      break;
    }
    if (it == max_iterations) throw NonConvergence("lqr_gain: iteration cap reached");
  }
  const Eigen::MatrixXd BtP = Bd.transpose() * P;
  res.K = (R + BtP * Bd).partialPivLu().solve(BtP * Ad);
  res.P = P;
  if (spectral_radius(Ad - Bd * res.K) >= 1.0) throw Unstabilizable("lqr_gain: closed loop is not contractive");
  return res;
}

// =============================================================================
// Closed loop
// =============================================================================

struct ControllerConfig {
  /// Diagonal of the LQR state weight, in body-state order.
  std::array<double, 6> q_diag{100.0, 10.0, 500.0, 100.0, 10.0, 500.0};
  std::array<double, 2> r_diag{1.0, 1.0};
  Discretization mode = Discretization::Zoh;
  /// Integral gain on the velocity error; 0 disables the integral layer.
  double ki = 0.3;
  /// Anti-windup bound on each integrator channel, m.
  double integral_limit = 0.5;
  /// The integrator only accumulates while |velocity error| is at most this,
  /// m/s, so the ramp-up transient does not wind it up. <= 0 integrates always.
  double integral_band = 0.02;
  double max_reference_speed = 1.0;
  /// Linearization validity bound on |theta|, rad.
  double theta_bound = 0.5;
};

struct DiscreteModel {
  BallbotParams params;
  ControllerConfig controller;
  Matrix6d A = Matrix6d::Zero();
  Matrix62d B = Matrix62d::Zero();
  Matrix6d Ad = Matrix6d::Zero();
  Matrix62d Bd = Matrix62d::Zero();
  Matrix6d Cd = Matrix6d::Identity();
  Matrix26d K = Matrix26d::Zero();
  Matrix6d closed_loop = Matrix6d::Zero();  // Ad - Bd K

  double T() const { return params.T; }
};

inline DiscreteModel synthesize(const BallbotParams& params, const ControllerConfig& ctl = {}) {
  params.validate();
  DiscreteModel m;
  m.params = params;
  m.controller = ctl;
  const ContinuousModel cm = continuous_matrices(params);
  m.A = cm.A;
  m.B = cm.B;
  const DiscretePair d = discretize(cm.A, cm.B, params.T, ctl.mode);
  m.Ad = d.Ad;
  m.Bd = d.Bd;
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(6, 6);
  for (int i = 0; i < 6; ++i) Q(i, i) = ctl.q_diag[static_cast<std::size_t>(i)];
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(2, 2);
  R(0, 0) = ctl.r_diag[0];
  R(1, 1) = ctl.r_diag[1];
  m.K = lqr_gain(m.Ad, m.Bd, Q, R).K;
  m.closed_loop = m.Ad - m.Bd * m.K;
  return m;
}

inline Vector6d reference_state(const ReferenceCommand& ref) {
  Vector6d q = Vector6d::Zero();
  q(kVelX) = ref.vx;
  q(kVelY) = ref.vy;
  return q;
}

struct StepResult {
  Vector6d q;
  Eigen::Vector2d u;  // ball acceleration actually applied
};

/// q_{k+1} = (A_d - B_d K) q_k + B_d K q_ref, i.e. u_k = K (q_ref - q_k).
inline StepResult closed_loop_step(const Vector6d& q, const ReferenceCommand& ref, const DiscreteModel& model) {
  const Vector6d q_ref = reference_state(ref);
  StepResult out;
  out.u = model.K * (q_ref - q);
  out.q = model.closed_loop * q + model.Bd * (model.K * q_ref);
  return out;
}

struct IntegratorState {
  double ix = 0.0;
  double iy = 0.0;
};

struct IntegralStepResult {
  StepResult step;
  IntegratorState integrator;
};

/// Integral layer on top of the state feedback: accumulates the velocity
/// error times T (clamped to +-limit) and offsets the velocity reference by
/// ki times the accumulated error. A channel whose error exceeds `band`
/// (when band > 0) holds its integrator.
inline IntegralStepResult integral_velocity_step(const Vector6d& q, const ReferenceCommand& ref,
                                                 const DiscreteModel& model, IntegratorState integ, double ki,
                                                 double limit, double band = 0.0) {
  if (ki < 0.0) throw InvalidArgument("integral_velocity_step: ki must be >= 0");
  const double T = model.T();
  const double ex = ref.vx - q(kVelX);
  const double ey = ref.vy - q(kVelY);
  if (band <= 0.0 || std::abs(ex) <= band) integ.ix = std::clamp(integ.ix + ex * T, -limit, limit);
  if (band <= 0.0 || std::abs(ey) <= band) integ.iy = std::clamp(integ.iy + ey * T, -limit, limit);
  const ReferenceCommand augmented{ref.vx + ki * integ.ix, ref.vy + ki * integ.iy};
  return {closed_loop_step(q, augmented, model), integ};
}

/// One control period of the full robot state. Position integrates the
/// updated CoM velocity: x += dx * T, y += dy * T.
inline BallbotState full_state_step(const BallbotState& s, const ReferenceCommand& u, const DiscreteModel& model,
                                    IntegratorState* integrator = nullptr) {
  const Vector6d q = body_state(s);
  Vector6d next;
  if (integrator != nullptr && model.controller.ki > 0.0) {
    const auto r = integral_velocity_step(q, u, model, *integrator, model.controller.ki,
                                          model.controller.integral_limit, model.controller.integral_band);
    *integrator = r.integrator;
    next = r.step.q;
  } else {
    next = closed_loop_step(q, u, model).q;
  }
  BallbotState out = with_body_state(s, next);
  out.s(0) = s.s(0) + next(kVelX) * model.T();
  out.s(1) = s.s(1) + next(kVelY) * model.T();
  return out;
}

// =============================================================================
// Geometry
// =============================================================================

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

struct ComPositions {
  Vec3 body;  // c1
  Vec3 ball;  // c2
};

/// Body and ball centers of mass for inclination q(theta) and ball rotation
/// angles theta2 = (theta2_x, theta2_y).
inline ComPositions body_com_positions(const Vector6d& q, const Vec2& theta2, const BallbotParams& p) {
  const double tx = q(kThetaX);
  const double ty = q(kThetaY);
  ComPositions c;
  c.ball = {p.r * (tx + theta2.x), p.r * (ty + theta2.y), p.r};
  c.body = {c.ball.x + p.h * std::sin(tx), c.ball.y + p.h * std::sin(ty), c.ball.z + p.h * std::cos(tx)};
  return c;
}

}  // namespace tmpc::ballbot
