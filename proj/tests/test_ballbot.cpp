#include <gtest/gtest.h>

#include "oracles.hpp"
#include "tmpc/ballbot.hpp"

using namespace tmpc;
using namespace tmpc::ballbot;

namespace {

DiscreteModel default_model(double ki = 0.3) {
  ControllerConfig c;
  c.ki = ki;
  return synthesize(BallbotParams{}, c);
}

// Velocity after `seconds` of tracking a constant reference from rest.
Vector6d track(const DiscreteModel& m, ReferenceCommand ref, double seconds, double* max_err_after = nullptr,
               double from = 3.0) {
  BallbotState s;
  IntegratorState integ;
  const int steps = static_cast<int>(std::lround(seconds / m.T()));
  for (int k = 1; k <= steps; ++k) {
    s = full_state_step(s, ref, m, &integ);
    if (max_err_after && k * m.T() >= from - 1e-9) {
      *max_err_after = std::max(*max_err_after, std::abs(s.s(2) - ref.vx) / ref.speed());
    }
  }
  return body_state(s);
}

}  // namespace

TEST(BallbotParams, DerivedConstantsFollowFormula) {
  const BallbotParams p;
  const double den = p.I0 + p.M * (p.r + p.h) * (p.r + p.h) + p.m_ball * p.r * p.r;
  EXPECT_DOUBLE_EQ(p.a(), p.M * p.g * p.h / den);
  EXPECT_DOUBLE_EQ(p.b(), (p.M * p.r * (p.r + p.h) + p.m_ball * p.r * p.r) / den);
  EXPECT_NEAR(p.a(), 9.97190, 1e-3);
  EXPECT_NEAR(p.b(), 0.14052, 1e-3);
}

TEST(Ballbot, AxesDecouple) {
  const auto cm = continuous_matrices(BallbotParams{});
  EXPECT_TRUE((cm.A.block<3, 3>(0, 3).isZero()));
  EXPECT_TRUE((cm.A.block<3, 3>(3, 0).isZero()));
  EXPECT_TRUE((cm.A.block<3, 3>(0, 0).isApprox(cm.A.block<3, 3>(3, 3))));
  EXPECT_EQ(cm.B(0, 1), 0.0);
  EXPECT_EQ(cm.B(3, 0), 0.0);
}

TEST(Expm, MatchesClosedForms) {
  Eigen::MatrixXd z(1, 1);
  z << 0.0;
  EXPECT_DOUBLE_EQ(expm(z)(0, 0), 1.0);
  Eigen::MatrixXd s(1, 1);
  s << 3.5;
  EXPECT_NEAR(expm(s)(0, 0), std::exp(3.5), 1e-12 * std::exp(3.5));
  Eigen::MatrixXd rot(2, 2);
  rot << 0, -2, 2, 0;
  const auto e = expm(rot);
  EXPECT_NEAR(e(0, 0), std::cos(2.0), 1e-14);
  EXPECT_NEAR(e(1, 0), std::sin(2.0), 1e-14);
}

TEST(Discretize, ZohMatchesSeries) {
  const auto cm = continuous_matrices(BallbotParams{});
  for (double T : {0.1, 0.05, 0.01}) {
    const auto d = discretize(cm.A, cm.B, T, Discretization::Zoh);
    const Eigen::MatrixXd A = cm.A;
    EXPECT_LT((d.Ad - oracle::series(A, T, 0)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((d.Bd - oracle::series(A, T, 1) * cm.B).cwiseAbs().maxCoeff(), 1e-13);
  }
}

TEST(Discretize, SecondOrderTruncationErrorIsCubic) {
  // B_d - (T B + T^2/2 A B) = O(T^3): halving T divides the residual by 8.
  const auto cm = continuous_matrices(BallbotParams{});
  auto residual = [&](double T) {
    const auto d = discretize(cm.A, cm.B, T, Discretization::Zoh);
    return (d.Bd - T * cm.B - 0.5 * T * T * cm.A * cm.B).norm();
  };
  const double ratio = residual(0.01) / residual(0.005);
  EXPECT_NEAR(ratio, 8.0, 0.05);
}

TEST(Lqr, ScalarGoldenRatio) {
  Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 1);
  const auto r = lqr_gain(one, one, one, one, 1e-13);
  EXPECT_NEAR(r.K(0, 0), (std::sqrt(5.0) - 1.0) / 2.0, 1e-9);
  EXPECT_NEAR(r.K(0, 0), 0.6180339887, 1e-9);
  EXPECT_NEAR(r.P(0, 0), (1.0 + std::sqrt(5.0)) / 2.0, 1e-9);
}

TEST(Lqr, SatisfiesRiccatiEquation) {
  const auto m = default_model();
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(6, 6), R = Eigen::MatrixXd::Identity(2, 2);
  for (int i = 0; i < 6; ++i) Q(i, i) = m.controller.q_diag[static_cast<std::size_t>(i)];
  const auto r = lqr_gain(m.Ad, m.Bd, Q, R);
  const Eigen::MatrixXd Ad = m.Ad, Bd = m.Bd;
  const Eigen::MatrixXd rhs =
      Q + Ad.transpose() * r.P * Ad -
      Ad.transpose() * r.P * Bd * (R + Bd.transpose() * r.P * Bd).inverse() * Bd.transpose() * r.P * Ad;
  EXPECT_LT((rhs - r.P).cwiseAbs().maxCoeff(), 1e-6 * r.P.cwiseAbs().maxCoeff());
}

TEST(Lqr, DefaultClosedLoopContractive) {
  const auto m = default_model();
  EXPECT_LT(spectral_radius(m.closed_loop), 1.0);
}

TEST(Lqr, LiteralDiscretizationIsRejected) {
  ControllerConfig c;
  c.mode = Discretization::Paper;
  EXPECT_THROW(synthesize(BallbotParams{}, c), Error);
}

TEST(ClosedLoop, StepWithinFivePercentByThreeSeconds) {
  const auto m = default_model(0.0);
  double worst = 0.0;
  track(m, {0.8, 0.0}, 10.0, &worst);
  EXPECT_LT(worst, 0.05);
}

TEST(ClosedLoop, IntegralWithinHalfPercentByThreeSeconds) {
  const auto m = default_model();
  double worst = 0.0;
  track(m, {0.8, 0.0}, 10.0, &worst);
  EXPECT_LT(worst, 0.005);
}

TEST(ClosedLoop, IntegralRejectsConstantDisturbance) {
  const auto m = default_model();
  Vector6d q = Vector6d::Zero();
  IntegratorState integ;
  Vector6d d = Vector6d::Zero();
  d(kVelX) = 1e-3;
  for (int k = 0; k < 600; ++k) {
    const auto r = integral_velocity_step(q, {0.5, 0.0}, m, integ, m.controller.ki, m.controller.integral_limit,
                                          m.controller.integral_band);
    integ = r.integrator;
    q = r.step.q + d;
  }
  EXPECT_NEAR(q(kVelX), 0.5, 1e-3);
}

TEST(ClosedLoop, AxesStayIndependent) {
  const auto m = default_model();
  const auto q = track(m, {0.8, 0.0}, 5.0);
  EXPECT_NEAR(q(kThetaY), 0.0, 1e-15);
  EXPECT_NEAR(q(kVelY), 0.0, 1e-15);
  const auto qd = track(m, {0.8 / std::sqrt(2.0), 0.8 / std::sqrt(2.0)}, 5.0);
  EXPECT_NEAR(qd(kVelX), qd(kVelY), 1e-12);
}

TEST(ClosedLoop, PositionAfterThreeSecondsIsBounded) {
  const auto m = default_model();
  BallbotState s;
  IntegratorState integ;
  double max_tilt = 0.0;
  for (int k = 0; k < 30; ++k) {
    s = full_state_step(s, {0.8, 0.0}, m, &integ);
    max_tilt = std::max(max_tilt, s.inclination());
  }
  // Never faster than the reference on average, and well past halfway.
  EXPECT_LT(s.s(0), 0.8 * 3.0);
  EXPECT_GT(s.s(0), 0.5 * 0.8 * 3.0);
  EXPECT_LT(max_tilt, 0.25);
}

TEST(ClosedLoop, ClampSpeedKeepsDirection) {
  const auto c = clamp_speed({3.0, 4.0}, 1.0);
  EXPECT_NEAR(c.vx, 0.6, 1e-15);
  EXPECT_NEAR(c.vy, 0.8, 1e-15);
  const auto same = clamp_speed({0.3, 0.4}, 1.0);
  EXPECT_EQ(same.vx, 0.3);
}

TEST(Geometry, ComPositions) {
  const BallbotParams p;
  Vector6d q = Vector6d::Zero();
  auto c = body_com_positions(q, {0, 0}, p);
  EXPECT_DOUBLE_EQ(c.ball.z, p.r);
  EXPECT_DOUBLE_EQ(c.body.z, p.r + p.h);
  q(kThetaX) = 0.1;
  c = body_com_positions(q, {0.5, 0}, p);
  EXPECT_DOUBLE_EQ(c.ball.x, p.r * 0.6);
  EXPECT_DOUBLE_EQ(c.body.x, p.r * 0.6 + p.h * std::sin(0.1));
  EXPECT_DOUBLE_EQ(c.body.z, p.r + p.h * std::cos(0.1));
}
