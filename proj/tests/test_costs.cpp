#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "tmpc/costs.hpp"

using namespace tmpc;
using namespace fixture;

TEST(GoalCost, Examples) {
  const Trajectory at_goal({{1, 1}, {1, 1}}, 0.1);
  EXPECT_EQ(costs::goal_cost(at_goal, {1, 1}, Eigen::Matrix2d::Identity()), 0.0);
  const Trajectory one({{1, 0}}, 0.1);
  EXPECT_DOUBLE_EQ(costs::goal_cost(one, {0, 0}, Eigen::Matrix2d::Identity()), 1.0);
  const Trajectory path({{0, 0}, {2, 0}, {0, 6}}, 0.1);
  EXPECT_DOUBLE_EQ(costs::goal_cost(path, {0, 0}, Eigen::Matrix2d::Identity()), 40.0);
}

TEST(PersonalSpace, FrontSideRearSigmas) {
  const costs::PersonalSpaceParams p;
  AgentState a{{0, 0}, {1, 0}};
  EXPECT_DOUBLE_EQ(costs::asymmetric_gaussian({0, 0}, a, p), 1.0);
  EXPECT_NEAR(costs::asymmetric_gaussian({1, 0}, a, p), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(costs::asymmetric_gaussian({-0.5, 0}, a, p), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(costs::asymmetric_gaussian({0, 2.0 / 3.0}, a, p), std::exp(-0.5), 1e-15);
  // Rotating the heading rotates the field.
  AgentState north{{0, 0}, {0, 2}};
  EXPECT_NEAR(costs::asymmetric_gaussian({0, 1}, north, p), std::exp(-0.5), 1e-15);
  EXPECT_NEAR(costs::asymmetric_gaussian({0, -0.5}, north, p), std::exp(-0.5), 1e-15);
}

TEST(Costs, MatchBruteForceOnRandomInstances) {
  std::mt19937_64 rng(2024);
  int checked = 0;
  const costs::PersonalSpaceParams ps;
  const topology::AgentFilterConfig filter;
  while (checked < 1000) {
    const Instance in = random_instance(rng);
    if (!well_separated(in)) continue;
    ++checked;
    EXPECT_NEAR(costs::goal_cost(in.robot, in.goal, in.Q), oracle::goal_cost(in.robot, in.goal, in.Q), 1e-12);
    EXPECT_NEAR(costs::personal_space_cost(in.robot, in.humans, in.agents, ps),
                oracle::personal_space(in.robot, in.humans, in.agents, ps.sigma_front, ps.sigma_side, ps.sigma_rear),
                1e-12);
    EXPECT_NEAR(topology::topology_cost(topology::winding_profile(in.robot, in.agents, in.humans, filter)),
                oracle::topology_cost(in.robot, in.agents, in.humans, filter.stationary_speed_threshold,
                                      filter.field_of_view_half_angle),
                1e-12);
  }
}

TEST(Costs, VanillaIsCompositeWithoutTopology) {
  std::mt19937_64 rng(77);
  const costs::PersonalSpaceParams ps;
  const topology::AgentFilterConfig filter;
  int checked = 0;
  while (checked < 300) {
    const Instance in = random_instance(rng);
    if (!well_separated(in)) continue;
    ++checked;
    costs::CostWeights w;
    w.Q_g = in.Q;
    w.a_t = 0.0;
    const auto c = costs::composite_cost(in.robot, in.humans, in.agents, in.goal, w, ps, filter);
    std::vector<Trajectory> hf;
    for (const auto& h : in.humans) hf.push_back(h.tail(1));
    const double vanilla =
        w.a_g * costs::goal_cost(in.robot.tail(1), in.goal, w.Q_g) + w.a_d * costs::personal_space_cost(in.robot.tail(1), hf, in.agents, ps);
    EXPECT_EQ(c.total, vanilla);
  }
}

TEST(Costs, CompositeRejectsMisalignedInput) {
  const Trajectory r({{0, 0}, {1, 0}}, 0.1);
  const Trajectory h({{3, 0}, {2, 0}, {1, 0}}, 0.1);
  const std::vector<AgentState> a{AgentState{{3, 0}, {-1, 0}}};
  EXPECT_THROW(costs::composite_cost(r, {h}, a, {}, {}, {}, {}), ShapeMismatch);
  EXPECT_THROW(costs::composite_cost(r, {}, a, {}, {}, {}, {}), ShapeMismatch);
  costs::CostWeights bad;
  bad.Q_g << 1, 2, 2, 1;
  EXPECT_THROW(bad.validate(), InvalidArgument);
}
