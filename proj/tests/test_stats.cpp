#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "tmpc/stats.hpp"

using namespace tmpc;
using namespace tmpc::stats;

namespace {

std::vector<double> draw(std::mt19937_64& rng, std::size_t n, int levels, double shift = 0.0) {
  std::uniform_int_distribution<int> d(0, levels - 1);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng) + shift;
  return v;
}

}  // namespace

TEST(Summary, MeanAndSampleStd) {
  EXPECT_DOUBLE_EQ(mean({1, 2, 3, 4}), 2.5);
  EXPECT_DOUBLE_EQ(stddev({2, 4, 4, 4, 5, 5, 7, 9}), std::sqrt(32.0 / 7.0));
  EXPECT_EQ(stddev({3.0}), 0.0);
  EXPECT_THROW(mean({}), EmptySample);
}

TEST(Midranks, TiesShareAverageRank) {
  std::vector<std::size_t> ties;
  EXPECT_EQ(midranks({10, 20, 20, 5, 20}, &ties), (std::vector<double>{2, 4, 4, 1, 4}));
  EXPECT_EQ(ties, (std::vector<std::size_t>{1, 1, 3}));
}

TEST(MannWhitney, SmallExample) {
  const auto r = mann_whitney_u({1, 2}, {3, 4});
  EXPECT_TRUE(r.exact);
  EXPECT_EQ(r.U_a, 0.0);
  EXPECT_EQ(r.U_b, 4.0);
  EXPECT_DOUBLE_EQ(r.p_less, 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(r.p_one_sided, 1.0 / 6.0);
  EXPECT_DOUBLE_EQ(r.p_two_sided, 1.0 / 3.0);
  EXPECT_EQ(r.p_greater, 1.0);
}

TEST(MannWhitney, UCountsPairs) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto a = draw(rng, 1 + i % 30, 5), b = draw(rng, 1 + i % 17, 5);
    const auto r = mann_whitney_u(a, b);
    EXPECT_EQ(r.U_a, oracle::u_pairs(a, b));
    EXPECT_EQ(r.U_a + r.U_b, static_cast<double>(a.size() * b.size()));
  }
}

TEST(MannWhitney, ExactMatchesPermutationOracle) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 300; ++i) {
    std::uniform_int_distribution<std::size_t> size(1, 6);
    const auto a = draw(rng, size(rng), 6), b = draw(rng, size(rng), 6, 0.5 * (i % 3));
    const auto r = mann_whitney_u(a, b);
    const auto o = oracle::exact_permutation(a, b);
    ASSERT_TRUE(r.exact);
    EXPECT_EQ(r.p_greater, o.greater);
    EXPECT_EQ(r.p_less, o.less);
  }
}

TEST(MannWhitney, ExactTailsAreMirrorImages) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 100; ++i) {
    const auto a = draw(rng, 5, 4), b = draw(rng, 7, 4);
    const auto ab = mann_whitney_u(a, b), ba = mann_whitney_u(b, a);
    EXPECT_DOUBLE_EQ(ab.p_greater, ba.p_less);
    EXPECT_DOUBLE_EQ(ab.p_two_sided, ba.p_two_sided);
    EXPECT_GE(ab.p_greater + ab.p_less, 1.0);
  }
}

TEST(MannWhitney, NormalApproximationTracksMonteCarlo) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> nd(0, 1);
  for (double shift : {0.0, 0.3}) {
    std::vector<double> a(100), b(100);
    for (auto& x : a) x = std::round(nd(rng) * 4) / 4;  // coarse grid, plenty of ties
    for (auto& x : b) x = std::round((nd(rng) + shift) * 4) / 4;
    const auto r = mann_whitney_u(a, b);
    EXPECT_FALSE(r.exact);
    EXPECT_NEAR(r.p_two_sided, oracle::monte_carlo_two_sided(a, b, 200000, 5), 0.01);
  }
}

TEST(MannWhitney, ExtremeSeparationIsSignificant) {
  std::vector<double> a, b;
  for (int i = 0; i < 20; ++i) a.push_back(100 + i), b.push_back(i);
  const auto r = mann_whitney_u(a, b);
  EXPECT_LT(r.p_two_sided, 0.001);
  EXPECT_LT(r.p_greater, 0.001);
  EXPECT_GT(r.p_less, 0.999);
}

TEST(MannWhitney, AllTiedIsUninformative) {
  const auto r = mann_whitney_u(std::vector<double>(10, 1.0), std::vector<double>(12, 1.0));
  EXPECT_EQ(r.p_two_sided, 1.0);
}

TEST(MannWhitney, RejectsBadSamples) {
  EXPECT_THROW(mann_whitney_u({}, {1.0}), EmptySample);
  EXPECT_THROW(mann_whitney_u({std::nan("")}, {1.0}), InvalidArgument);
}

TEST(Compare, StarsAndPercentChange) {
  EXPECT_EQ(stars(0.0009), "***");
  EXPECT_EQ(stars(0.001), "**");
  EXPECT_EQ(stars(0.04), "*");
  EXPECT_EQ(stars(0.05), "");
  const auto c = compare({2, 2, 2}, {1, 1, 1}, "D");
  EXPECT_DOUBLE_EQ(c.percent_change, 100.0);
  EXPECT_EQ(c.n_a, 3u);
  EXPECT_THROW(compare({}, {1}, "D"), MissingCell);
}
