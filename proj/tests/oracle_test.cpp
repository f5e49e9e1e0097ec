#include <gtest/gtest.h>

#include <random>
#include <vector>

#include "mfopt/instances.hpp"
#include "mfopt/oracle.hpp"

namespace mfopt {
namespace {

TEST(BruteForce, KnapsackExample) {
  const auto kp = ProblemInstance::knapsack({6, 10}, {3, 6}, 6);
  const auto r = brute_force(kp);
  ASSERT_TRUE(r.feasible);
  EXPECT_EQ(r.optimal_x, (BinaryVector{0, 1}));
  EXPECT_EQ(r.optimal_value, -10.0);
  EXPECT_EQ(r.method, OracleMethod::kBrute);
}

TEST(BruteForce, UnconstrainedAllOnes) {
  MultilinearPolynomial f(5);
  for (Index i = 0; i < 5; ++i) f.add_term(-1.0, {i});
  const auto r = brute_force(ProblemInstance::generic(5, f, {}, {}));
  EXPECT_EQ(r.optimal_x, BinaryVector(5, 1));
  EXPECT_EQ(r.optimal_value, -5.0);
}

TEST(BruteForce, InfeasibleEverywhere) {
  const MultilinearPolynomial g(3, {{1.0, {}}});
  const auto r = brute_force(
      ProblemInstance::generic(3, MultilinearPolynomial(3), {g}, {}));
  EXPECT_FALSE(r.feasible);
}

TEST(BruteForce, TieGoesToLexicographicallySmallest) {
  // x0 and x1 are interchangeable; both singletons are optimal.
  const auto kp = ProblemInstance::knapsack({4, 4}, {2, 2}, 3);
  EXPECT_EQ(brute_force(kp).optimal_x, (BinaryVector{0, 1}));
}

TEST(BruteForce, RefusesLargeInstances) {
  const auto kp = gen_kp_strong({.n = 25, .seed = 0});
  EXPECT_THROW(brute_force(kp), Refused);
}

TEST(Dp, KnapsackExample) {
  const auto kp = ProblemInstance::knapsack({6, 10}, {3, 6}, 6);
  const auto r = kp_dp(kp);
  ASSERT_TRUE(r.feasible);
  EXPECT_EQ(r.optimal_value, -10.0);
  EXPECT_EQ(r.optimal_x, (BinaryVector{0, 1}));
  EXPECT_EQ(r.method, OracleMethod::kDp);
}

TEST(Dp, ZeroCapacity) {
  const auto kp = ProblemInstance::knapsack({6, 10, 3}, {3, 6, 1}, 0);
  const auto r = kp_dp(kp);
  EXPECT_TRUE(r.feasible);
  EXPECT_EQ(r.optimal_x, BinaryVector(3, 0));
  EXPECT_EQ(r.optimal_value, 0.0);
}

TEST(Dp, Refusals) {
  EXPECT_THROW(kp_dp(ProblemInstance::knapsack({1, 2}, {1.5, 2}, 3)), Refused);
  EXPECT_THROW(kp_dp(ProblemInstance::knapsack({1, 2}, {1, 2}, 2.5)), Refused);
  EXPECT_THROW(kp_dp(ProblemInstance::quadratic_knapsack({1, 0, 0, 1}, {1, 1}, 1)),
               Refused);
}

TEST(Dp, NegativeCapacityInfeasible) {
  EXPECT_FALSE(kp_dp(ProblemInstance::knapsack({1}, {1}, -1)).feasible);
}

// The two exact oracles are independent algorithms.
TEST(CrossOracle, DpMatchesBruteForce) {
  std::mt19937_64 rng(2012);
  std::uniform_int_distribution<std::size_t> size(1, 20);
  std::uniform_int_distribution<int> weight(1, 60), gain(0, 80);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t n = size(rng);
    std::vector<double> q(n), w(n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      q[i] = gain(rng);
      w[i] = weight(rng);
      total += w[i];
    }
    std::uniform_int_distribution<int> cap(0, static_cast<int>(total));
    const auto kp = ProblemInstance::knapsack(q, w, cap(rng));
    const auto a = brute_force(kp);
    const auto b = kp_dp(kp);
    ASSERT_TRUE(a.feasible);
    ASSERT_TRUE(b.feasible);
    EXPECT_EQ(a.optimal_value, b.optimal_value) << "instance " << rep;
    EXPECT_TRUE(is_feasible(kp, b.optimal_x));
    EXPECT_EQ(objective_value(kp, std::span<const std::uint8_t>(b.optimal_x)),
              b.optimal_value);
  }
}

TEST(CrossOracle, StronglyCorrelatedInstances) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto kp = gen_kp_strong({.n = 18, .seed = seed});
    EXPECT_EQ(brute_force(kp).optimal_value, kp_dp(kp).optimal_value);
  }
}

}  // namespace
}  // namespace mfopt
