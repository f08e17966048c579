#include "bekit/bounds.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bekit/mc.hpp"

namespace bekit {
namespace {

Distribution ThreePoint() {
  return Distribution::finite({{-1.0, 0.25}, {0.0, 0.5}, {1.0, 0.25}});
}

Distribution Skewed() {
  return center(Distribution::finite({{0.0, 0.3}, {1.0, 0.5}, {3.0, 0.2}}));
}

// (x_1 + ... + x_n) / sqrt(n) on Rademacher coordinates.
RandomFunctional NormalisedSum(int n) {
  const auto space = OutcomeSpace::iid(Distribution::rademacher(), n);
  RandomFunctional x = RandomFunctional::constant(space, 0.0);
  for (int k = 0; k < n; ++k) x += RandomFunctional::coordinate(space, k);
  return x * (1.0 / std::sqrt(static_cast<double>(n)));
}

RandomFunctional RandomStandardised(int n, Stream& rng) {
  std::vector<Distribution> laws;
  for (int i = 0; i < n; ++i) laws.push_back(i % 3 == 0 ? ThreePoint() : i % 3 == 1 ? Skewed() : Distribution::rademacher());
  RandomFunctional x(OutcomeSpace::make(laws));
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 2.0 * rng.uniform() - 1.0;
  x = x - x.expectation();
  return x * (1.0 / std::sqrt(x.moment(2)));
}

// For the normalised Rademacher sum every gradient equals t / sqrt(n), so the
// integrals collapse: int (grad X)^2 dt = 2 and int (grad X)^4 dt = 2 / n.
TEST(FourthMomentBoundTest, NormalisedSumByHand) {
  const int n = 4;
  const auto b = fourth_moment_bound(NormalisedSum(n));
  EXPECT_NEAR(b.fourth_moment, 3.0 - 2.0 / n, 1e-13);
  EXPECT_NEAR(b.l2_term, 4.0, 1e-13);
  EXPECT_NEAR(b.l4_term, 2.0 / n, 1e-13);
  EXPECT_NEAR(b.second_moment, 1.0, 1e-13);
  EXPECT_NEAR(b.rhs, 36 * 4.0 + 15 * 0.5 + 2.0, 1e-12);
  EXPECT_TRUE(b.holds());
}

TEST(FourthMomentBoundTest, HoldsOnRandomFunctionals) {
  Stream rng(17, 0);
  for (int rep = 0; rep < 40; ++rep) {
    const auto b = fourth_moment_bound(RandomStandardised(2 + rep % 4, rng));
    EXPECT_TRUE(b.holds()) << rep << ": " << b.fourth_moment << " > " << b.rhs;
  }
}

TEST(MasterBoundTest, NormalisedSumByHand) {
  const int n = 4;
  const auto b = master_bound(NormalisedSum(n));
  EXPECT_NEAR(b.variance_gap, 0.0, 1e-13);
  EXPECT_NEAR(b.covariance_term, 0.0, 1e-6);
  const double g4 = 2.0 / n;
  const double expected_grad =
      1.5 * std::sqrt(g4) * (std::pow((3.0 - 2.0 / n) * 4.0, 0.25) + 0.5 * std::sqrt(std::numbers::pi));
  EXPECT_NEAR(b.gradient_term, expected_grad, 1e-12);
  // (grad X)^2 = 1/n is constant, so (-L)^{1/2} removes it entirely.
  EXPECT_NEAR(b.operator_term, 4.0 * std::sqrt(g4), 1e-12);
  EXPECT_NEAR(b.total, b.variance_gap + b.covariance_term + b.gradient_term + b.operator_term, 1e-14);
}

TEST(MasterBoundTest, RejectsUncentred) {
  EXPECT_THROW(master_bound(NormalisedSum(3) + 0.5), DomainError);
}

TEST(MasterBoundTest, DominatesExactDistance) {
  Stream rng(23, 0);
  for (int rep = 0; rep < 30; ++rep) {
    const auto x = RandomStandardised(2 + rep % 4, rng);
    const double dk = exact_kdist(x).value;
    EXPECT_LE(dk, master_bound(x).total) << rep;
  }
}

TEST(SingleChaosBoundTest, NormalisedSumByHand) {
  const int n = 4;
  const auto b = single_chaos_bound(NormalisedSum(n), 1);
  EXPECT_NEAR(b.sd_term, 0.0, 1e-6);
  EXPECT_NEAR(b.grad4, 2.0 / n, 1e-13);
  EXPECT_NEAR(b.first, (12.0 + 5.0 * std::pow(3.0 - 2.0 / n, 0.25)) * std::sqrt(0.5), 1e-6);
  EXPECT_NEAR(b.second, 24.0 * std::sqrt(0.5), 1e-6);
  EXPECT_THROW(single_chaos_bound(NormalisedSum(2), 0), DomainError);
}

TEST(SingleChaosBoundTest, BothBoundsDominateOnRandomKernels) {
  Stream rng(29, 0);
  for (int rep = 0; rep < 30; ++rep) {
    const int n = 3 + rep % 3;
    const int d = 1 + rep % 3;
    std::vector<Distribution> laws{ThreePoint(), Skewed(), Distribution::rademacher(), Skewed(), ThreePoint()};
    laws.erase(laws.begin() + n, laws.end());
    const auto sub = OutcomeSpace::make(laws);
    const ChaosKernel f = random_kernel(sub, d, rng);
    const double s = std::sqrt(f.norm2() * factorial(d));
    const ChaosKernel g = f.scaled(1.0 / s);
    const auto b = single_chaos_bound(g);
    const double dk = exact_kdist(integral(g)).value;
    EXPECT_NEAR(b.variance_gap, 0.0, 1e-10);
    EXPECT_LE(dk, b.first) << rep;
    EXPECT_LE(dk, b.second) << rep;
  }
}

TEST(DegenerateBoundTest, NormalisedSumByHand) {
  const int n = 5;
  const auto t = rate_degenerate(project(NormalisedSum(n)));
  EXPECT_EQ(t.order, 1);
  EXPECT_NEAR(t.var_term, 0.0, 1e-13);
  EXPECT_NEAR(t.fourth_term, 1.0 / n, 1e-13);
  EXPECT_NEAR(t.bound, 24.0 * std::sqrt(2.0 / n), 1e-12);
}

}  // namespace
}  // namespace bekit
