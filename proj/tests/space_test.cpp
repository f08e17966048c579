#include "bekit/space.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <vector>

namespace bekit {
namespace {

Distribution ThreePoint() {
  return Distribution::finite({{-1.0, 0.25}, {0.0, 0.5}, {1.0, 0.25}});
}

SpacePtr Mixed() {
  return OutcomeSpace::make({Distribution::rademacher(), ThreePoint(),
                             Distribution::finite({{0.0, 0.1}, {2.0, 0.6}, {5.0, 0.2}, {7.0, 0.1}})});
}

TEST(OutcomeSpaceTest, LexicographicEnumeration) {
  const auto space = Mixed();
  ASSERT_EQ(space->size(), 2u * 3u * 4u);
  // Coordinate 0 is the most significant digit.
  EXPECT_EQ(space->atom_index(0, 0), 0u);
  EXPECT_EQ(space->atom_index(12, 0), 1u);
  EXPECT_EQ(space->atom_index(12, 1), 0u);
  EXPECT_EQ(space->atom_index(5, 1), 1u);
  EXPECT_EQ(space->atom_index(5, 2), 1u);
  EXPECT_EQ(space->value(23, 2), 7.0);
  const auto p = space->probs();
  EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(space->prob(5), 0.5 * 0.5 * 0.6);
}

TEST(OutcomeSpaceTest, SizeCap) {
  EXPECT_NO_THROW(OutcomeSpace::iid(Distribution::rademacher(), 18));
  EXPECT_THROW(OutcomeSpace::iid(Distribution::rademacher(), 19), SizeError);
  EXPECT_THROW(OutcomeSpace::iid(ThreePoint(), 12), SizeError);
  EXPECT_THROW(OutcomeSpace::make({}), InputError);
}

TEST(OutcomeSpaceTest, WithCoordinateReplacesOneDigit) {
  const auto space = Mixed();
  for (std::size_t idx = 0; idx < space->size(); ++idx) {
    for (std::size_t t = 0; t < space->support(2); ++t) {
      const std::size_t j = space->with_coordinate(idx, 2, t);
      EXPECT_EQ(space->atom_index(j, 2), t);
      EXPECT_EQ(space->atom_index(j, 0), space->atom_index(idx, 0));
      EXPECT_EQ(space->atom_index(j, 1), space->atom_index(idx, 1));
    }
  }
}

TEST(RandomFunctionalTest, MomentsByEnumeration) {
  const auto space = OutcomeSpace::iid(Distribution::rademacher(), 2);
  const auto x = RandomFunctional::from(space, [](std::span<const double> v) { return v[0] + v[1]; });
  EXPECT_DOUBLE_EQ(x.expectation(), 0.0);
  EXPECT_DOUBLE_EQ(x.variance(), 2.0);
  EXPECT_DOUBLE_EQ(x.moment(4), 8.0);  // (0^4 * 2 + 16 * 2) / 4
  EXPECT_THROW(RandomFunctional(space, {1.0, 2.0}), InputError);
}

TEST(AverageAxisTest, MatchesDirectConditionalSum) {
  const auto space = Mixed();
  const auto x = RandomFunctional::from(space, [](std::span<const double> v) {
    return v[0] * v[1] + v[2] * v[2] - 3.0 * v[0] * v[1] * v[2];
  });
  for (int axis = 0; axis < 3; ++axis) {
    const RandomFunctional avg = average_axis(x, axis);
    for (std::size_t idx = 0; idx < space->size(); ++idx) {
      double expected = 0.0;
      for (std::size_t s = 0; s < space->support(axis); ++s) {
        expected += space->law(axis).prob(s) * x[space->with_coordinate(idx, axis, s)];
      }
      EXPECT_NEAR(avg[idx], expected, 1e-13);
    }
  }
}

TEST(ConditionalExpectationTest, TowerAndTables) {
  const auto space = Mixed();
  const auto x = RandomFunctional::from(space, [](std::span<const double> v) {
    return std::exp(0.1 * v[0]) + v[1] * v[2];
  });
  const Subset j = 0b101;
  const RandomFunctional c = conditional_expectation(x, j);
  EXPECT_NEAR(c.expectation(), x.expectation(), 1e-13);
  const Table t = marginal_table(x, j);
  const RandomFunctional back = expand(space, t);
  EXPECT_LE(max_abs_diff(back.values(), c.values()), 1e-13);
  const Table r = restrict_to(c, j);
  EXPECT_LE(max_abs_diff(r.values, t.values), 1e-13);
  // Narrowing a table equals conditioning the expanded functional.
  const Table n0 = narrow(*space, t, 0b001);
  const Table direct = marginal_table(x, 0b001);
  EXPECT_LE(max_abs_diff(n0.values, direct.values), 1e-13);
  EXPECT_NEAR(table_mean(*space, t), x.expectation(), 1e-13);
}

TEST(TableTest, MultiplyAndWiden) {
  const auto space = Mixed();
  const auto a = RandomFunctional::coordinate(space, 0);
  const auto b = RandomFunctional::coordinate(space, 2);
  const Table ta = restrict_to(a, 0b001), tb = restrict_to(b, 0b100);
  const Table prod = multiply(*space, ta, tb);
  EXPECT_EQ(prod.mask, 0b101u);
  const RandomFunctional full = expand(space, prod);
  EXPECT_LE(max_abs_diff(full.values(), (a * b).values()), 0.0);
  const Table w = widen(*space, ta, 0b011);
  EXPECT_EQ(w.values.size(), 6u);
}

TEST(SubsetTest, Enumeration) {
  EXPECT_EQ(subsets_of_size(0b1111, 2).size(), 6u);
  EXPECT_EQ(all_subsets(0b111).size(), 8u);
  EXPECT_EQ(all_subsets(0b101).front(), 0u);
  EXPECT_EQ(subset_members(0b1010), (std::vector<int>{1, 3}));
  const std::vector<int> m{0, 4};
  EXPECT_EQ(subset_of(m), 0b10001u);
}

}  // namespace
}  // namespace bekit
