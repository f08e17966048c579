#include "bekit/mc.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "bekit/space.hpp"

namespace bekit {
namespace {

double BoxMuller(Stream& rng) {
  const double u = 1.0 - rng.uniform();  // (0, 1]
  const double v = rng.uniform();
  return std::sqrt(-2.0 * std::log(u)) * std::cos(2.0 * M_PI * v);
}

// Composite trapezoid rule for the density on [0, x] with 10^6 panels.
double TrapezoidCdf(double x) {
  const int m = 1000000;
  const double h = x / m;
  auto phi = [](double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * M_PI); };
  double s = 0.5 * (phi(0.0) + phi(x));
  for (int i = 1; i < m; ++i) s += phi(i * h);
  return 0.5 + s * h;
}

TEST(NormalCdfTest, Symmetry) {
  EXPECT_EQ(normal_cdf(0.0), 0.5);
  Stream rng(1, 0);
  for (int i = 0; i < 1000; ++i) {
    const double x = 16.0 * rng.uniform() - 8.0;
    EXPECT_NEAR(normal_cdf(x) + normal_cdf(-x), 1.0, 1e-12);
  }
}

TEST(NormalCdfTest, AgainstQuadrature) {
  EXPECT_NEAR(normal_cdf(1.0), 0.8413447460685429, 1e-15);
  for (double x : {0.3, 1.0, 2.0, 3.5}) EXPECT_NEAR(normal_cdf(x), TrapezoidCdf(x), 1e-12) << x;
}

TEST(ExactKDistTest, RademacherSign) {
  const auto space = OutcomeSpace::iid(Distribution::rademacher(), 1);
  const auto r = exact_kdist(RandomFunctional::coordinate(space, 0));
  EXPECT_NEAR(r.value, normal_cdf(1.0) - 0.5, 1e-15);
  EXPECT_NEAR(r.value, 0.341345, 1e-6);
  EXPECT_EQ(r.method, KDistReport::Method::kExact);
  EXPECT_EQ(r.dkw_radius, 0.0);
}

TEST(ExactKDistTest, PointMassAtZero) {
  const auto space = OutcomeSpace::iid(Distribution::rademacher(), 2);
  EXPECT_NEAR(exact_kdist(RandomFunctional::constant(space, 0.0)).value, 0.5, 1e-15);
}

TEST(ExactKDistTest, TiesAreMerged) {
  // X1 + X2 on Rademacher coordinates has a double atom at 0.
  const auto space = OutcomeSpace::iid(Distribution::rademacher(), 2);
  const auto x = RandomFunctional::coordinate(space, 0) + RandomFunctional::coordinate(space, 1);
  const double expected = std::max({normal_cdf(-2.0), 0.25 - normal_cdf(-2.0), 0.5 - 0.25, 0.75 - 0.5,
                                    normal_cdf(2.0) - 0.75, 1.0 - normal_cdf(2.0)});
  EXPECT_NEAR(exact_kdist(x).value, expected, 1e-15);
}

TEST(ExactKDistTest, FourAtomUniformAgreesWithMonteCarlo) {
  const Distribution law = Distribution::finite({{-1.5, 0.25}, {-0.5, 0.25}, {0.5, 0.25}, {1.5, 0.25}});
  const auto space = OutcomeSpace::iid(law, 1);
  const double exact = exact_kdist(RandomFunctional::coordinate(space, 0)).value;
  // By hand: the largest gap sits just below 1.5 or at -1.5.
  double hand = 0.0;
  const double a[] = {-1.5, -0.5, 0.5, 1.5};
  for (int i = 0; i < 4; ++i) {
    hand = std::max(hand, std::abs(0.25 * i - normal_cdf(a[i])));
    hand = std::max(hand, std::abs(0.25 * (i + 1) - normal_cdf(a[i])));
  }
  EXPECT_NEAR(exact, hand, 1e-15);
  const auto samples = simulate(10000000, 21, [&](Stream& rng) { return sample(law, rng); });
  const auto emp = empirical_kdist(samples, 0.01);
  EXPECT_LT(std::abs(emp.value - exact), emp.dkw_radius);
}

TEST(ExactKDistTest, OrderAndSignInvariance) {
  const Distribution law = Distribution::finite({{-2.0, 0.1}, {-0.5, 0.4}, {0.5, 0.4}, {2.0, 0.1}});
  const auto fwd = OutcomeSpace::iid(law, 3);
  const Distribution rev = Distribution::finite({{2.0, 0.1}, {0.5, 0.4}, {-0.5, 0.4}, {-2.0, 0.1}});
  const auto bwd = OutcomeSpace::iid(rev, 3);
  auto sum = [](SpacePtr s) {
    return (RandomFunctional::coordinate(s, 0) + RandomFunctional::coordinate(s, 1) +
            RandomFunctional::coordinate(s, 2)) * (1.0 / std::sqrt(3.0 * 0.53));
  };
  const double a = exact_kdist(sum(fwd)).value;
  EXPECT_NEAR(exact_kdist(sum(bwd)).value, a, 1e-14);
  EXPECT_NEAR(exact_kdist(sum(fwd) * -1.0).value, a, 1e-14);
  EXPECT_LE(a, 1.0);
}

TEST(EmpiricalKDistTest, ThreeSampleFormula) {
  // Hand evaluation: max(1/3 - Phi(-1), Phi(1) - 2/3) = 0.174678...
  const double hand = 1.0 / 3.0 - normal_cdf(-1.0);
  EXPECT_NEAR(ks_statistic({-1.0, 0.0, 1.0}), hand, 1e-15);
  EXPECT_NEAR(hand, 0.174678, 1e-6);
}

TEST(EmpiricalKDistTest, Preconditions) {
  EXPECT_THROW(empirical_kdist(std::vector<double>(99, 0.0), 0.01), InputError);
  EXPECT_THROW(empirical_kdist(std::vector<double>(100, 0.0), 0.0), InputError);
  std::vector<double> v(200, 0.0);
  v[3] = NAN;
  EXPECT_THROW(empirical_kdist(v, 0.01), InputError);
}

TEST(EmpiricalKDistTest, UnsortedInputAndDegenerateSample) {
  std::vector<double> v;
  Stream rng(2, 0);
  for (int i = 0; i < 500; ++i) v.push_back(BoxMuller(rng));
  std::vector<double> s = v;
  std::sort(s.begin(), s.end());
  EXPECT_EQ(empirical_kdist(v, 0.05).value, ks_statistic(s));
  EXPECT_GE(empirical_kdist(std::vector<double>(1000, 0.0), 0.05).value, 0.5);
}

TEST(EmpiricalKDistTest, DkwCoverage) {
  const std::size_t N = 100000;
  int covered = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const auto r = empirical_kdist(simulate(N, 1000 + rep, BoxMuller), 0.01);
    covered += r.value < r.dkw_radius;
  }
  EXPECT_GE(covered, 198);
}

TEST(EmpiricalKDistTest, ConvergesToExact) {
  const Distribution law = Distribution::finite({{-1.0, 0.3}, {0.0, 0.2}, {1.2, 0.5}});
  const auto space = OutcomeSpace::iid(law, 1);
  const double exact = exact_kdist(RandomFunctional::coordinate(space, 0)).value;
  for (std::size_t n : {1000u, 10000u, 100000u}) {
    const auto r = empirical_kdist(simulate(n, 31, [&](Stream& rng) { return sample(law, rng); }), 0.01);
    EXPECT_LT(std::abs(r.value - exact), r.dkw_radius) << n;
  }
}

TEST(McSimulateTest, IndependentOfWorkerCount) {
  setenv("BEKIT_THREADS", "1", 1);
  const auto a = simulate(50000, 8, BoxMuller, 1000);
  setenv("BEKIT_THREADS", "3", 1);
  const auto b = simulate(50000, 8, BoxMuller, 1000);
  unsetenv("BEKIT_THREADS");
  EXPECT_EQ(a, b);
}

TEST(SampleIoTest, RoundTrips) {
  Stream rng(4, 0);
  std::vector<double> v;
  for (int i = 0; i < 257; ++i) v.push_back(BoxMuller(rng) * 1e3);
  v.push_back(-0.0);
  v.push_back(1e-300);
  const auto dir = std::filesystem::temp_directory_path();
  const std::string bin = (dir / "bekit_mc_test.bin").string();
  const std::string csv = (dir / "bekit_mc_test.csv").string();
  write_samples_binary(bin, v);
  EXPECT_EQ(read_samples_binary(bin), v);
  EXPECT_EQ(std::filesystem::file_size(bin), 8 + 8 * v.size());
  write_samples_csv(csv, v);
  EXPECT_EQ(read_samples_csv(csv), v);
  {
    std::ofstream f(csv);
    f << "value\n1.0\nabc\n";
  }
  EXPECT_THROW(read_samples_csv(csv), InputError);
  {
    std::ofstream f(bin, std::ios::binary);
    const std::uint64_t n = 10;
    f.write(reinterpret_cast<const char*>(&n), 8);
  }
  EXPECT_THROW(read_samples_binary(bin), InputError);
  std::remove(bin.c_str());
  std::remove(csv.c_str());
}

}  // namespace
}  // namespace bekit
