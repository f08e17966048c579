// Acceptance run: one PASS/FAIL line per criterion.
//
//   acceptance [--only k[,k...]] [--expect-fail k[,k...]]
//
// Criteria named with --expect-fail are still run and reported as FAIL when
// they fail; they only stop counting towards the exit status. A criterion
// that was expected to fail but passes is reported as XPASS and does count.

#include <sys/wait.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bekit/bekit.hpp"

namespace {

using namespace bekit;

// Pinned tolerances and limits.
constexpr double kEq4RelTol = 1e-9;          // criterion 1
constexpr double kVarRelTol = 1e-10;         // criterion 2
constexpr double kChaosTol = 1e-10;          // criterion 3
constexpr double kChainRelTol = 1e-10;       // criterion 6 (floating slack on each link)
constexpr double kScalingSpread = 10.0;      // criteria 7 and 8
constexpr double kDkwDelta = 0.01;           // criteria 7, 8, 10
constexpr double kExactKdistTol = 1e-12;     // criterion 10
constexpr double kLimit1 = 10, kLimit3 = 60, kLimit4 = 300, kLimit7 = 300, kLimit8 = 600;  // seconds

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

Distribution ThreePoint() { return Distribution::finite({{-1.0, 0.25}, {0.0, 0.5}, {1.0, 0.25}}); }
Distribution Skewed() { return center(Distribution::finite({{0.0, 0.3}, {1.0, 0.5}, {3.0, 0.2}})); }

Distribution LawMix(int i) {
  switch (i % 3) {
    case 0: return ThreePoint();
    case 1: return Skewed();
    default: return Distribution::rademacher();
  }
}

SymMatrix RandomSymmetric(int n, bool diagonal, Stream& rng) {
  SymMatrix a(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      const double v = 2.0 * rng.uniform() - 1.0;
      if (i != j || diagonal) a.set(i, j, v);
    }
  return a;
}

// Q = sum_{i != j} a_ij X_i X_j + sum_i a_ii (X_i^2 - mu_2) on the full grid.
RandomFunctional EnumeratedQ(const SymMatrix& a, const Distribution& law) {
  const int n = a.n();
  const auto space = OutcomeSpace::iid(law, n);
  const double mu2 = moments(law).mu[2];
  return RandomFunctional::from(space, [&](std::span<const double> x) {
    double q = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) q += i == j ? a(i, i) * (x[i] * x[i] - mu2) : a(i, j) * x[i] * x[j];
    return q;
  });
}

// Criteria 1 and 2 share their instances: 20 matrices x 2 laws, n in 2..6.
struct QInstance {
  SymMatrix a;
  Distribution law;
};

std::vector<QInstance> QInstances() {
  Stream rng(101, 0);
  std::vector<QInstance> out;
  for (int i = 0; i < 20; ++i) {
    const SymMatrix a = RandomSymmetric(2 + i % 5, i % 4 != 3, rng);
    out.push_back({a, Distribution::rademacher()});
    out.push_back({a, ThreePoint()});
  }
  return out;
}

Outcome Criterion1() {
  double worst = 0.0;
  const auto inst = QInstances();
  for (const auto& [a, law] : inst) {
    const QFormAnalysis q = analyze(a, moments(law));
    const double eq4 = EnumeratedQ(a, law).moment(4);
    worst = std::max(worst, std::abs(q.EQ4 - eq4) / std::abs(eq4));
  }
  return {worst <= kEq4RelTol, std::to_string(inst.size()) + " instances, max rel err " + fmt("%.2e", worst) +
                                   " (tol " + fmt("%.0e", kEq4RelTol) + ")"};
}

Outcome Criterion2() {
  double worst = 0.0;
  const auto inst = QInstances();
  for (const auto& [a, law] : inst) {
    const QFormAnalysis q = analyze(a, moments(law));
    const RandomFunctional x = EnumeratedQ(a, law);
    const double var = x.variance();
    worst = std::max(worst, std::abs(q.sigma2 - var) / std::max(1.0, var));
  }
  return {worst <= kVarRelTol, std::to_string(inst.size()) + " instances, max rel err " + fmt("%.2e", worst) +
                                   " (tol " + fmt("%.0e", kVarRelTol) + ")"};
}

Outcome Criterion3() {
  Stream rng(303, 0);
  double iso = 0.0, mult = 0.0, cov = 0.0;
  for (int i = 0; i < 50; ++i) {
    const int n = 2 + i % 3;
    std::vector<Distribution> laws;
    for (int k = 0; k < n; ++k) laws.push_back(LawMix(i + k));
    const auto space = OutcomeSpace::make(laws);
    const int p = 1 + i % std::min(n, 3), q = 1 + (i / 3) % std::min(n, 3);
    const ChaosKernel f = random_kernel(space, p, rng), g = random_kernel(space, q, rng);
    const RandomFunctional xf = integral(f), xg = integral(g);
    iso = std::max(iso, std::abs(xf.moment(2) - factorial(p) * f.norm2()));
    mult = std::max(mult, max_abs_diff((xf * xg).values(), multiply(f, g).reconstruct().values()));
    RandomFunctional x(space), y(space);
    for (std::size_t k = 0; k < x.size(); ++k) {
      x[k] = 2.0 * rng.uniform() - 1.0;
      y[k] = 2.0 * rng.uniform() - 1.0;
    }
    x = x - x.expectation();
    y = y - y.expectation();
    for (double alpha : {0.0, 0.5, 1.0}) cov = std::max(cov, covariance_identity_check(x, y, alpha));
  }
  const bool ok = iso <= kChaosTol && mult <= kChaosTol && cov <= kChaosTol;
  return {ok, "50 kernels; isometry " + fmt("%.1e", iso) + ", multiplication " + fmt("%.1e", mult) +
                  ", covariance " + fmt("%.1e", cov) + " (tol " + fmt("%.0e", kChaosTol) + ")"};
}

Outcome Criterion4() {
  Stream rng(404, 0);
  int violations = 0, pure = 0;
  double r_master = 0.0, r_first = 0.0, r_second = 0.0, r_degen = 0.0;
  for (int i = 0; i < 200; ++i) {
    const int n = 2 + i % 5;
    std::vector<Distribution> laws;
    for (int k = 0; k < n; ++k) laws.push_back(LawMix(i + 2 * k));
    const auto space = OutcomeSpace::make(laws);

    // General centred functional with a variance away from 1.
    RandomFunctional x(space);
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = 2.0 * rng.uniform() - 1.0;
    x = x - x.expectation();
    x = x * ((0.7 + 0.6 * rng.uniform()) / std::sqrt(x.moment(2)));
    const double dx = exact_kdist(x).value;
    const double mb = master_bound(x).total;
    r_master = std::max(r_master, dx / mb);
    violations += !(dx <= mb);

    // Pure order-d functional I_d(f) with unit variance.
    const int d = 1 + i % std::min(n, 3);
    const ChaosKernel f = random_kernel(space, d, rng);
    const RandomFunctional y = integral(f.scaled(1.0 / std::sqrt(factorial(d) * f.norm2())));
    const double dy = exact_kdist(y).value;
    const auto sb = single_chaos_bound(y, d);
    const double db = rate_degenerate(project(y)).bound;
    ++pure;
    r_first = std::max(r_first, dy / sb.first);
    r_second = std::max(r_second, dy / sb.second);
    r_degen = std::max(r_degen, dy / db);
    violations += !(dy <= sb.first) + !(dy <= sb.second) + !(dy <= db);
  }
  return {violations == 0, "200 functionals + " + std::to_string(pure) + " pure-order inputs, " +
                               std::to_string(violations) + " violations; max d_K/bound: master " +
                               fmt("%.3f", r_master) + ", single-chaos " + fmt("%.3f", r_first) + "/" +
                               fmt("%.3f", r_second) + ", degenerate " + fmt("%.3f", r_degen)};
}

Outcome Criterion5() {
  Stream rng(505, 0);
  int violations = 0;
  double worst = 0.0;
  for (int i = 0; i < 500; ++i) {
    const int n = 1 + i % 6;
    std::vector<Distribution> laws;
    for (int k = 0; k < n; ++k) laws.push_back(LawMix(i + k));
    RandomFunctional x(OutcomeSpace::make(laws));
    for (std::size_t k = 0; k < x.size(); ++k) x[k] = (2.0 * rng.uniform() - 1.0) * (i % 2 ? 1.0 : 10.0);
    x = x - x.expectation();
    const auto b = fourth_moment_bound(x);
    worst = std::max(worst, b.fourth_moment / b.rhs);
    violations += !b.holds();
  }
  return {violations == 0,
          "500 functionals, " + std::to_string(violations) + " violations, max E[X^4]/rhs " + fmt("%.4f", worst)};
}

// The links of eq. (Tr<l) are stated for empty diagonals and are checked on
// the zero-diagonal half; the two constant-free endpoints of the trace
// sandwich are stated for every matrix and are checked on all of them.
Outcome Criterion6() {
  Stream rng(606, 0);
  int trace_lambda = 0, lambda_sigma = 0, infl_trace = 0, trace_sigma = 0, degenerate = 0;
  int zero_diag = 0;
  for (int i = 0; i < 1000; ++i) {
    const int n = 2 + i % 39;
    const bool diag = (i / 39) % 2 == 1;
    const Distribution law = i % 2 == 0 ? Distribution::rademacher() : ThreePoint();
    const QFormAnalysis q = analyze(RandomSymmetric(n, diag, rng), moments(law));
    if (q.degenerate) {
      ++degenerate;
      continue;
    }
    const TraceChain c = trace_chain(q, kChainRelTol);
    if (!diag) {
      ++zero_diag;
      trace_lambda += !c.trace_le_lambda;
      lambda_sigma += !c.lambda_le_sigma;
    }
    infl_trace += !c.influence_le_trace;
    trace_sigma += !c.trace_le_sigma;
  }
  // Known counterexample outside this ensemble: a dominant diagonal under the
  // Rademacher law, where the diagonal carries no variance.
  SymMatrix dom(3);
  for (int i = 0; i < 3; ++i) dom.set(i, i, 1.0);
  dom.set(0, 1, 0.1);
  dom.set(1, 2, 0.1);
  const TraceChain ce = trace_chain(analyze(dom, moments(Distribution::rademacher())), kChainRelTol);
  const int total = trace_lambda + lambda_sigma + infl_trace + trace_sigma + degenerate;
  std::ostringstream s;
  s << "1000 matrices n=2..40 (" << zero_diag << " zero-diagonal), violations: sqrtTr4<=l1|A|_F " << trace_lambda
    << ", l1|A|_F<=l1 sigma/mu2 " << lambda_sigma << ", max-influence<=sqrtTr4 " << infl_trace
    << ", Tr4<=sigma^4/mu2^4 " << trace_sigma << ", degenerate " << degenerate
    << "; note: dominant-diagonal counterexample Tr4 " << fmt("%.3f", ce.sqrt_tr4 * ce.sqrt_tr4) << " > cap "
    << fmt("%.5f", ce.tr4_cap);
  return {total == 0, s.str()};
}

Outcome Criterion7() {
  const std::uint64_t seed = 7;
  const std::size_t samples = 200000;
  std::vector<double> dk, dkw, ratio;
  std::ostringstream s;
  for (int n : {16, 32, 64, 128}) {
    const SymMatrix a = qform_family("pm1_zero_diagonal", n, seed);
    const QFormAnalysis q = analyze(a, moments(Distribution::rademacher()));
    const KDistReport e = qform_empirical(a, Distribution::rademacher(), q, samples, derive_seed(seed, n), kDkwDelta);
    dk.push_back(e.value);
    dkw.push_back(e.dkw_radius);
    ratio.push_back(e.value / bound_r2(q));
    s << " n=" << n << ": dK " << fmt("%.4f", e.value) << " r2 " << fmt("%.4f", bound_r2(q)) << ";";
  }
  const double spread = *std::max_element(ratio.begin(), ratio.end()) / *std::min_element(ratio.begin(), ratio.end());
  bool monotone = true;
  for (std::size_t i = 1; i < dk.size(); ++i) monotone &= dk[i] <= dk[i - 1] + 2.0 * dkw[i];
  return {spread < kScalingSpread && monotone,
          "ratio spread " + fmt("%.2f", spread) + " (< 10), monotone within 2 DKW: " + (monotone ? "yes" : "no") + ";" +
              s.str()};
}

Outcome Criterion8() {
  const std::uint64_t seed = 8;
  const std::size_t samples = 200000, pilot = 100000;
  const GraphTemplate g = GraphTemplate::triangle();
  struct Point {
    int n;
    double p, dk, dkw, rate;
  };
  std::vector<Point> pts;
  std::uint64_t tag = 0;
  for (int n : {20, 40, 80}) {
    for (double p : {0.3, 0.5}) {
      const GraphPoint gp = graph_point(g, n, p, Distribution::rademacher(), samples, pilot, derive_seed(seed, tag++),
                                        kDkwDelta, CopyWeight::kProduct);
      pts.push_back({n, p, gp.empirical.value, gp.empirical.dkw_radius, gp.rate.rate});
    }
  }
  double c = 0.0, lo = 1e300;
  for (const auto& q : pts) {
    c = std::max(c, q.dk / q.rate);
    lo = std::min(lo, q.dk / q.rate);
  }
  bool covered = true, trend = true;
  for (const auto& q : pts) covered &= q.dk <= c * q.rate;
  for (std::size_t i = 0; i + 2 < pts.size(); ++i) trend &= pts[i + 2].dk <= pts[i].dk + 2.0 * pts[i + 2].dkw;
  const double spread = c / lo;
  std::ostringstream s;
  s << "fitted c " << fmt("%.3f", c) << ", ratio spread " << fmt("%.2f", spread) << " (< 10), decreasing in n: "
    << (trend ? "yes" : "no") << ";";
  for (const auto& q : pts) s << " (" << q.n << "," << q.p << "): dK " << fmt("%.4f", q.dk) << " rate " << fmt("%.4f", q.rate) << ";";
  return {covered && trend && spread < kScalingSpread, s.str()};
}

std::string RunCli(const std::string& args) {
  const std::string cmd = std::string(BEKIT_CLI_PATH) + " " + args + " 2>/dev/null";
  std::string out;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return "<popen failed>";
  std::array<char, 4096> buf;
  std::size_t k;
  while ((k = fread(buf.data(), 1, buf.size(), p)) > 0) out.append(buf.data(), k);
  const int status = pclose(p);
  out += "\nexit=" + std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1);
  return out;
}

Outcome Criterion9() {
  const std::string d = BEKIT_DATA_DIR;
  const std::vector<std::string> runs = {
      "qform --matrix " + d + "/cycle8.csv --law " + d + "/three_point.json --samples 20000 --seed 9",
      "qform --sweep " + d + "/qform_sweep.json",
      "chaos-verify --seed 5",
      "chaos-verify --kernel " + d + "/kernel_corrupt.json",
      "ustat --weights " + d + "/weights_pairs6.json --law " + d + "/three_point.json --samples 20000 --seed 2",
      "graph --graph " + d + "/triangle.json --law " + d + "/rademacher.json --host-size 15 --retention 0.4 --samples 5000",
      "graph --sweep " + d + "/graph_sweep_empty.json",
  };
  int identical = 0;
  for (const auto& r : runs) {
    const std::string a = RunCli(r), b = RunCli(r);
    identical += a == b && a.size() > 20;
  }
  return {identical == static_cast<int>(runs.size()),
          std::to_string(identical) + "/" + std::to_string(runs.size()) + " CLI runs byte-identical on repeat"};
}

Outcome Criterion10() {
  const auto space = OutcomeSpace::iid(Distribution::rademacher(), 1);
  const RandomFunctional x = RandomFunctional::coordinate(space, 0);
  const double exact = exact_kdist(x).value;
  // Independent value of Phi(1) - 1/2: trapezoid rule for the density on [0, 1].
  const int m = 1000000;
  double quad = 0.5 * (1.0 + std::exp(-0.5));
  for (int i = 1; i < m; ++i) {
    const double t = static_cast<double>(i) / m;
    quad += std::exp(-0.5 * t * t);
  }
  quad /= m * std::sqrt(2.0 * std::numbers::pi);
  const auto v = simulate(100000, 10, [](Stream& rng) { return sample(Distribution::rademacher(), rng); });
  const KDistReport e = empirical_kdist(v, kDkwDelta);
  const double err = std::abs(exact - quad), gap = std::abs(e.value - exact);
  return {err <= kExactKdistTol && gap <= e.dkw_radius,
          "exact " + fmt("%.12f", exact) + " vs quadrature err " + fmt("%.1e", err) + " (tol 1e-12); empirical gap " +
              fmt("%.4f", gap) + " <= DKW " + fmt("%.4f", e.dkw_radius)};
}

std::set<int> ParseList(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.insert(std::stoi(item));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only, expect_fail;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) only = ParseList(argv[++i]);
    else if (a == "--expect-fail" && i + 1 < argc) expect_fail = ParseList(argv[++i]);
    else {
      std::fprintf(stderr, "usage: acceptance [--only k,...] [--expect-fail k,...]\n");
      return 2;
    }
  }
  setenv("BEKIT_THREADS", "1", 1);  // runtime limits are for a single thread

  struct Criterion {
    int id;
    const char* name;
    double limit;  // seconds, 0 = none
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> all = {
      {1, "FOURTH-MOMENT IDENTITY", kLimit1, Criterion1}, {2, "VARIANCE", 0, Criterion2},
      {3, "CHAOS IDENTITIES", kLimit3, Criterion3},     {4, "EXPLICIT-CONSTANT BOUNDS HOLD", kLimit4, Criterion4},
      {5, "FOURTH MOMENT BOUND", 0, Criterion5},        {6, "INEQUALITY CHAINS", 0, Criterion6},
      {7, "CONVERGENCE SCALING", kLimit7, Criterion7},  {8, "GRAPH RATE", kLimit8, Criterion8},
      {9, "DETERMINISM", 0, Criterion9},                {10, "KOLMOGOROV ENGINE", 0, Criterion10},
  };
  int counted_failures = 0;
  for (const auto& c : all) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    while (!o.detail.empty() && o.detail.back() == ';') o.detail.pop_back();
    bool pass = o.pass;
    std::string timing = fmt("%.2fs", secs);
    if (c.limit > 0) {
      timing += " (limit " + fmt("%.0fs", c.limit) + ")";
      pass &= secs < c.limit;
    }
    const bool expected = expect_fail.count(c.id) > 0;
    const char* tag = pass ? (expected ? "XPASS" : "PASS") : "FAIL";
    std::printf("[%s] %2d %s: %s; %s%s\n", tag, c.id, c.name, o.detail.c_str(), timing.c_str(),
                !pass && expected ? " [expected failure]" : "");
    std::fflush(stdout);
    if (pass == expected) ++counted_failures;
  }
  return counted_failures == 0 ? 0 : 1;
}
