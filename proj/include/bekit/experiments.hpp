#pragma once

// Batch experiments behind the command-line tool. Every runner returns the
// report text; identical configuration and seed give byte-identical output.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "bekit/bounds.hpp"
#include "bekit/chaos.hpp"
#include "bekit/graph.hpp"
#include "bekit/json_io.hpp"
#include "bekit/mc.hpp"
#include "bekit/qform.hpp"
#include "bekit/ustat.hpp"

namespace bekit {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kExitOk = 0, kExitInput = 2, kExitDegenerate = 3, kExitIdentity = 4 };

struct ExperimentConfig {
  std::string command;
  std::string matrix, law, weights, graph, kernel, scenario, sweep, out;
  std::uint64_t seed = 1;
  std::size_t samples = 0;
  double delta = 0.01;
  std::optional<double> constant;
  int host_size = 0;
  double retention = 0.0;
  std::string convention = "product";
  std::size_t pilot = 100000;
};

struct RunResult {
  int exit_code = kExitOk;
  std::string text;                   // JSON report or CSV
  std::vector<std::string> failures;  // names of failed identities
};

inline std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// Hash of every setting that can change a report plus the contents of the
// input files (paths themselves are excluded so copies hash alike).
inline std::string config_hash(const ExperimentConfig& c) {
  Json j{{"command", c.command},   {"seed", c.seed},           {"samples", c.samples},
         {"delta", c.delta},       {"host_size", c.host_size}, {"retention", c.retention},
         {"convention", c.convention}, {"pilot", c.pilot}};
  j["constant"] = c.constant ? Json(*c.constant) : Json(nullptr);
  std::uint64_t h = fnv1a(j.dump());
  for (const std::string* p : {&c.matrix, &c.law, &c.weights, &c.graph, &c.kernel, &c.scenario, &c.sweep}) {
    h = fnv1a(p->empty() ? std::string("-") : read_text_file(*p), h);
  }
  return hex64(h);
}

inline Json report_header(const ExperimentConfig& c) {
  return Json{{"tool", "bekit"}, {"version", kVersion}, {"command", c.command},
              {"config_hash", config_hash(c)}, {"seed", c.seed}};
}

// A rate without its absolute constant, with the optional user constant.
inline Json rate_entry(const std::string& name, double value, const ExperimentConfig& c) {
  Json j{{"name", name}, {"value", value}, {"constant_free", true}};
  if (c.constant) j["scaled_by_constant"] = *c.constant * value;
  return j;
}

inline Json constant_entry(const ExperimentConfig& c) {
  return c.constant ? Json(*c.constant) : Json(nullptr);
}

// A bound whose constants are explicit numbers.
inline Json explicit_entry(const std::string& name, double value) {
  return Json{{"name", name}, {"value", value}, {"constant_free", false}};
}

inline void require_samples(std::size_t samples) {
  if (samples != 0 && samples < 100) {
    throw InputError("empirical runs need at least 100 samples (got " + std::to_string(samples) + ")");
  }
}

inline Distribution load_law(const std::string& path) {
  if (path.empty()) throw InputError("a law file is required (--law)");
  return distribution_from_json(load_json_file(path));
}

inline std::string format_double(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Quadratic forms

inline Json qform_analysis_json(const QFormAnalysis& q) {
  const QFormSums& s = q.sums;
  return Json{{"n", q.n},
              {"sigma2", q.sigma2},
              {"S1", q.S1},
              {"S2", q.S2},
              {"S3", q.S3},
              {"EQ4", q.EQ4},
              {"trA4", q.trA4},
              {"lambda1", q.lambda1},
              {"influence", q.influence},
              {"offdiag2", q.offdiag2},
              {"diag2", q.diag2},
              {"total2", q.total2},
              {"row_fourth", q.row_fourth},
              {"row_fourth_over_trA4", q.trA4 > 0.0 ? q.row_fourth / q.trA4 : 0.0},
              {"gamma", q.gamma},
              {"alpha_n", q.alpha_n},
              {"beta_n", q.beta_n},
              {"has_diagonal", q.has_diagonal},
              {"degenerate", q.degenerate},
              {"sums",
               {{"diag4", s.diag4},     {"off4_upper", s.off4_upper}, {"star", s.star},
                {"cycle4", s.cycle4},   {"dd_path", s.dd_path},       {"tri_dbl", s.tri_dbl},
                {"dd2", s.dd2},         {"d_off", s.d_off},           {"disjoint", s.disjoint},
                {"dd_off2", s.dd_off2}, {"d_off3", s.d_off3},         {"d2_off2", s.d2_off2},
                {"d_path", s.d_path},   {"d_tri", s.d_tri},           {"mu3corr", s.mu3corr}}}};
}

// Empirical d_K of Q / sigma.
inline KDistReport qform_empirical(const SymMatrix& a, const Distribution& law, const QFormAnalysis& q,
                                   std::size_t samples, std::uint64_t seed, double delta) {
  const double sd = std::sqrt(q.sigma2);
  const double mu2 = q.m.mu[2];
  auto v = simulate(samples, seed, [&](Stream& rng) {
    thread_local std::vector<double> x;
    return qform_sample(a, law, mu2, rng, x) / sd;
  });
  KDistReport r = empirical_kdist(std::move(v), delta);
  r.seed = seed;
  return r;
}

// Named matrix families for sweeps.
//   pm1_zero_diagonal: a_ij = +-1/sqrt(n) (i < j, random signs), a_ii = 0
//   cycle: adjacency of the n-cycle scaled by 1/sqrt(2n)
inline SymMatrix qform_family(const std::string& family, int n, std::uint64_t seed) {
  if (n < 2) throw InputError("matrix families need n >= 2");
  SymMatrix a(n);
  if (family == "pm1_zero_diagonal") {
    Stream rng(derive_seed(seed, 0x4D41545249ULL), static_cast<std::uint64_t>(n));
    const double s = 1.0 / std::sqrt(static_cast<double>(n));
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) a.set(i, j, (rng() >> 63) ? s : -s);
  } else if (family == "cycle") {
    const double s = 1.0 / std::sqrt(2.0 * n);
    for (int i = 0; i < n; ++i) a.set(i, (i + 1) % n, s);
  } else {
    throw InputError("unknown matrix family '" + family + "' (pm1_zero_diagonal, cycle)");
  }
  return a;
}

inline Json qform_report(const SymMatrix& a, const Distribution& law, const ExperimentConfig& c) {
  const QFormAnalysis q = analyze(a, moments(law));
  require_nondegenerate(q);
  Json r = report_header(c);
  r["law"] = distribution_to_json(law);
  r["analysis"] = qform_analysis_json(q);
  r["constant"] = constant_entry(c);
  r["rates"] = Json::array({rate_entry("r1", bound_r1(q), c), rate_entry("r2", bound_r2(q), c),
                            rate_entry("gt", rate_gt(q), c)});
  const DeJong dj = dejong_check(q);
  r["dejong"] = {{"fourth_gap", dj.fourth_gap}, {"influence_ratio", dj.influence_ratio},
                 {"trace_ratio", dj.trace_ratio}};
  const TraceChain tc = trace_chain(q);
  r["trace_chain"] = {{"sqrt_tr4", tc.sqrt_tr4},
                      {"lambda_frob", tc.lambda_frob},
                      {"lambda_sigma", tc.lambda_sigma},
                      {"tr4_cap", tc.tr4_cap},
                      {"trace_le_lambda", tc.trace_le_lambda},
                      {"lambda_le_sigma", tc.lambda_le_sigma},
                      {"influence_le_trace", tc.influence_le_trace},
                      {"trace_le_sigma", tc.trace_le_sigma}};
  if (c.samples > 0) r["empirical"] = kdist_to_json(qform_empirical(a, law, q, c.samples, c.seed, c.delta));
  return r;
}

inline const char* kQFormSweepHeader = "n,rate_r1,rate_r2,dk_emp,dkw";

// Sweep config: {"family":..., "n":[...], "law":{...}, "samples":N, "seed":S, "delta":d}.
inline std::string qform_sweep(const Json& cfg) {
  const std::string family = cfg.value("family", std::string("pm1_zero_diagonal"));
  const Distribution law = cfg.contains("law") ? distribution_from_json(cfg.at("law")) : Distribution::rademacher();
  const std::size_t samples = cfg.value("samples", std::size_t{0});
  const std::uint64_t seed = cfg.value("seed", std::uint64_t{1});
  const double delta = cfg.value("delta", 0.01);
  require_samples(samples);
  std::ostringstream out;
  out << kQFormSweepHeader << "\n";
  for (const auto& nj : cfg.value("n", Json::array())) {
    const int n = detail::integer(nj, "sweep n");
    const SymMatrix a = qform_family(family, n, seed);
    const QFormAnalysis q = analyze(a, moments(law));
    require_nondegenerate(q);
    double dk = NAN, dkw = NAN;
    if (samples > 0) {
      const KDistReport e = qform_empirical(a, law, q, samples, derive_seed(seed, n), delta);
      dk = e.value;
      dkw = e.dkw_radius;
    }
    out << n << "," << format_double(bound_r1(q)) << "," << format_double(bound_r2(q)) << ","
        << format_double(dk) << "," << format_double(dkw) << "\n";
  }
  return out.str();
}

inline RunResult run_qform(const ExperimentConfig& c) {
  require_samples(c.samples);
  RunResult res;
  if (!c.sweep.empty()) {
    res.text = qform_sweep(load_json_file(c.sweep));
    return res;
  }
  if (c.matrix.empty()) throw InputError("qform needs --matrix or --sweep");
  res.text = qform_report(load_matrix_csv(c.matrix), load_law(c.law), c).dump(2) + "\n";
  return res;
}

// ---------------------------------------------------------------------------
// Chaos identities

struct ChaosScenario {
  int n = 4;
  Distribution law = Distribution::finite({{-1.0, 0.25}, {0.0, 0.5}, {1.0, 0.25}});
  int kernels = 50;
  int max_order = 3;
};

inline ChaosScenario scenario_from_json(const Json& j) {
  ChaosScenario s;
  if (j.contains("n")) s.n = detail::integer(j.at("n"), "scenario n");
  if (j.contains("law")) s.law = distribution_from_json(j.at("law"));
  if (j.contains("kernels")) s.kernels = detail::integer(j.at("kernels"), "scenario kernels");
  if (j.contains("max_order")) s.max_order = detail::integer(j.at("max_order"), "scenario max_order");
  if (s.n < 1 || s.n > 6) throw InputError("chaos scenarios support 1..6 coordinates");
  if (s.kernels < 1 || s.kernels > 10000) throw InputError("scenario kernel count must be in 1..10000");
  if (s.max_order < 1 || s.max_order > s.n) throw InputError("scenario max_order must be in 1..n");
  return s;
}

// Tolerance for the residual identities; bounds must hold with zero violations.
inline constexpr double kIdentityTolerance = 1e-10;

struct IdentityTally {
  std::string name;
  double worst = 0.0;  // largest residual, or largest ratio d_K / bound for bounds
  int checks = 0;
  int violations = 0;
  bool is_bound = false;

  void residual(double r) {
    ++checks;
    worst = std::max(worst, r);
    if (!(r <= kIdentityTolerance)) ++violations;
  }
  void bound(double lhs, double rhs) {
    ++checks;
    worst = std::max(worst, lhs / rhs);
    if (!(lhs <= rhs)) ++violations;
  }
  Json json() const {
    Json j{{"name", name}, {"checks", checks}, {"violations", violations}};
    j[is_bound ? "max_ratio" : "max_residual"] = worst;
    if (!is_bound) j["tolerance"] = kIdentityTolerance;
    j["pass"] = violations == 0;
    return j;
  }
};

inline double relative_gap(const RandomFunctional& a, const RandomFunctional& b) {
  return max_abs_diff(a.values(), b.values()) / std::max(1.0, a.max_abs());
}

inline RandomFunctional standardized(const RandomFunctional& x) {
  const RandomFunctional c = x - x.expectation();
  const double v = c.moment(2);
  if (!(v > 0.0)) throw DegenerateError("functional has zero variance");
  return c * (1.0 / std::sqrt(v));
}

inline RandomFunctional random_functional(const SpacePtr& space, Stream& rng) {
  RandomFunctional x(space);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = 2.0 * rng.uniform() - 1.0;
  return x;
}

inline RunResult run_chaos_verify(const ExperimentConfig& c) {
  const ChaosScenario sc = c.scenario.empty() ? ChaosScenario{} : scenario_from_json(load_json_file(c.scenario));
  const SpacePtr space = OutcomeSpace::iid(sc.law, sc.n);
  Stream rng(c.seed, 0);

  std::vector<ChaosKernel> kernels;
  std::string kernel_source = "random";
  if (!c.kernel.empty()) {
    kernels.push_back(kernel_from_json(load_json_file(c.kernel), space));
    kernel_source = c.kernel.substr(c.kernel.find_last_of('/') + 1);
  }
  for (int i = 0; static_cast<int>(kernels.size()) < sc.kernels; ++i) {
    kernels.push_back(random_kernel(space, 1 + i % sc.max_order, rng));
  }

  IdentityTally iso{"isometry"}, orth{"orthogonality"}, mult{"multiplication"}, recon{"chaos_expansion"},
      cov{"covariance"}, prod{"product_rule"};
  IdentityTally fourth{"fourth_moment_bound", 0, 0, 0, true}, master{"master_bound", 0, 0, 0, true},
      dki1{"single_chaos_first", 0, 0, 0, true}, dki2{"single_chaos_second", 0, 0, 0, true},
      degen{"degenerate_bound", 0, 0, 0, true};

  for (std::size_t i = 0; i < kernels.size(); ++i) {
    const ChaosKernel& f = kernels[i];
    const ChaosKernel& g = kernels[(i + 1) % kernels.size()];
    const RandomFunctional xf = integral(f), xg = integral(g);
    const double nf = factorial(f.order()) * f.norm2();
    iso.residual(std::abs(xf.moment(2) - nf) / std::max(1.0, nf));
    if (f.order() != g.order()) {
      orth.residual(std::abs((xf * xg).expectation()) / std::max(1.0, std::sqrt(xf.moment(2) * xg.moment(2))));
    }
    if (f.order() + g.order() <= 2 * sc.max_order) {
      mult.residual(relative_gap(xf * xg, multiply(f, g).reconstruct()));
    }

    const RandomFunctional x = random_functional(space, rng), y = random_functional(space, rng);
    recon.residual(relative_gap(x, decompose(x).reconstruct()));
    const RandomFunctional xc = x - x.expectation(), yc = y - y.expectation();
    for (double alpha : {0.0, 0.5, 1.0}) cov.residual(covariance_identity_check(xc, yc, alpha));
    prod.residual(product_rule_residual(x, y) / std::max(1.0, (x * y).max_abs()));

    const RandomFunctional z = standardized(x);
    const auto fb = fourth_moment_bound(z);
    fourth.bound(fb.fourth_moment, fb.rhs);
    master.bound(exact_kdist(z).value, master_bound(z).total);

    if (nf > 0.0 && f.is_canonical()) {
      const ChaosKernel fs = f.scaled(1.0 / std::sqrt(nf));
      const RandomFunctional w = integral(fs);
      const double dk = exact_kdist(w).value;
      const auto sb = single_chaos_bound(w, f.order());
      dki1.bound(dk, sb.first);
      dki2.bound(dk, sb.second);
      degen.bound(dk, rate_degenerate(project(w)).bound);
    }
  }

  RunResult res;
  Json r = report_header(c);
  r["scenario"] = {{"n", sc.n}, {"law", distribution_to_json(sc.law)}, {"kernels", sc.kernels},
                   {"max_order", sc.max_order}, {"kernel_source", kernel_source}};
  Json ids = Json::array();
  for (const IdentityTally* t : {&iso, &orth, &mult, &recon, &cov, &prod, &fourth, &master, &dki1, &dki2, &degen}) {
    ids.push_back(t->json());
    if (t->violations > 0) res.failures.push_back(t->name);
  }
  r["identities"] = ids;
  r["all_pass"] = res.failures.empty();
  res.exit_code = res.failures.empty() ? kExitOk : kExitIdentity;
  res.text = r.dump(2) + "\n";
  return res;
}

// ---------------------------------------------------------------------------
// Weighted degenerate U-statistics

inline RunResult run_ustat(const ExperimentConfig& c) {
  require_samples(c.samples);
  if (c.weights.empty()) throw InputError("ustat needs --weights");
  const WeightTensor w = weights_from_json(load_json_file(c.weights));
  const Distribution law = load_law(c.law);
  const bool default_kernel = c.kernel.empty();
  const UKernel g = default_kernel ? UKernel::identity_product(law, w.d())
                                   : ukernel_from_json(load_json_file(c.kernel), law);
  const UStatRate rate = ustat_rate(w, g);
  const double var = ustat_variance(w, g);

  Json r = report_header(c);
  r["law"] = distribution_to_json(law);
  r["weights"] = {{"n", w.n()}, {"order", w.d()}, {"nonzero", w.values().size()},
                  {"subset_square_sum", w.subset_square_sum()}};
  r["kernel"] = default_kernel ? Json("product of coordinates") : Json(c.kernel.substr(c.kernel.find_last_of('/') + 1));
  r["variance"] = var;
  r["constant"] = constant_entry(c);
  r["norm_ratio"] = rate.norm_ratio;
  r["weight_terms"] = rate.weight_terms;
  r["rates"] = Json::array({rate_entry("ustat", rate.rate, c)});
  if (w.d() == 2 && default_kernel) {
    // The same statistic read as a quadratic form with a_ij = w_ij.
    std::vector<std::vector<double>> rows(w.n(), std::vector<double>(w.n(), 0.0));
    for (const auto& [s, v] : w.values()) {
      const auto ij = subset_members(s);
      rows[ij[0]][ij[1]] = rows[ij[1]][ij[0]] = v;
    }
    const QFormAnalysis q = analyze(SymMatrix::from_rows(rows), moments(law));
    require_nondegenerate(q);
    const double r2 = bound_r2(q);
    r["qform_cross_check"] = {{"qform_r2", r2}, {"ustat_rate", rate.rate},
                              {"ratio", rate.rate / r2}, {"expected_ratio", 2.0}};
  }
  if (c.samples > 0) {
    const double sd = std::sqrt(var);
    auto v = simulate(c.samples, c.seed, [&](Stream& rng) { return ustat_sample(w, g, rng) / sd; });
    KDistReport e = empirical_kdist(std::move(v), c.delta);
    e.seed = c.seed;
    r["empirical"] = kdist_to_json(e);
  }
  RunResult res;
  res.text = r.dump(2) + "\n";
  return res;
}

// ---------------------------------------------------------------------------
// Random graph weights

inline CopyWeight parse_convention(const std::string& s) {
  if (s == "product") return CopyWeight::kProduct;
  if (s == "sum") return CopyWeight::kSum;
  throw InputError("copy weight convention must be 'product' or 'sum'");
}

struct GraphPoint {
  RgRate rate;
  PilotMoments pilot;
  KDistReport empirical;
  bool has_empirical = false;
};

// Rate and, when samples > 0, the empirical d_K of W standardised by a pilot
// run; pilot and main run use separate derived seeds.
inline GraphPoint graph_point(const GraphTemplate& g, int n, double p, const Distribution& law,
                              std::size_t samples, std::size_t pilot, std::uint64_t seed, double delta,
                              CopyWeight conv) {
  GraphPoint out;
  out.rate = rg_rate(g, n, p, law);
  if (samples == 0) return out;
  if (pilot < 100000) throw InputError("the standardising pilot run needs at least 100000 samples");
  out.pilot = pilot_moments(g, n, p, law, derive_seed(seed, 1), pilot, conv);
  auto v = simulate(samples, derive_seed(seed, 2), [&](Stream& rng) { return simulate_weight(g, n, p, law, rng, conv); });
  out.empirical = empirical_kdist(standardize(std::move(v), out.pilot), delta);
  out.empirical.seed = derive_seed(seed, 2);
  out.has_empirical = true;
  return out;
}

inline const char* kGraphSweepHeader = "n,p,rg_rate,min_scale,dk_emp,dkw,pilot_mean,pilot_var";

// Sweep config: {"n":[...], "p":[...], "law":{...}, "samples":N, "pilot":M,
// "seed":S, "delta":d, "graph":{...}}; the template defaults to a triangle.
inline std::string graph_sweep(const Json& cfg, const GraphTemplate* fallback, CopyWeight conv) {
  const GraphTemplate g = cfg.contains("graph") ? graph_from_json(cfg.at("graph"))
                                                : (fallback ? *fallback : GraphTemplate::triangle());
  const Distribution law = cfg.contains("law") ? distribution_from_json(cfg.at("law")) : Distribution::rademacher();
  const std::size_t samples = cfg.value("samples", std::size_t{0});
  const std::size_t pilot = cfg.value("pilot", std::size_t{100000});
  const std::uint64_t seed = cfg.value("seed", std::uint64_t{1});
  const double delta = cfg.value("delta", 0.01);
  require_samples(samples);
  std::ostringstream out;
  out << kGraphSweepHeader << "\n";
  std::uint64_t point = 0;
  for (const auto& nj : cfg.value("n", Json::array())) {
    for (const auto& pj : cfg.value("p", Json::array())) {
      const int n = detail::integer(nj, "sweep n");
      const double p = detail::number(pj, "sweep p");
      const GraphPoint gp = graph_point(g, n, p, law, samples, pilot, derive_seed(seed, point++), delta, conv);
      out << n << "," << format_double(p) << "," << format_double(gp.rate.rate) << ","
          << format_double(gp.rate.scale.value) << ","
          << format_double(gp.has_empirical ? gp.empirical.value : NAN) << ","
          << format_double(gp.has_empirical ? gp.empirical.dkw_radius : NAN) << ","
          << format_double(gp.has_empirical ? gp.pilot.mean : NAN) << ","
          << format_double(gp.has_empirical ? gp.pilot.variance : NAN) << "\n";
    }
  }
  return out.str();
}

inline RunResult run_graph(const ExperimentConfig& c) {
  require_samples(c.samples);
  const CopyWeight conv = parse_convention(c.convention);
  RunResult res;
  std::optional<GraphTemplate> g;
  if (!c.graph.empty()) g = graph_from_json(load_json_file(c.graph));
  if (!c.sweep.empty()) {
    res.text = graph_sweep(load_json_file(c.sweep), g ? &*g : nullptr, conv);
    return res;
  }
  if (!g) throw InputError("graph needs --graph or --sweep");
  if (c.host_size < 1) throw InputError("graph needs --host-size n >= 1");
  const Distribution law = load_law(c.law);
  const GraphPoint gp = graph_point(*g, c.host_size, c.retention, law, c.samples, c.pilot, c.seed, c.delta, conv);

  Json r = report_header(c);
  r["graph"] = graph_to_json(*g);
  r["template"] = GraphTemplate::kind_name(g->kind());
  r["host_size"] = c.host_size;
  r["retention"] = c.retention;
  r["copy_weight"] = copy_weight_name(conv);
  r["law"] = distribution_to_json(law);
  r["moments"] = {{"mean", gp.rate.mean}, {"variance", gp.rate.variance}, {"central4", gp.rate.central4}};
  r["min_subgraph_scale"] = {{"value", gp.rate.scale.value}, {"v_h", gp.rate.scale.v_h},
                             {"e_h", gp.rate.scale.e_h}, {"edge_mask", gp.rate.scale.minimizer}};
  r["constant"] = constant_entry(c);
  r["rates"] = Json::array({rate_entry("rg", gp.rate.rate, c)});
  if (gp.has_empirical) {
    r["pilot"] = {{"mean", gp.pilot.mean}, {"variance", gp.pilot.variance},
                  {"samples", gp.pilot.samples}, {"seed", gp.pilot.seed}};
    r["empirical"] = kdist_to_json(gp.empirical);
  }
  res.text = r.dump(2) + "\n";
  return res;
}

}  // namespace bekit
