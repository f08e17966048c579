// Command-line front end: qform, chaos-verify, ustat and graph experiments.
//
// Exit codes: 0 ok, 2 input error, 3 degenerate input, 4 identity failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "bekit/experiments.hpp"

namespace {

void add_common(CLI::App* sub, bekit::ExperimentConfig& cfg) {
  sub->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  sub->add_option("--samples", cfg.samples, "Monte Carlo samples (0 = analytic only, otherwise >= 100)")
      ->capture_default_str();
  sub->add_option("--delta", cfg.delta, "Confidence level of the DKW band")->capture_default_str();
  sub->add_option("--out", cfg.out, "Report path (default: standard output)");
  sub->add_option("--constant", cfg.constant,
                  "Absolute constant to multiply constant-free rates by; echoed in the report");
}

int write_output(const bekit::ExperimentConfig& cfg, const std::string& text) {
  if (cfg.out.empty()) {
    std::cout << text;
    return 0;
  }
  std::ofstream f(cfg.out, std::ios::binary);
  if (!f || !(f << text)) {
    std::cerr << "error: cannot write " << cfg.out << "\n";
    return bekit::kExitInput;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Berry-Esseen toolkit: rates, identities and Kolmogorov distances"};
  app.set_version_flag("--version", std::string(bekit::kVersion));
  app.require_subcommand(1);
  bekit::ExperimentConfig cfg;

  auto* qf = app.add_subcommand("qform", "Quadratic form analysis and rates");
  qf->add_option("--matrix", cfg.matrix, "Symmetric matrix CSV")->check(CLI::ExistingFile);
  qf->add_option("--law", cfg.law, "Coordinate law JSON")->check(CLI::ExistingFile);
  qf->add_option("--sweep", cfg.sweep, "Sweep config JSON (writes CSV)")->check(CLI::ExistingFile);
  add_common(qf, cfg);

  auto* cv = app.add_subcommand("chaos-verify", "Check the chaos identities and explicit bounds");
  cv->add_option("--scenario", cfg.scenario, "Scenario JSON (n, law, kernels, max_order)")
      ->check(CLI::ExistingFile);
  cv->add_option("--kernel", cfg.kernel, "Kernel JSON to include in the checks")->check(CLI::ExistingFile);
  add_common(cv, cfg);

  auto* us = app.add_subcommand("ustat", "Weighted degenerate U-statistic rate");
  us->add_option("--weights", cfg.weights, "Weight JSON")->check(CLI::ExistingFile);
  us->add_option("--law", cfg.law, "Coordinate law JSON")->check(CLI::ExistingFile);
  us->add_option("--kernel", cfg.kernel, "Kernel table JSON (default: product of coordinates)")
      ->check(CLI::ExistingFile);
  add_common(us, cfg);

  auto* gr = app.add_subcommand("graph", "Random graph weight rate and simulation");
  gr->add_option("--graph", cfg.graph, "Template graph JSON")->check(CLI::ExistingFile);
  gr->add_option("--law", cfg.law, "Edge weight law JSON")->check(CLI::ExistingFile);
  gr->add_option("--host-size", cfg.host_size, "Number of host vertices n");
  gr->add_option("--retention", cfg.retention, "Edge retention probability p");
  gr->add_option("--convention", cfg.convention, "Copy weight: product or sum")->capture_default_str();
  gr->add_option("--pilot", cfg.pilot, "Pilot samples for standardisation")->capture_default_str();
  gr->add_option("--sweep", cfg.sweep, "Sweep config JSON (writes CSV)")->check(CLI::ExistingFile);
  add_common(gr, cfg);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : bekit::kExitInput;
  }

  try {
    bekit::RunResult res;
    if (qf->parsed()) {
      cfg.command = "qform";
      res = bekit::run_qform(cfg);
    } else if (cv->parsed()) {
      cfg.command = "chaos-verify";
      res = bekit::run_chaos_verify(cfg);
    } else if (us->parsed()) {
      cfg.command = "ustat";
      res = bekit::run_ustat(cfg);
    } else {
      cfg.command = "graph";
      res = bekit::run_graph(cfg);
    }
    if (const int w = write_output(cfg, res.text); w != 0) return w;
    for (const auto& name : res.failures) std::cerr << "identity failure: " << name << "\n";
    return res.exit_code;
  } catch (const bekit::DegenerateError& e) {
    std::cerr << "degenerate input: " << e.what() << "\n";
    return bekit::kExitDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bekit::kExitInput;
  }
}
