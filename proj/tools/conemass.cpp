// conemass: run declarative experiments and print critical-exponent catalogs.
//
//   conemass run <config.json> [--out DIR] [--tolerance X] [--quiet]
//   conemass catalog --n N [--jmax J | --window W] [--lambdas L0,L1,...]
//                    [--delta D --beta B] [--out DIR]
//
// Exit codes: 0 success, 1 config error, 2 solver failure, 3 invariant violation.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "conemass/conemass.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitSolver = 2;
constexpr int kExitInvariant = 3;

int exit_code(conemass::ErrorKind kind) {
  switch (kind) {
    case conemass::ErrorKind::kConfig:
    case conemass::ErrorKind::kDomain:
      return kExitConfig;
    case conemass::ErrorKind::kSolver:
      return kExitSolver;
    case conemass::ErrorKind::kInvariant:
      return kExitInvariant;
  }
  return kExitSolver;
}

void write_outputs(const conemass::ExperimentOutput& out, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  conemass::require(!ec, conemass::ErrorKind::kConfig, "cannot create output directory " + dir);
  for (const auto& [name, contents] : out.files) {
    std::ofstream f(std::filesystem::path(dir) / name, std::ios::binary | std::ios::trunc);
    conemass::require(f.good(), conemass::ErrorKind::kConfig, "cannot write " + dir + "/" + name);
    f << contents;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mass and curvature experiments on asymptotically flat manifolds with a conical tip"};
  app.require_subcommand(1);

  std::string out_dir;
  bool quiet = false;
  app.add_option("--out", out_dir, "Output directory")->type_name("DIR");
  app.add_flag("--quiet", quiet, "Suppress the summary on standard output");

  auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
  std::string config_path;
  std::optional<double> tolerance;
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--tolerance", tolerance, "Override solver.residual_tolerance");
  run->add_option("--out", out_dir, "Output directory")->type_name("DIR");
  run->add_flag("--quiet", quiet, "Suppress the summary on standard output");

  auto* catalog = app.add_subcommand("catalog", "Critical-exponent catalog of a cross section");
  int n = 3;
  std::optional<int> jmax, window;
  std::vector<double> lambdas;
  std::optional<double> delta, beta;
  catalog->add_option("--n", n, "Dimension of the cone")->required();
  auto* jmax_opt = catalog->add_option("--jmax", jmax, "Largest mode index (inclusive)");
  catalog->add_option("--window", window, "Number of modes")->excludes(jmax_opt);
  catalog->add_option("--lambdas", lambdas, "Eigenvalue table instead of the round sphere")
      ->delimiter(',');
  catalog->add_option("--delta", delta, "Query criticality of this tip weight");
  catalog->add_option("--beta", beta, "Query criticality of this weight at infinity");
  catalog->add_option("--out", out_dir, "Output directory")->type_name("DIR");
  catalog->add_flag("--quiet", quiet, "Suppress output on standard output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (run->parsed()) {
      conemass::ExperimentConfig cfg = conemass::load_config(config_path);
      if (tolerance) {
        conemass::require(*tolerance > 0.0, conemass::ErrorKind::kConfig, "'--tolerance' must be positive");
        cfg.solver.residual_tolerance = *tolerance;
      }
      if (!out_dir.empty()) cfg.output_directory = out_dir;
      const auto out = conemass::run_experiment(cfg);
      write_outputs(out, cfg.output_directory);
      if (!quiet) std::cout << out.summary;
      if (!out.all_pass()) {
        for (const auto& c : out.checks)
          if (!c.pass) std::cerr << "invariant check failed: " << c.name << "\n";
        return kExitInvariant;
      }
      return 0;
    }

    conemass::ExperimentConfig cfg;
    cfg.experiment = "catalog";
    cfg.metric.n = n;
    conemass::require(n >= 3, conemass::ErrorKind::kConfig, "'--n' must be >= 3");
    if (jmax) cfg.spectrum.jmax = *jmax;
    if (window) cfg.spectrum.jmax = *window - 1;
    conemass::require(cfg.spectrum.jmax >= 0, conemass::ErrorKind::kConfig,
                      "'--jmax' must be >= 0 and '--window' >= 1");
    for (double l : lambdas) cfg.spectrum.table.push_back({l, 1});
    if (!lambdas.empty()) cfg.spectrum.builtin.clear();
    const auto out = conemass::run_experiment(cfg);
    if (!out_dir.empty()) write_outputs(out, out_dir);
    if (!quiet) std::cout << out.files.at("catalog.csv");
    if (delta || beta) {
      const auto s = conemass::build_spectrum(cfg.spectrum, n);
      const auto c = conemass::is_critical(delta.value_or(0.5), beta.value_or(0.5), s, cfg.spectrum.jmax);
      if (delta) std::cerr << "delta " << *delta << (c.cone ? " is" : " is not") << " critical at the tip\n";
      if (beta) std::cerr << "beta " << *beta << (c.infinity ? " is" : " is not") << " critical at infinity\n";
      if (!c.certified) std::cerr << "warning: " << c.warning << "\n";
    }
    return 0;
  } catch (const conemass::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSolver;
  }
}
