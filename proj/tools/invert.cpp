// invert: derivative-free Kalman inversion benchmark runner.
//
//   invert --config <path> [--verify] [--out <path>]
//   invert compare <a.csv> <b.csv> [--tol <x>]
//
// Exit codes: 0 success (compare: within tolerance), 1 runtime/engine failure
// or tolerance breach, 2 configuration or format errors.
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "kinv/csv.hpp"
#include "kinv/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Derivative-free Kalman inversion benchmark runner"};
  app.require_subcommand(0, 1);

  std::string config_path;
  std::string out_path;
  bool verify = false;
  app.add_option("--config", config_path, "Run configuration file");
  app.add_option("--out", out_path, "Override the configured trace output path");
  app.add_flag("--verify", verify, "Enable per-iteration subspace assertions");

  CLI::App* compare = app.add_subcommand("compare", "Compare two run CSVs");
  std::string csv_a;
  std::string csv_b;
  std::optional<double> tol;
  compare->add_option("a", csv_a, "First CSV")->required();
  compare->add_option("b", csv_b, "Second CSV")->required();
  compare->add_option("--tol", tol,
                      "Tolerance: max ratio of final rel_l2_error values "
                      "(or max final delta for other schemas)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (compare->parsed()) {
      const kinv::CompareReport report = kinv::compare_runs(csv_a, csv_b, tol);
      std::cout << report.text;
      return report.tolerance_breached ? 1 : 0;
    }
    if (config_path.empty()) {
      std::cerr << "error: --config is required (or use the compare subcommand)\n";
      return 2;
    }
    kinv::RunConfig cfg = kinv::parse_config_file(config_path);
    if (verify) cfg.verify = true;
    if (!out_path.empty()) cfg.output = out_path;
    kinv::run(cfg);
    return 0;
  } catch (const kinv::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const kinv::FormatError& e) {
    std::cerr << "format error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
