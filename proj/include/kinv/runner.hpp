#pragma once

#include <optional>
#include <string>

#include "kinv/config.hpp"

namespace kinv {

/// CSV outputs of one run, produced in memory so callers can compare bytes.
struct RunArtifacts {
  std::string trace_csv;                 // one row per iteration (or MC summary)
  std::optional<std::string> state_csv;  // final mean and per-coordinate std
};

/// Executes the configured run and returns its CSV artifacts.
RunArtifacts execute(const RunConfig& cfg);

/// Executes and writes artifacts to cfg.output ("-" = stdout) and
/// cfg.state_output when set.
void run(const RunConfig& cfg);

struct CompareReport {
  std::string text;
  bool tolerance_breached = false;
};

/// Per-iteration deltas and final-value comparison of two run CSVs sharing a
/// header schema. With a tolerance: on traces the final rel_l2_error values
/// must agree within a factor of tol; otherwise final absolute deltas
/// (excluding wall_ms) must stay below tol.
CompareReport compare_runs(const std::string& path_a, const std::string& path_b,
                           std::optional<double> tol = std::nullopt);

}  // namespace kinv
