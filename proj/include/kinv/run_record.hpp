#pragma once

#include <limits>

namespace kinv {

/// Per-iteration metrics. Evaluation counts are cumulative over the run, so
/// they are monotone nondecreasing across records.
struct RunRecord {
  int iter = 0;
  double rel_l2_error = std::numeric_limits<double>::quiet_NaN();  // NaN without theta_ref
  double misfit_phi = 0.0;
  double wall_ms = 0.0;
  long evals_high = 0;
  long evals_reduced = 0;
};

/// Engine-level options shared by all run loops.
struct RunOptions {
  int threads = 1;      // batch-evaluation parallelism
  bool verify = false;  // per-iteration column-space / span assertions
  bool timing = true;   // record wall time (off: wall_ms = 0 for reproducible CSVs)
};

}  // namespace kinv
