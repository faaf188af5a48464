#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "smem/linalg.hpp"

namespace smem {

struct TraceRecord {
  std::size_t iter = 0;
  double objective = 0.0;    // penalized objective divided by n
  double elapsed_s = 0.0;    // cumulative wall time since the run started
  std::size_t active_size = 0;
  double step_s = 0.0;       // wall time of the M-step (SM-EM) or epoch (baselines)
  std::vector<double> samples;
};

/// Per-iteration history of one optimizer run.
struct RunTrace {
  std::string method;
  std::vector<std::string> sample_labels;
  std::vector<TraceRecord> records;
  Vector beta;
  bool converged = false;

  double final_objective() const { return records.back().objective; }
  double total_seconds() const { return records.back().elapsed_s; }
};

}  // namespace smem
