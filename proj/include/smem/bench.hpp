#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "smem/trace.hpp"

namespace smem {

struct AdamSettings {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  bool decoupled = false;
  friend bool operator==(const AdamSettings&, const AdamSettings&) = default;
};

struct MomentumSettings {
  double momentum = 0.9;
  std::string mode = "heavy_ball";  // or "nesterov"
  friend bool operator==(const MomentumSettings&, const MomentumSettings&) = default;
};

struct PrmSettings {
  double c = 0.5;
  std::size_t batch_size = 20;
  double momentum = 0.5;  // used by the PRM+Nesterov variant
  friend bool operator==(const PrmSettings&, const PrmSettings&) = default;
};

struct PathSettings {
  std::size_t count = 40;
  double lo = 1e-4;
  double hi = 1e1;
  std::size_t max_sweeps = 2000;
  double rel_tol = 1e-12;
  friend bool operator==(const PathSettings&, const PathSettings&) = default;
};

/// One benchmark run.  Every field except `experiment` has a default, and
/// experiment-specific defaults fill `presets` and `iterations` when absent.
struct ExperimentConfig {
  std::string experiment;
  std::vector<std::string> presets;
  std::optional<std::uint64_t> seed;  // overrides the preset's data seed
  std::optional<std::size_t> n;
  std::optional<std::size_t> p;
  std::optional<double> cond;
  std::optional<double> signal;
  std::size_t iterations = 80;
  double rho = 0.01;
  std::size_t batch_size = 256;
  std::uint64_t optimizer_seed = 1;
  AdamSettings adam;
  std::vector<double> lr_grid = {1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2};
  std::vector<double> sensitivity_lrs;
  MomentumSettings momentum;
  PrmSettings prm;
  PathSettings regpath;
  double lasso_tau = 1.0;
  std::vector<std::size_t> sample_obs = {0, 1, 2, 3, 4};
  std::vector<std::size_t> sample_coords = {0, 1, 2, 3, 4};
  std::optional<std::string> out;  // output directory; --out takes precedence

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

std::vector<std::string> experiment_names();

/// Parses and validates a JSON configuration.  Unknown keys, wrong types and
/// invalid values raise ParseError naming the field (and line, when known).
ExperimentConfig validate_config(const std::string& text);

ExperimentConfig default_config(const std::string& experiment);

// Serializes every field, defaults included.
std::string serialize_config(const ExperimentConfig& config);

struct SummaryRow {
  std::string method;
  double final_nll = 0.0;
  double accuracy = 0.0;
  double elapsed_s = 0.0;
  std::string meta;  // compact JSON object
};

struct NamedTrace {
  std::string file;  // trace_<label>.csv
  RunTrace trace;
};

struct ExperimentResult {
  std::vector<NamedTrace> traces;
  std::vector<SummaryRow> summary;
  std::vector<std::string> path_header;  // regpath only
  std::vector<std::vector<std::string>> path_rows;
};

ExperimentResult run_experiment(const ExperimentConfig& config, std::size_t threads = 1);

void write_trace_csv(std::ostream& out, const RunTrace& trace);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);

/// Writes the trace CSVs, summary.csv, path.csv (if any) and config.json.
void write_results(const ExperimentResult& result, const ExperimentConfig& config,
                   const std::filesystem::path& dir);

/// Runs tasks on up to `threads` workers; the first exception is rethrown.
void run_parallel(std::vector<std::function<void()>> tasks, std::size_t threads);

}  // namespace smem
