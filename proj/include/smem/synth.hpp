#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "smem/dataset.hpp"
#include "smem/linalg.hpp"

namespace smem {

// Random streams used by the generators.
inline constexpr std::uint64_t kStreamDesignU = 1;
inline constexpr std::uint64_t kStreamDesignV = 2;
inline constexpr std::uint64_t kStreamBeta = 3;
inline constexpr std::uint64_t kStreamResponse = 4;
inline constexpr std::uint64_t kStreamSparsity = 5;

/// U·diag(d)·Vᵀ with Haar-like orthonormal U (n×p) and V (p×p) and
/// d_j = cond^(−j/(2(p−1))), so that cond(XᵀX) = cond exactly.
DenseMatrix gen_design_raw(std::size_t n, std::size_t p, double cond, std::uint64_t seed);

// Centers every column and scales it to unit population variance.
void standardize_columns(DenseMatrix& x);

/// gen_design_raw followed by standardize_columns.
DenseMatrix gen_design(std::size_t n, std::size_t p, double cond, std::uint64_t seed);

/// Standard-normal coefficients, a random `density` fraction kept nonzero,
/// rescaled so that ‖Xβ‖/√n = signal.
Vector gen_beta_true(const DenseMatrix& x, double signal, double density, std::uint64_t seed);

// y_i ~ Bernoulli(1/(1 + exp(−x_iᵀβ))).
Vector gen_logistic(const DenseMatrix& x, std::span<const double> beta_true, std::uint64_t seed);

struct PresetInfo {
  std::string name;
  std::size_t n = 0;
  std::size_t p = 0;
  double cond = 1.0;
  std::uint64_t seed = 0;
  double signal = 2.0;   // ‖Xβ*‖/√n
  double density = 1.0;  // fraction of nonzero β* coordinates
};

/// Names: conv50, cond500, nesterov450, regpath, activeset, highdim(p) or
/// highdim<p>.
PresetInfo preset_info(const std::string& name);
std::vector<std::string> preset_names();

Dataset make_dataset(const PresetInfo& info);
Dataset make_preset(const std::string& name, std::optional<std::uint64_t> seed = std::nullopt);

/// Writes X.csv, y.csv and meta.json into `dir`.
void write_dataset(const Dataset& data, const std::filesystem::path& dir);

/// Reads a dataset from the CSV pair; meta.json next to X.csv is used when
/// present.
Dataset read_dataset(const std::filesystem::path& x_csv, const std::filesystem::path& y_csv);

}  // namespace smem
