#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "smem/dataset.hpp"
#include "smem/engine.hpp"
#include "smem/linalg.hpp"
#include "smem/trace.hpp"

namespace smem {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  bool decoupled = false;  // AdamW

  void validate() const;
};

enum class MomentumMode { HeavyBall, Nesterov };

struct MomentumConfig {
  double lr = 1e-2;
  double momentum = 0.9;
  MomentumMode mode = MomentumMode::HeavyBall;

  void validate() const;
};

/// Proximal Robbins–Monro with α_t = c/√(1 + t), where t counts steps in
/// units of `schedule_stride`.  A positive `momentum` adds a Nesterov
/// lookahead before each implicit step.
struct PrmConfig {
  double c = 0.5;
  std::size_t batch_size = 20;
  double momentum = 0.0;
  std::size_t schedule_stride = 1;

  double step_size(std::size_t t) const;
  void validate() const;
};

struct OptState {
  Vector theta;
  Vector m;
  Vector v;
  Vector theta_prev;
  std::size_t t = 0;

  static OptState zeros(std::size_t p);
};

using GradFn = std::function<Vector(std::span<const double>)>;

struct GradHess {
  Vector grad;
  DenseMatrix hess;
};
using GradHessFn = std::function<GradHess(std::span<const double>)>;

OptState adam_step(OptState state, std::span<const double> g, const AdamConfig& cfg);
OptState momentum_step(OptState state, const GradFn& grad_fn, const MomentumConfig& cfg);

/// θ⁺ = v − α_t (I + α_t H(v))⁻¹ ∇ℓ(v) with v = θ + μ(θ − θ_prev).
OptState prm_step(OptState state, const GradHessFn& oracle, const PrmConfig& cfg);

using OptimizerConfig = std::variant<AdamConfig, MomentumConfig, PrmConfig>;

struct BaselineOptions {
  std::size_t epochs = 80;
  std::size_t batch_size = 256;  // ignored for PRM, which carries its own
  std::uint64_t seed = 0;
  std::vector<std::size_t> sample_coords;  // Adam: v_j; others: θ_j
};

/// Mini-batch optimization of the logistic ridge objective on the mean
/// scale: batch-mean loss plus ρβ²/(2n).  One record per epoch, evaluated on
/// the full data.
RunTrace run_baseline(const Dataset& data, const MixtureSpec& spec, const OptimizerConfig& cfg,
                      const BaselineOptions& options);

std::string method_name(const OptimizerConfig& cfg);

}  // namespace smem
