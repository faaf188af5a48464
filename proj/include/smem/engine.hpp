#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "smem/dataset.hpp"
#include "smem/kernels.hpp"
#include "smem/linalg.hpp"
#include "smem/trace.hpp"

namespace smem {

/// Loss + penalty pair that fixes the E-step kernels and the M-step system.
///
/// For Ridge the penalty is ρβ²/2 with ρ = `rho` taken directly as the
/// effective prior precision.  For Lasso and DoublePareto the penalty is g(β)
/// and the M-step coefficient is τ⁻²λ̂ with λ̂ from param_weight.
struct MixtureSpec {
  LossFamily loss = LossFamily::logistic();
  PenaltyFamily penalty = PenaltyFamily::ridge();
  WeightKernelParams kernel = kernel_params(LossFamily::logistic());
  double rho = 0.01;
  double clamp_eps = kDefaultClampEps;
  double zero_tol = kDefaultZeroTol;

  static MixtureSpec make(LossFamily loss, PenaltyFamily penalty, double rho = 0.01);
  static MixtureSpec logistic_ridge(double rho) { return make(LossFamily::logistic(), PenaltyFamily::ridge(), rho); }
  static MixtureSpec logistic_lasso(double tau) { return make(LossFamily::logistic(), PenaltyFamily::lasso(tau), 0.0); }

  void validate() const;
};

struct StoppingRule {
  std::size_t max_iter = 100;
  double rel_obj_tol = 0.0;   // stop once |ΔF| ≤ tol·|F|
  double abs_grad_tol = 0.0;  // stop once ‖∇F‖∞ ≤ tol (F per observation)
};

struct SmemState {
  Vector beta;
  Vector obs_weights;
  Vector param_weights;
  ActiveSet active;
  std::size_t iter = 0;

  static SmemState initial(const Dataset& data, std::optional<Vector> beta0 = std::nullopt);
};

/// E-step output.  `rhs` is the per-observation right-hand side c with
/// M-step system (XᵀΩX + σ²D)β = Xᵀc; for Logistic it is κ_i = y_i − m_i/2.
struct EStepResult {
  Vector obs_weights;
  Vector param_weights;
  Vector rhs;
};

// Linear predictor Xβ.
Vector linear_predictor(const Dataset& data, std::span<const double> beta);

/// Penalized objective Σ f_i + Σ g(β_j), divided by n.
double objective(const Dataset& data, const MixtureSpec& spec, std::span<const double> beta);

/// Gradient of `objective` (subgradient 0 at kinks of the penalty).
Vector objective_gradient(const Dataset& data, const MixtureSpec& spec, std::span<const double> beta);

// Fraction of observations whose predicted class (xᵀβ > 0) matches y.
double accuracy(const Dataset& data, std::span<const double> beta);

EStepResult estep(const SmemState& state, const Dataset& data, const MixtureSpec& spec);

/// Diagonal prior precision σ²·(ρ or τ⁻²λ̂_j); +infinity marks pruned coordinates.
Vector prior_precisions(const MixtureSpec& spec, std::span<const double> param_weights);

/// Weighted least squares on the active set; inactive coordinates are zero.
Vector mstep(const EStepResult& weights, const GramCache& cache, const MixtureSpec& spec,
             const ActiveSet& active);

// 1/(ω̂ + τ⁻²λ̂).
double effective_step_size(double omega_hat, double lambda_hat, double tau);

struct RunOptions {
  std::optional<Vector> beta0;
  std::vector<std::size_t> sample_obs;  // record ω̂_i for these observations
};

RunTrace run_smem(const Dataset& data, const MixtureSpec& spec, const StoppingRule& stop,
                  const RunOptions& options = {});

/// SM-EM with Nesterov extrapolation: the E- and M-step run at the
/// extrapolated point and the objective is recorded at the main iterate.
RunTrace run_smem_nesterov(const Dataset& data, const MixtureSpec& spec, const StoppingRule& stop,
                           const RunOptions& options = {});

struct PathPoint {
  double penalty = 0.0;
  Vector beta;
  double objective = 0.0;
  double elapsed_s = 0.0;
  std::size_t sweeps = 0;
  bool converged = false;
};

/// Ridge regularization path with one shared weighted Gram matrix per sweep.
///
/// Every sweep evaluates each branch's weights ω_k, assembles XᵀΩ̄X once with
/// ω̄_i = max_k ω_k,i, and then gives each branch a single solve
/// β_k ← β_k − (XᵀΩ̄X + σ²ρ_k I)⁻¹ ∇F_k(β_k).  Because the Pólya–Gamma bound
/// stays a majorizer under any larger curvature, each branch keeps monotone
/// descent and the same fixed point as its own SM-EM fit.  With a single
/// penalty this reduces to run_smem exactly.
std::vector<PathPoint> reg_path(const Dataset& data, const MixtureSpec& spec_template,
                                std::span<const double> penalties, const StoppingRule& stop);

}  // namespace smem
