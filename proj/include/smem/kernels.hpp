#pragma once

#include <limits>

namespace smem {

enum class LossKind { Logistic, Squared, Check, Hinge };

/// Observation loss f.  Logistic and Hinge are classification losses in the
/// linear predictor z = xᵀβ; Squared and Check act on the residual y − xᵀβ.
struct LossFamily {
  LossKind kind = LossKind::Logistic;
  double q = 0.5;  // quantile level, Check only

  static LossFamily logistic() { return {LossKind::Logistic, 0.5}; }
  static LossFamily squared() { return {LossKind::Squared, 0.5}; }
  static LossFamily check(double q);
  static LossFamily hinge() { return {LossKind::Hinge, 0.5}; }

  bool is_classification() const { return kind == LossKind::Logistic || kind == LossKind::Hinge; }
};

enum class PenaltyKind { Ridge, Lasso, DoublePareto };

struct PenaltyFamily {
  PenaltyKind kind = PenaltyKind::Ridge;
  double tau = 1.0;
  double a = 1.0;      // DoublePareto scale
  double gamma = 1.0;  // DoublePareto shape

  static PenaltyFamily ridge(double tau = 1.0);
  static PenaltyFamily lasso(double tau = 1.0);
  static PenaltyFamily double_pareto(double a, double gamma, double tau = 1.0);
};

/// Location, asymmetry and scale of the variance-mean mixtures behind the
/// loss (z) and the penalty (β).
struct WeightKernelParams {
  double mu_z = 0.0;
  double kappa_z = 0.0;
  double sigma = 1.0;
  double mu_beta = 0.0;
  double kappa_beta = 0.0;
};

// Mixture parameters under which obs_weight satisfies
// (z − μ_z)·ω = κ_z + σ² f′(z) for the given loss.
WeightKernelParams kernel_params(const LossFamily& loss);

struct ValueGrad {
  double value;
  double grad;
};

// Returned by param_weight for coordinates that leave the active set.
inline constexpr double kPrunedWeight = std::numeric_limits<double>::infinity();

inline constexpr double kDefaultClampEps = 1e-6;
inline constexpr double kDefaultZeroTol = 1e-8;

/// f(z) and f′(z).  Logistic is m·log(1 + eᶻ); Squared z²/2; Check
/// ½|z| + (q − ½)z; Hinge max(z, 0).  Kinks use the midpoint subgradient.
ValueGrad loss_value_grad(const LossFamily& family, double z, double m = 1.0);

/// Conditional mean of the observation latent scale (E-step weight).
///
/// Logistic: m·tanh(z/2)/(2z) (Pólya–Gamma), switching to the Taylor value
/// m(1/4 − z²/48) for |z| < 1e-4.  Check and Hinge: 1/max(|r|, clamp_eps).
/// Squared: 1.
double obs_weight(const LossFamily& family, double z_or_residual, double m = 1.0,
                  double clamp_eps = kDefaultClampEps);

ValueGrad penalty_value_grad(const PenaltyFamily& family, double beta);

/// Adaptive weight decay λ̂ for one coefficient: τ² for Ridge, τ²/|β| for
/// Lasso, γτ²/((a + |β|)|β|) for DoublePareto.  Lasso and DoublePareto return
/// kPrunedWeight when |β| < zero_tol.
double param_weight(const PenaltyFamily& family, double beta, double zero_tol = kDefaultZeroTol);

}  // namespace smem
