#pragma once

#include <cstddef>
#include <span>

#include "smem/linalg.hpp"
#include "smem/trace.hpp"

namespace smem {

enum class PenaltyShape { AbsPow, AlphaL1, L1Pareto, Huber, LogCosh, DoublePareto };

/// Scalar penalty φ.  `param` is p for AbsPow, α for AlphaL1, L1Pareto,
/// Huber and LogCosh, and a for DoublePareto; `param2` is γ for DoublePareto.
struct ScalarPenalty {
  PenaltyShape shape = PenaltyShape::AbsPow;
  double param = 1.0;
  double param2 = 0.0;

  static ScalarPenalty abs_pow(double p);
  static ScalarPenalty alpha_l1(double alpha);
  static ScalarPenalty l1_pareto(double alpha);
  static ScalarPenalty huber(double alpha);
  static ScalarPenalty log_cosh(double alpha);
  static ScalarPenalty double_pareto(double a, double gamma);

  double value(double x) const;
  // φ′(x); 0 at the kink of nonsmooth penalties.
  double derivative(double x) const;
};

/// arg min_z ½(y − z)² + lam·|z|^p for p ∈ {1, 3/2, 2, 3}.
double prox_lp(double y, double lam, double p);

/// Same problem for 0 < p < 1, where the objective is nonconvex: the interior
/// stationary point (Newton, safeguarded by bisection) competes with z = 0.
double prox_lp_subunit(double y, double lam, double p);

// sgn(u)/2·(|u| − a + √((a − |u|)² + 4(a|u| − γ)₊)).
double prox_double_pareto(double u, double a, double gam);

/// arg min_z φ(z) + (z − x)²/(2γ).  Closed forms where available, otherwise
/// golden-section search between 0 and x.
double prox_scalar(const ScalarPenalty& penalty, double gam, double x);

// inf_z φ(z) + (z − x)²/(2γ).
double moreau_envelope(const ScalarPenalty& penalty, double gam, double x);

enum class HqForm { GR, GY };

/// Minimizer ŝ of the Geman–Reynolds (scale) or Geman–Yang (location)
/// half-quadratic envelope.  Throws UnsupportedPair for pairs the envelope
/// table leaves empty.
double hq_minimizer(HqForm form, const ScalarPenalty& penalty, double x);

struct NesterovSeq {
  Vector lambda;  // λ_0 … λ_{t_max+1}
  Vector gamma;   // γ_0 (unused, 0) … γ_{t_max}
};

NesterovSeq nesterov_seq(std::size_t t_max);

/// prox_{τφ/α}(β + α⁻¹Xᵀ(y − Xβ)) coordinatewise.
Vector ista_step(std::span<const double> beta, const DenseMatrix& x, std::span<const double> y, double alpha,
                 double tau, const ScalarPenalty& penalty);

// ½‖y − Xβ‖² + τ Σ φ(β_j).
double composite_objective(const DenseMatrix& x, std::span<const double> y, std::span<const double> beta, double tau,
                           const ScalarPenalty& penalty);

/// FISTA with step 1/L, L = λ_max(XᵀX), started at β = 0.  Record t holds
/// f(y_t); `iters` steps give records t = 1 … iters + 1.
RunTrace fista_run(const DenseMatrix& x, std::span<const double> y, double tau, const ScalarPenalty& penalty,
                   std::size_t iters);

enum class BregmanGenerator { Euclid, KL, ItakuraSaito };

double bregman_div(BregmanGenerator gen, double x, double y);

// λ_i = |β_i|.
Vector lasso_amgm_weight(std::span<const double> beta);

// Σ β_i²/(2λ_i) + λ_i/2, with 0/0 terms taken as 0.
double lasso_amgm_envelope(std::span<const double> beta, std::span<const double> lambda);

}  // namespace smem
