#pragma once

#include <cstddef>
#include <span>

#include "smem/dataset.hpp"
#include "smem/engine.hpp"
#include "smem/linalg.hpp"

namespace smem {

// d²/(d² + k).
double gen_ridge_shrinkage(double d, double k);

/// Σ_a λ_a/(λ_a + τ_w²) over the eigenvalues of B.
double effective_dof(std::span<const double> eigs, double tau_w_sq);

/// k − τ_w² tr(A⁻¹) with the trace taken from the Cholesky factor of A.
double effective_dof_from_hessian(const DenseMatrix& a, double tau_w_sq);

/// n⁻¹‖y − ŷ‖²/(1 − γ/n)².
double gcv_score(double residual_sq_norm, double gamma, std::size_t n);

/// −τ_w²E_W − τ_D²E_D − ½ log det A, without the additive constant.
double log_evidence(double e_w, double e_d, double tau_w_sq, double tau_d_sq, const DenseMatrix& a);

/// Index of the smallest score; ties go to the larger penalty.
std::size_t gcv_argmin(std::span<const double> scores, std::span<const double> penalties);

struct RidgeDiagnostics {
  double dof = 0.0;
  double gcv = 0.0;
  double log_evidence = 0.0;
};

/// Effective dof, GCV and log evidence of a converged logistic ridge fit,
/// using A = ρI + XᵀΩ̂X at β and the response residuals y − m·σ(xᵀβ).
RidgeDiagnostics ridge_diagnostics(const Dataset& data, double rho, std::span<const double> beta);

}  // namespace smem
