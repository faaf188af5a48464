#include "smem/selection.hpp"

#include <cmath>

#include "smem/errors.hpp"

namespace smem {

double gen_ridge_shrinkage(double d, double k) {
  if (!(d >= 0.0) || !(k >= 0.0)) throw DomainError("gen_ridge_shrinkage needs d >= 0 and k >= 0");
  const double d2 = d * d;
  if (d2 + k == 0.0) return 0.0;
  return d2 / (d2 + k);
}

double effective_dof(std::span<const double> eigs, double tau_w_sq) {
  if (!(tau_w_sq > 0.0)) throw DomainError("tau_w^2 must be positive");
  double total = 0.0;
  for (double l : eigs) {
    if (!(l >= 0.0)) throw DomainError("eigenvalues must be nonnegative");
    total += l / (l + tau_w_sq);
  }
  return total;
}

double effective_dof_from_hessian(const DenseMatrix& a, double tau_w_sq) {
  if (!(tau_w_sq > 0.0)) throw DomainError("tau_w^2 must be positive");
  return static_cast<double>(a.rows()) - tau_w_sq * Cholesky(a).trace_inverse();
}

double gcv_score(double residual_sq_norm, double gamma, std::size_t n) {
  if (n == 0) throw DomainError("gcv_score needs n >= 1");
  const double nn = static_cast<double>(n);
  if (!(gamma < nn)) throw DegenerateDof("effective degrees of freedom reach n");
  const double shrink = 1.0 - gamma / nn;
  return residual_sq_norm / nn / (shrink * shrink);
}

double log_evidence(double e_w, double e_d, double tau_w_sq, double tau_d_sq, const DenseMatrix& a) {
  return -tau_w_sq * e_w - tau_d_sq * e_d - 0.5 * Cholesky(a).log_det();
}

std::size_t gcv_argmin(std::span<const double> scores, std::span<const double> penalties) {
  if (scores.empty() || scores.size() != penalties.size()) throw InvalidShape("gcv_argmin: bad lengths");
  std::size_t best = 0;
  for (std::size_t k = 1; k < scores.size(); ++k) {
    if (scores[k] < scores[best] || (scores[k] == scores[best] && penalties[k] > penalties[best])) best = k;
  }
  return best;
}

RidgeDiagnostics ridge_diagnostics(const Dataset& data, double rho, std::span<const double> beta) {
  const MixtureSpec spec = MixtureSpec::logistic_ridge(rho);
  SmemState state;
  state.beta.assign(beta.begin(), beta.end());
  const EStepResult es = estep(state, data, spec);
  const GramCache cache = gram_build(data.x);
  const Vector prior(data.p(), rho);
  const DenseMatrix a = gram_assemble(cache, es.obs_weights, prior, full_active_set(data.p()));

  const Vector z = linear_predictor(data, beta);
  double rss = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double m = data.m.empty() ? 1.0 : data.m[i];
    const double r = data.y[i] - m / (1.0 + std::exp(-z[i]));
    rss += r * r;
  }
  RidgeDiagnostics out;
  out.dof = effective_dof_from_hessian(a, rho);
  out.gcv = gcv_score(rss, out.dof, data.n());
  const double e_w = 0.5 * dot(beta, beta);
  const double nll = objective(data, MixtureSpec::logistic_ridge(0.0), beta) * static_cast<double>(data.n());
  // The (p/2) log ρ term of the Gaussian prior normalizer varies with ρ, so it
  // is kept to make values comparable across a penalty grid.
  out.log_evidence = log_evidence(e_w, nll, rho, 1.0, a) + 0.5 * static_cast<double>(data.p()) * std::log(rho);
  return out;
}

}  // namespace smem
