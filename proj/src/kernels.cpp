#include "smem/kernels.hpp"

#include <cmath>

#include "smem/errors.hpp"

namespace smem {

namespace {

double sign(double v) { return (v > 0.0) - (v < 0.0); }

double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be positive and finite");
}

}  // namespace

LossFamily LossFamily::check(double q) {
  if (!(q > 0.0 && q < 1.0)) throw DomainError("check loss quantile must lie in (0, 1)");
  return {LossKind::Check, q};
}

PenaltyFamily PenaltyFamily::ridge(double tau) {
  require_positive(tau, "tau");
  return {PenaltyKind::Ridge, tau, 1.0, 1.0};
}

PenaltyFamily PenaltyFamily::lasso(double tau) {
  require_positive(tau, "tau");
  return {PenaltyKind::Lasso, tau, 1.0, 1.0};
}

PenaltyFamily PenaltyFamily::double_pareto(double a, double gamma, double tau) {
  require_positive(tau, "tau");
  require_positive(a, "a");
  require_positive(gamma, "gamma");
  return {PenaltyKind::DoublePareto, tau, a, gamma};
}

WeightKernelParams kernel_params(const LossFamily& loss) {
  switch (loss.kind) {
    case LossKind::Logistic:
      return {0.0, -0.5, 1.0, 0.0, 0.0};
    case LossKind::Squared:
      return {0.0, 0.0, 1.0, 0.0, 0.0};
    case LossKind::Check:
      return {0.0, 1.0 - 2.0 * loss.q, std::sqrt(2.0), 0.0, 0.0};
    case LossKind::Hinge:
      return {0.0, -1.0, std::sqrt(2.0), 0.0, 0.0};
  }
  throw DomainError("unknown loss kind");
}

ValueGrad loss_value_grad(const LossFamily& family, double z, double m) {
  switch (family.kind) {
    case LossKind::Logistic:
      return {m * softplus(z), m * logistic(z)};
    case LossKind::Squared:
      return {0.5 * z * z, z};
    case LossKind::Check: {
      const double value = 0.5 * std::abs(z) + (family.q - 0.5) * z;
      const double grad = z == 0.0 ? family.q - 0.5 : 0.5 * sign(z) + (family.q - 0.5);
      return {value, grad};
    }
    case LossKind::Hinge: {
      const double grad = z > 0.0 ? 1.0 : (z < 0.0 ? 0.0 : 0.5);
      return {std::max(z, 0.0), grad};
    }
  }
  throw DomainError("unknown loss kind");
}

double obs_weight(const LossFamily& family, double z, double m, double clamp_eps) {
  switch (family.kind) {
    case LossKind::Logistic: {
      const double az = std::abs(z);
      if (az < 1e-4) return m * (0.25 - z * z / 48.0);
      return m * std::tanh(0.5 * az) / (2.0 * az);
    }
    case LossKind::Squared:
      return 1.0;
    case LossKind::Check:
    case LossKind::Hinge:
      return 1.0 / std::max(std::abs(z), clamp_eps);
  }
  throw DomainError("unknown loss kind");
}

ValueGrad penalty_value_grad(const PenaltyFamily& family, double beta) {
  const double ab = std::abs(beta);
  switch (family.kind) {
    case PenaltyKind::Ridge:
      return {0.5 * beta * beta, beta};
    case PenaltyKind::Lasso:
      return {ab, sign(beta)};
    case PenaltyKind::DoublePareto:
      return {family.gamma * std::log1p(ab / family.a), family.gamma * sign(beta) / (family.a + ab)};
  }
  throw DomainError("unknown penalty kind");
}

double param_weight(const PenaltyFamily& family, double beta, double zero_tol) {
  const double tau2 = family.tau * family.tau;
  const double ab = std::abs(beta);
  switch (family.kind) {
    case PenaltyKind::Ridge:
      return tau2;
    case PenaltyKind::Lasso:
      return ab < zero_tol ? kPrunedWeight : tau2 / ab;
    case PenaltyKind::DoublePareto:
      return ab < zero_tol ? kPrunedWeight : family.gamma * tau2 / ((family.a + ab) * ab);
  }
  throw DomainError("unknown penalty kind");
}

}  // namespace smem
