#include "smem/prox.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "smem/errors.hpp"

namespace smem {

namespace {

double sign(double v) { return (v > 0.0) - (v < 0.0); }

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw DomainError(std::string(what) + " must be positive and finite");
}

double stable_log_cosh(double t) {
  const double a = std::abs(t);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

// Minimizes a unimodal function on [lo, hi].
template <class F>
double golden_section(F f, double lo, double hi) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  const double tol = 1e-13 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  double c = hi - r * (hi - lo);
  double d = lo + r * (hi - lo);
  double fc = f(c);
  double fd = f(d);
  for (int it = 0; it < 400 && hi - lo > tol; ++it) {
    if (fc <= fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - r * (hi - lo);
      fc = f(c);
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + r * (hi - lo);
      fd = f(d);
    }
  }
  const double mid = 0.5 * (lo + hi);
  // The endpoints can win for penalties with a kink at zero.
  double best = mid;
  double fbest = f(mid);
  for (double cand : {lo, hi}) {
    const double fv = f(cand);
    if (fv < fbest) {
      best = cand;
      fbest = fv;
    }
  }
  return best;
}

// Double-Pareto prox by direct comparison of z = 0 with the stationary points
// of ½(z − u)² + γ log(1 + z/a) on z > 0 (u ≥ 0).
double double_pareto_candidates(double u, double a, double gam) {
  const double au = std::abs(u);
  auto h = [&](double z) { return 0.5 * (z - au) * (z - au) + gam * std::log1p(z / a); };
  double best = 0.0;
  double fbest = h(0.0);
  const double b = a - au;
  const double disc = b * b - 4.0 * (gam - a * au);
  if (disc >= 0.0) {
    const double s = std::sqrt(disc);
    for (double z : {0.5 * (-b + s), 0.5 * (-b - s)}) {
      if (z > 0.0 && h(z) < fbest) {
        best = z;
        fbest = h(z);
      }
    }
  }
  return sign(u) * best;
}

}  // namespace

ScalarPenalty ScalarPenalty::abs_pow(double p) {
  require_positive(p, "exponent");
  return {PenaltyShape::AbsPow, p, 0.0};
}
ScalarPenalty ScalarPenalty::alpha_l1(double alpha) {
  require_positive(alpha, "alpha");
  return {PenaltyShape::AlphaL1, alpha, 0.0};
}
ScalarPenalty ScalarPenalty::l1_pareto(double alpha) {
  require_positive(alpha, "alpha");
  return {PenaltyShape::L1Pareto, alpha, 0.0};
}
ScalarPenalty ScalarPenalty::huber(double alpha) {
  require_positive(alpha, "alpha");
  return {PenaltyShape::Huber, alpha, 0.0};
}
ScalarPenalty ScalarPenalty::log_cosh(double alpha) {
  require_positive(alpha, "alpha");
  return {PenaltyShape::LogCosh, alpha, 0.0};
}
ScalarPenalty ScalarPenalty::double_pareto(double a, double gamma) {
  require_positive(a, "a");
  require_positive(gamma, "gamma");
  return {PenaltyShape::DoublePareto, a, gamma};
}

double ScalarPenalty::value(double x) const {
  const double ax = std::abs(x);
  switch (shape) {
    case PenaltyShape::AbsPow:
      return std::pow(ax, param);
    case PenaltyShape::AlphaL1:
      return std::sqrt(param + x * x);
    case PenaltyShape::L1Pareto:
      return ax / param - std::log1p(ax / param);
    case PenaltyShape::Huber:
      return ax <= param ? 0.5 * x * x : param * ax - 0.5 * param * param;
    case PenaltyShape::LogCosh:
      return stable_log_cosh(param * x);
    case PenaltyShape::DoublePareto:
      return param2 * std::log1p(ax / param);
  }
  throw DomainError("unknown penalty shape");
}

double ScalarPenalty::derivative(double x) const {
  const double ax = std::abs(x);
  switch (shape) {
    case PenaltyShape::AbsPow:
      return x == 0.0 ? 0.0 : param * std::pow(ax, param - 1.0) * sign(x);
    case PenaltyShape::AlphaL1:
      return x / std::sqrt(param + x * x);
    case PenaltyShape::L1Pareto:
      return x / (param * (param + ax));
    case PenaltyShape::Huber:
      return ax <= param ? x : param * sign(x);
    case PenaltyShape::LogCosh:
      return param * std::tanh(param * x);
    case PenaltyShape::DoublePareto:
      return param2 * sign(x) / (param + ax);
  }
  throw DomainError("unknown penalty shape");
}

double prox_lp(double y, double lam, double p) {
  require_positive(lam, "lambda");
  const double ay = std::abs(y);
  const double s = sign(y);
  if (p == 1.0) return s * std::max(ay - lam, 0.0);
  if (p == 1.5) {
    const double c = 9.0 * lam * lam / 8.0;
    return y + c * s * (1.0 - std::sqrt(1.0 + 16.0 * ay / (9.0 * lam * lam)));
  }
  if (p == 2.0) return y / (1.0 + 2.0 * lam);
  if (p == 3.0) return s * (std::sqrt(1.0 + 12.0 * lam * ay) - 1.0) / (6.0 * lam);
  throw UnsupportedExponent("prox_lp has closed forms for p in {1, 3/2, 2, 3} only");
}

double prox_lp_subunit(double y, double lam, double p) {
  require_positive(lam, "lambda");
  if (!(p > 0.0 && p < 1.0)) throw DomainError("prox_lp_subunit needs 0 < p < 1");
  const double u = std::abs(y);
  if (u == 0.0) return 0.0;
  auto h = [&](double z) { return 0.5 * (u - z) * (u - z) + lam * std::pow(z, p); };
  auto dh = [&](double z) { return z - u + lam * p * std::pow(z, p - 1.0); };
  auto d2h = [&](double z) { return 1.0 - lam * p * (1.0 - p) * std::pow(z, p - 2.0); };

  // h is convex to the right of its inflection point, where any nonzero
  // minimizer must lie.
  const double z_inf = std::pow(lam * p * (1.0 - p), 1.0 / (2.0 - p));
  if (z_inf >= u || dh(z_inf) > 0.0) return 0.0;
  double lo = z_inf;
  double hi = u;
  double z = u;
  for (int it = 0; it < 200; ++it) {
    const double g = dh(z);
    if (g > 0.0) hi = z; else lo = z;
    if (g == 0.0 || hi - lo <= 1e-15 * u) break;
    double next = z - g / d2h(z);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - z) <= 1e-16 * u) {
      z = next;
      break;
    }
    z = next;
  }
  return h(z) < h(0.0) ? sign(y) * z : 0.0;
}

double prox_double_pareto(double u, double a, double gam) {
  require_positive(a, "a");
  require_positive(gam, "gamma");
  const double au = std::abs(u);
  const double inner = (a - au) * (a - au) + 4.0 * std::max(a * au - gam, 0.0);
  return sign(u) * 0.5 * (au - a + std::sqrt(inner));
}

double prox_scalar(const ScalarPenalty& penalty, double gam, double x) {
  if (!(gam >= 0.0)) throw DomainError("prox scale must be nonnegative");
  if (gam == 0.0 || x == 0.0) return gam == 0.0 ? x : 0.0;
  const double par = penalty.param;
  switch (penalty.shape) {
    case PenaltyShape::AbsPow:
      if (par == 1.0 || par == 1.5 || par == 2.0 || par == 3.0) return prox_lp(x, gam, par);
      if (par < 1.0) return prox_lp_subunit(x, gam, par);
      break;
    case PenaltyShape::Huber:
      return std::abs(x) <= par * (1.0 + gam) ? x / (1.0 + gam) : x - gam * par * sign(x);
    case PenaltyShape::DoublePareto: {
      const double g = gam * penalty.param2;
      if (g <= par * par) return prox_double_pareto(x, par, g);
      return double_pareto_candidates(x, par, g);
    }
    default:
      break;
  }
  auto obj = [&](double z) { return penalty.value(z) + (z - x) * (z - x) / (2.0 * gam); };
  return golden_section(obj, std::min(0.0, x), std::max(0.0, x));
}

double moreau_envelope(const ScalarPenalty& penalty, double gam, double x) {
  require_positive(gam, "gamma");
  const double z = prox_scalar(penalty, gam, x);
  return penalty.value(z) + (z - x) * (z - x) / (2.0 * gam);
}

double hq_minimizer(HqForm form, const ScalarPenalty& penalty, double x) {
  const double par = penalty.param;
  const double ax = std::abs(x);
  switch (penalty.shape) {
    case PenaltyShape::AbsPow:
      if (!(par > 1.0 && par <= 2.0)) break;
      if (form == HqForm::GY) break;
      return par * std::pow(ax, par - 2.0);
    case PenaltyShape::AlphaL1:
      if (form == HqForm::GR) return 1.0 / std::sqrt(par + x * x);
      return x - x / std::sqrt(par + x * x);
    case PenaltyShape::L1Pareto:
      if (form == HqForm::GR) return 1.0 / (par * (par + ax));
      return x - x / (par * (par + ax));
    case PenaltyShape::Huber:
      if (form == HqForm::GY) break;
      return ax == 0.0 ? 1.0 : std::min(1.0, par / ax);
    case PenaltyShape::LogCosh:
      if (form == HqForm::GR) return x == 0.0 ? par * par : par * std::tanh(par * x) / x;
      return x - par * std::tanh(par * x);
    case PenaltyShape::DoublePareto:
      break;
  }
  throw UnsupportedPair("no half-quadratic minimizer is tabulated for this penalty and form");
}

NesterovSeq nesterov_seq(std::size_t t_max) {
  if (t_max == 0) throw DomainError("nesterov_seq needs t_max >= 1");
  NesterovSeq s;
  s.lambda.assign(t_max + 2, 0.0);
  s.gamma.assign(t_max + 1, 0.0);
  for (std::size_t k = 1; k < s.lambda.size(); ++k)
    s.lambda[k] = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * s.lambda[k - 1] * s.lambda[k - 1]));
  for (std::size_t k = 1; k <= t_max; ++k) s.gamma[k] = (1.0 - s.lambda[k]) / s.lambda[k + 1];
  return s;
}

Vector ista_step(std::span<const double> beta, const DenseMatrix& x, std::span<const double> y, double alpha,
                 double tau, const ScalarPenalty& penalty) {
  require_positive(alpha, "alpha");
  if (!(tau >= 0.0)) throw DomainError("tau must be nonnegative");
  if (beta.size() != x.cols() || y.size() != x.rows()) throw InvalidShape("ista_step: dimension mismatch");
  Vector r = matvec(x, beta);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = y[i] - r[i];
  const Vector g = matvec_transposed(x, r);
  Vector out(beta.size());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = prox_scalar(penalty, tau / alpha, beta[j] + g[j] / alpha);
  return out;
}

double composite_objective(const DenseMatrix& x, std::span<const double> y, std::span<const double> beta, double tau,
                           const ScalarPenalty& penalty) {
  const Vector z = matvec(x, beta);
  double f = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) f += 0.5 * (y[i] - z[i]) * (y[i] - z[i]);
  if (tau > 0.0)
    for (double b : beta) f += tau * penalty.value(b);
  return f;
}

RunTrace fista_run(const DenseMatrix& x, std::span<const double> y, double tau, const ScalarPenalty& penalty,
                   std::size_t iters) {
  if (iters == 0) throw DomainError("fista_run needs at least one iteration");
  const double lip = symmetric_eigenvalues(matmul(x.transpose(), x)).back();
  require_positive(lip, "largest eigenvalue of X^T X");
  const NesterovSeq seq = nesterov_seq(iters);

  RunTrace trace;
  trace.method = "fista";
  Vector xs(x.cols(), 0.0);
  Vector ys = xs;
  auto record = [&](std::size_t t) {
    TraceRecord r;
    r.iter = t;
    r.objective = composite_objective(x, y, ys, tau, penalty);
    r.active_size = x.cols();
    trace.records.push_back(r);
  };
  record(1);
  for (std::size_t s = 1; s <= iters; ++s) {
    Vector y_next = ista_step(xs, x, y, lip, tau, penalty);
    const double g = seq.gamma[s];
    for (std::size_t j = 0; j < xs.size(); ++j) xs[j] = (1.0 - g) * y_next[j] + g * ys[j];
    ys = std::move(y_next);
    record(s + 1);
  }
  trace.beta = ys;
  return trace;
}

double bregman_div(BregmanGenerator gen, double x, double y) {
  switch (gen) {
    case BregmanGenerator::Euclid:
      return 0.5 * (x - y) * (x - y);
    case BregmanGenerator::KL:
      if (!(x > 0.0 && y > 0.0)) throw DomainError("KL divergence needs positive arguments");
      return x * std::log(x / y) - x + y;
    case BregmanGenerator::ItakuraSaito:
      if (!(x > 0.0 && y > 0.0)) throw DomainError("Itakura-Saito divergence needs positive arguments");
      return x / y - std::log(x / y) - 1.0;
  }
  throw DomainError("unknown Bregman generator");
}

Vector lasso_amgm_weight(std::span<const double> beta) {
  Vector out(beta.size());
  for (std::size_t i = 0; i < beta.size(); ++i) out[i] = std::abs(beta[i]);
  return out;
}

double lasso_amgm_envelope(std::span<const double> beta, std::span<const double> lambda) {
  if (beta.size() != lambda.size()) throw InvalidShape("lasso_amgm_envelope: length mismatch");
  double total = 0.0;
  for (std::size_t i = 0; i < beta.size(); ++i) {
    if (lambda[i] == 0.0) {
      if (beta[i] != 0.0) return std::numeric_limits<double>::infinity();
      continue;
    }
    total += beta[i] * beta[i] / (2.0 * lambda[i]) + 0.5 * lambda[i];
  }
  return total;
}

}  // namespace smem
