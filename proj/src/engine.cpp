#include "smem/engine.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "smem/errors.hpp"

namespace smem {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

double trial_count(const Dataset& data, std::size_t i) { return data.m.empty() ? 1.0 : data.m[i]; }

double sigma2(const MixtureSpec& spec) { return spec.kernel.sigma * spec.kernel.sigma; }

// Loss value and derivative with respect to the linear predictor z.
ValueGrad observation_loss(const MixtureSpec& spec, double z, double y, double m) {
  switch (spec.loss.kind) {
    case LossKind::Logistic: {
      const ValueGrad f = loss_value_grad(spec.loss, z, m);
      return {f.value - y * z, f.grad - y};
    }
    case LossKind::Squared:
    case LossKind::Check: {
      const ValueGrad f = loss_value_grad(spec.loss, y - z);
      return {f.value, -f.grad};
    }
    case LossKind::Hinge: {
      const double s = 2.0 * y - 1.0;
      const ValueGrad f = loss_value_grad(spec.loss, 1.0 - s * z);
      return {f.value, -s * f.grad};
    }
  }
  throw DomainError("unknown loss kind");
}

double penalty_value(const MixtureSpec& spec, double b) {
  if (spec.penalty.kind == PenaltyKind::Ridge) return 0.5 * spec.rho * b * b;
  return penalty_value_grad(spec.penalty, b).value;
}

double penalty_grad(const MixtureSpec& spec, double b) {
  if (spec.penalty.kind == PenaltyKind::Ridge) return spec.rho * b;
  if (b == 0.0) return 0.0;
  return penalty_value_grad(spec.penalty, b).grad;
}

// Weights and right-hand side at linear predictor z.
void fill_obs_terms(const Dataset& data, const MixtureSpec& spec, std::span<const double> z, Vector& omega,
                    Vector& rhs) {
  const std::size_t n = data.n();
  omega.resize(n);
  rhs.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double m = trial_count(data, i);
    const double y = data.y[i];
    switch (spec.loss.kind) {
      case LossKind::Logistic:
        omega[i] = obs_weight(spec.loss, z[i], m, spec.clamp_eps);
        rhs[i] = y - 0.5 * m;
        break;
      case LossKind::Squared:
      case LossKind::Check:
        omega[i] = obs_weight(spec.loss, y - z[i], m, spec.clamp_eps);
        rhs[i] = omega[i] * y - spec.kernel.kappa_z;
        break;
      case LossKind::Hinge: {
        const double s = 2.0 * y - 1.0;
        omega[i] = obs_weight(spec.loss, 1.0 - s * z[i], m, spec.clamp_eps);
        rhs[i] = s * (omega[i] + 1.0);
        break;
      }
    }
  }
}

// Adaptive penalties cannot start at zero (every λ̂ would be infinite), so
// they start from one ridge step with unit precision.
Vector default_start(const Dataset& data, const MixtureSpec& spec, const GramCache& cache) {
  Vector beta(data.p(), 0.0);
  if (spec.penalty.kind == PenaltyKind::Ridge) return beta;
  Vector omega, rhs;
  fill_obs_terms(data, spec, linear_predictor(data, beta), omega, rhs);
  const ActiveSet all = full_active_set(data.p());
  const Vector prior(data.p(), sigma2(spec));
  return Cholesky(gram_assemble(cache, omega, prior, all)).solve(gram_cross(cache, rhs, all));
}

void check_beta(const Dataset& data, const Vector& beta) {
  if (beta.size() != data.p()) throw InvalidShape("initial beta length differs from p");
  for (double b : beta)
    if (!std::isfinite(b)) throw DomainError("initial beta must be finite");
}

struct Recorder {
  const Dataset& data;
  const MixtureSpec& spec;
  const StoppingRule& stop;
  const RunOptions& options;
  RunTrace& trace;
  Clock::time_point start = Clock::now();

  void record(std::size_t iter, std::span<const double> beta, std::size_t active, double step_s,
              std::span<const double> omega) {
    TraceRecord r;
    r.iter = iter;
    r.objective = objective(data, spec, beta);
    r.elapsed_s = seconds_since(start);
    r.active_size = active;
    r.step_s = step_s;
    for (std::size_t i : options.sample_obs) r.samples.push_back(omega[i]);
    if (!std::isfinite(r.objective)) throw DomainError("objective became non-finite at iteration " + std::to_string(iter));
    trace.records.push_back(std::move(r));
  }

  bool converged(std::span<const double> beta) const {
    const auto& rs = trace.records;
    if (stop.rel_obj_tol > 0.0 && rs.size() >= 2) {
      const double cur = rs.back().objective;
      const double prev = rs[rs.size() - 2].objective;
      if (std::abs(prev - cur) <= stop.rel_obj_tol * std::abs(cur)) return true;
    }
    if (stop.abs_grad_tol > 0.0 && norm_inf(objective_gradient(data, spec, beta)) <= stop.abs_grad_tol) return true;
    return false;
  }
};

void check_samples(const Dataset& data, const RunOptions& options, RunTrace& trace) {
  for (std::size_t i : options.sample_obs) {
    if (i >= data.n()) throw InvalidShape("sampled observation index out of range");
    trace.sample_labels.push_back("omega_" + std::to_string(i));
  }
}

// Drops coordinates whose adaptive weight became infinite.  Returns true if
// anything changed.
bool prune(const Vector& param_weights, ActiveSet& active) {
  ActiveSet kept;
  kept.reserve(active.size());
  for (std::size_t j : active)
    if (std::isfinite(param_weights[j])) kept.push_back(j);
  const bool changed = kept.size() != active.size();
  active = std::move(kept);
  if (active.empty()) throw AllCoordinatesPruned("every coordinate left the active set");
  return changed;
}

void zero_inactive(Vector& beta, const ActiveSet& active) {
  Vector out(beta.size(), 0.0);
  for (std::size_t j : active) out[j] = beta[j];
  beta = std::move(out);
}

}  // namespace

MixtureSpec MixtureSpec::make(LossFamily loss, PenaltyFamily penalty, double rho) {
  MixtureSpec spec;
  spec.loss = loss;
  spec.penalty = penalty;
  spec.kernel = kernel_params(loss);
  spec.rho = rho;
  spec.validate();
  return spec;
}

void MixtureSpec::validate() const {
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw DomainError("prior precision must be nonnegative and finite");
  if (!(clamp_eps > 0.0)) throw DomainError("clamp_eps must be positive");
  if (!(zero_tol >= 0.0)) throw DomainError("zero_tol must be nonnegative");
  if (!(kernel.sigma > 0.0)) throw DomainError("kernel sigma must be positive");
}

SmemState SmemState::initial(const Dataset& data, std::optional<Vector> beta0) {
  SmemState s;
  s.beta = beta0 ? std::move(*beta0) : Vector(data.p(), 0.0);
  check_beta(data, s.beta);
  s.active = full_active_set(data.p());
  return s;
}

Vector linear_predictor(const Dataset& data, std::span<const double> beta) {
  if (beta.size() != data.p()) throw InvalidShape("beta length differs from p");
  return matvec(data.x, beta);
}

double objective(const Dataset& data, const MixtureSpec& spec, std::span<const double> beta) {
  const Vector z = linear_predictor(data, beta);
  double total = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) total += observation_loss(spec, z[i], data.y[i], trial_count(data, i)).value;
  for (double b : beta) total += penalty_value(spec, b);
  return total / static_cast<double>(data.n());
}

Vector objective_gradient(const Dataset& data, const MixtureSpec& spec, std::span<const double> beta) {
  const Vector z = linear_predictor(data, beta);
  Vector dz(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) dz[i] = observation_loss(spec, z[i], data.y[i], trial_count(data, i)).grad;
  Vector g = matvec_transposed(data.x, dz);
  const double inv_n = 1.0 / static_cast<double>(data.n());
  for (std::size_t j = 0; j < g.size(); ++j) g[j] = (g[j] + penalty_grad(spec, beta[j])) * inv_n;
  return g;
}

double accuracy(const Dataset& data, std::span<const double> beta) {
  const Vector z = linear_predictor(data, beta);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    const double m = trial_count(data, i);
    const bool label = data.y[i] > 0.5 * m;
    if ((z[i] > 0.0) == label) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.n());
}

EStepResult estep(const SmemState& state, const Dataset& data, const MixtureSpec& spec) {
  EStepResult out;
  fill_obs_terms(data, spec, linear_predictor(data, state.beta), out.obs_weights, out.rhs);
  out.param_weights.resize(data.p());
  for (std::size_t j = 0; j < data.p(); ++j) out.param_weights[j] = param_weight(spec.penalty, state.beta[j], spec.zero_tol);
  return out;
}

Vector prior_precisions(const MixtureSpec& spec, std::span<const double> param_weights) {
  const double s2 = sigma2(spec);
  Vector d(param_weights.size());
  if (spec.penalty.kind == PenaltyKind::Ridge) {
    std::fill(d.begin(), d.end(), s2 * spec.rho);
    return d;
  }
  const double inv_tau2 = 1.0 / (spec.penalty.tau * spec.penalty.tau);
  for (std::size_t j = 0; j < d.size(); ++j) d[j] = s2 * inv_tau2 * param_weights[j];
  return d;
}

Vector mstep(const EStepResult& weights, const GramCache& cache, const MixtureSpec& spec, const ActiveSet& active) {
  if (active.empty()) throw EmptyActiveSet("mstep: empty active set");
  for (std::size_t j : active)
    if (j < weights.param_weights.size() && !std::isfinite(weights.param_weights[j]))
      throw DomainError("mstep: active coordinate has infinite weight");
  const Vector prior = prior_precisions(spec, weights.param_weights);
  const DenseMatrix a = gram_assemble(cache, weights.obs_weights, prior, active);
  const Vector sol = Cholesky(a).solve(gram_cross(cache, weights.rhs, active));
  Vector beta(cache.p(), 0.0);
  for (std::size_t k = 0; k < active.size(); ++k) beta[active[k]] = sol[k];
  return beta;
}

double effective_step_size(double omega_hat, double lambda_hat, double tau) {
  if (!(omega_hat > 0.0) || !(lambda_hat >= 0.0) || !(tau > 0.0))
    throw DomainError("effective_step_size: inputs must be positive");
  return 1.0 / (omega_hat + lambda_hat / (tau * tau));
}

RunTrace run_smem(const Dataset& data, const MixtureSpec& spec, const StoppingRule& stop, const RunOptions& options) {
  data.validate();
  spec.validate();
  RunTrace trace;
  trace.method = "smem";
  check_samples(data, options, trace);
  const GramCache cache = gram_build(data.x);
  Recorder rec{data, spec, stop, options, trace};

  SmemState state = SmemState::initial(data, options.beta0 ? options.beta0 : std::optional<Vector>(default_start(data, spec, cache)));
  EStepResult es = estep(state, data, spec);
  rec.record(0, state.beta, state.active.size(), 0.0, es.obs_weights);

  for (std::size_t t = 1; t <= stop.max_iter; ++t) {
    prune(es.param_weights, state.active);
    const auto t0 = Clock::now();
    state.beta = mstep(es, cache, spec, state.active);
    const double step_s = seconds_since(t0);
    state.iter = t;
    es = estep(state, data, spec);
    rec.record(t, state.beta, state.active.size(), step_s, es.obs_weights);
    if (rec.converged(state.beta)) {
      trace.converged = true;
      break;
    }
  }
  state.obs_weights = std::move(es.obs_weights);
  trace.beta = std::move(state.beta);
  return trace;
}

RunTrace run_smem_nesterov(const Dataset& data, const MixtureSpec& spec, const StoppingRule& stop,
                           const RunOptions& options) {
  data.validate();
  spec.validate();
  RunTrace trace;
  trace.method = "smem_nesterov";
  check_samples(data, options, trace);
  const GramCache cache = gram_build(data.x);
  Recorder rec{data, spec, stop, options, trace};

  SmemState point = SmemState::initial(data, options.beta0 ? options.beta0 : std::optional<Vector>(default_start(data, spec, cache)));
  Vector y_prev = point.beta;
  EStepResult es = estep(point, data, spec);
  rec.record(0, y_prev, point.active.size(), 0.0, es.obs_weights);

  double lambda = 1.0;  // λ₁; λ₀ = 0
  for (std::size_t t = 1; t <= stop.max_iter; ++t) {
    if (prune(es.param_weights, point.active)) zero_inactive(y_prev, point.active);
    const auto t0 = Clock::now();
    Vector y_next = mstep(es, cache, spec, point.active);
    const double step_s = seconds_since(t0);

    const double lambda_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * lambda * lambda));
    const double gamma = (1.0 - lambda) / lambda_next;
    for (std::size_t j = 0; j < point.beta.size(); ++j) point.beta[j] = (1.0 - gamma) * y_next[j] + gamma * y_prev[j];
    lambda = lambda_next;
    y_prev = std::move(y_next);
    point.iter = t;

    es = estep(point, data, spec);
    // Sampled weights are reported at the main iterate, like the objective.
    SmemState main_state{y_prev, {}, {}, point.active, t};
    const Vector sampled = options.sample_obs.empty() ? Vector{} : estep(main_state, data, spec).obs_weights;
    rec.record(t, y_prev, point.active.size(), step_s, sampled);
    if (rec.converged(y_prev)) {
      trace.converged = true;
      break;
    }
  }
  trace.beta = std::move(y_prev);
  return trace;
}

std::vector<PathPoint> reg_path(const Dataset& data, const MixtureSpec& spec_template, std::span<const double> penalties,
                                const StoppingRule& stop) {
  data.validate();
  spec_template.validate();
  if (spec_template.penalty.kind != PenaltyKind::Ridge) throw DomainError("reg_path supports the Ridge penalty only");
  if (penalties.empty()) throw DomainError("reg_path needs at least one penalty value");
  for (double r : penalties)
    if (!(r > 0.0) || !std::isfinite(r)) throw DomainError("reg_path penalties must be positive");

  const auto start = Clock::now();
  const std::size_t n = data.n();
  const std::size_t p = data.p();
  const std::size_t k_count = penalties.size();
  const GramCache cache = gram_build(data.x);
  const ActiveSet all = full_active_set(p);
  const Vector zero_prior(p, 0.0);
  const double s2 = sigma2(spec_template);

  struct Branch {
    MixtureSpec spec;
    Vector beta;
    Vector z;
    Vector omega;
    Vector rhs;
    double prev_obj = 0.0;
    bool live = true;
  };
  std::vector<Branch> branches(k_count);
  std::vector<PathPoint> out(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    Branch& b = branches[k];
    b.spec = spec_template;
    b.spec.rho = penalties[k];
    b.beta.assign(p, 0.0);
    b.z.assign(n, 0.0);
    fill_obs_terms(data, b.spec, b.z, b.omega, b.rhs);
    b.prev_obj = objective(data, b.spec, b.beta);
    out[k].penalty = penalties[k];
  }

  std::size_t live = k_count;
  Vector shared(n);
  Vector cross(n);
  for (std::size_t sweep = 1; sweep <= stop.max_iter && live > 0; ++sweep) {
    // Largest curvature over live branches keeps every branch's bound valid.
    bool first = true;
    for (const Branch& b : branches) {
      if (!b.live) continue;
      if (first) {
        shared = b.omega;
        first = false;
      } else {
        for (std::size_t i = 0; i < n; ++i) shared[i] = std::max(shared[i], b.omega[i]);
      }
    }
    const DenseMatrix gram = gram_assemble(cache, shared, zero_prior, all);

    for (std::size_t k = 0; k < k_count; ++k) {
      Branch& b = branches[k];
      if (!b.live) continue;
      for (std::size_t i = 0; i < n; ++i) cross[i] = b.rhs[i] + (shared[i] - b.omega[i]) * b.z[i];
      DenseMatrix a = gram;
      for (std::size_t j = 0; j < p; ++j) a(j, j) += s2 * b.spec.rho;
      b.beta = Cholesky(a).solve(gram_cross(cache, cross, all));
      b.z = linear_predictor(data, b.beta);
      fill_obs_terms(data, b.spec, b.z, b.omega, b.rhs);
      ++out[k].sweeps;

      const double obj = objective(data, b.spec, b.beta);
      if (!std::isfinite(obj)) throw DomainError("reg_path objective became non-finite");
      bool met = false;
      if (stop.rel_obj_tol > 0.0 && std::abs(b.prev_obj - obj) <= stop.rel_obj_tol * std::abs(obj)) met = true;
      if (!met && stop.abs_grad_tol > 0.0 && norm_inf(objective_gradient(data, b.spec, b.beta)) <= stop.abs_grad_tol)
        met = true;
      b.prev_obj = obj;
      if (met || sweep == stop.max_iter) {
        b.live = false;
        --live;
        out[k].converged = met;
        out[k].elapsed_s = seconds_since(start);
      }
    }
  }

  for (std::size_t k = 0; k < k_count; ++k) {
    out[k].beta = branches[k].beta;
    out[k].objective = branches[k].prev_obj;
    if (branches[k].live) out[k].elapsed_s = seconds_since(start);
  }
  return out;
}

}  // namespace smem
