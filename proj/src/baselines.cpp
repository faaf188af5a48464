#include "smem/baselines.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

#include "smem/errors.hpp"
#include "smem/random.hpp"

namespace smem {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kStreamBatches = 6;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void require_finite(const Vector& v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x)) throw DomainError(std::string(what) + " became non-finite");
}

// Logistic ridge objective restricted to one mini-batch, mean-scaled.
struct BatchObjective {
  const Dataset& data;
  double ridge;  // ρ/n
  std::span<const std::size_t> batch;

  double residual(std::size_t i, std::span<const double> theta, double& z) const {
    z = dot(data.x.row(i), theta);
    const double m = data.m.empty() ? 1.0 : data.m[i];
    return m * sigmoid(z) - data.y[i];
  }

  Vector grad(std::span<const double> theta) const {
    Vector g(theta.size(), 0.0);
    for (std::size_t i : batch) {
      double z = 0.0;
      const double r = residual(i, theta, z);
      auto xi = data.x.row(i);
      for (std::size_t j = 0; j < g.size(); ++j) g[j] += r * xi[j];
    }
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (std::size_t j = 0; j < g.size(); ++j) g[j] = g[j] * inv_b + ridge * theta[j];
    return g;
  }

  GradHess grad_hess(std::span<const double> theta) const {
    const std::size_t p = theta.size();
    GradHess out{Vector(p, 0.0), DenseMatrix(p, p)};
    for (std::size_t i : batch) {
      double z = 0.0;
      const double r = residual(i, theta, z);
      const double m = data.m.empty() ? 1.0 : data.m[i];
      const double s = sigmoid(z);
      const double w = m * s * (1.0 - s);
      auto xi = data.x.row(i);
      for (std::size_t a = 0; a < p; ++a) {
        out.grad[a] += r * xi[a];
        const double wa = w * xi[a];
        for (std::size_t b = 0; b <= a; ++b) out.hess(a, b) += wa * xi[b];
      }
    }
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    for (std::size_t a = 0; a < p; ++a) {
      out.grad[a] = out.grad[a] * inv_b + ridge * theta[a];
      for (std::size_t b = 0; b <= a; ++b) {
        out.hess(a, b) *= inv_b;
        out.hess(b, a) = out.hess(a, b);
      }
      out.hess(a, a) += ridge;
    }
    return out;
  }
};

}  // namespace

void AdamConfig::validate() const {
  if (!(lr > 0.0)) throw DomainError("Adam learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw DomainError("Adam decay rates must lie in [0, 1)");
  if (!(eps > 0.0)) throw DomainError("Adam eps must be positive");
  if (!(weight_decay >= 0.0)) throw DomainError("weight decay must be nonnegative");
}

void MomentumConfig::validate() const {
  if (!(lr > 0.0)) throw DomainError("momentum learning rate must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("momentum must lie in [0, 1)");
}

double PrmConfig::step_size(std::size_t t) const {
  return c / std::sqrt(1.0 + static_cast<double>(t / schedule_stride));
}

void PrmConfig::validate() const {
  if (!(c > 0.0)) throw DomainError("PRM schedule constant must be positive");
  if (batch_size == 0) throw DomainError("PRM batch size must be at least 1");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw DomainError("PRM momentum must lie in [0, 1)");
  if (schedule_stride == 0) throw DomainError("PRM schedule stride must be at least 1");
}

OptState OptState::zeros(std::size_t p) {
  OptState s;
  s.theta.assign(p, 0.0);
  s.m.assign(p, 0.0);
  s.v.assign(p, 0.0);
  s.theta_prev.assign(p, 0.0);
  return s;
}

OptState adam_step(OptState s, std::span<const double> g, const AdamConfig& cfg) {
  const std::size_t p = s.theta.size();
  if (g.size() != p) throw InvalidShape("adam_step: gradient length differs from theta");
  if (s.m.size() != p) s.m.assign(p, 0.0);
  if (s.v.size() != p) s.v.assign(p, 0.0);
  s.t += 1;
  const double t = static_cast<double>(s.t);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  s.theta_prev = s.theta;
  for (std::size_t j = 0; j < p; ++j) {
    double gj = g[j];
    if (!cfg.decoupled && cfg.weight_decay > 0.0) gj += cfg.weight_decay * s.theta[j];
    s.m[j] = cfg.beta1 * s.m[j] + (1.0 - cfg.beta1) * gj;
    s.v[j] = cfg.beta2 * s.v[j] + (1.0 - cfg.beta2) * gj * gj;
    const double m_hat = s.m[j] / bc1;
    const double v_hat = s.v[j] / bc2;
    double theta = s.theta[j];
    if (cfg.decoupled) theta = (1.0 - cfg.weight_decay) * theta;
    s.theta[j] = theta - cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
  return s;
}

OptState momentum_step(OptState s, const GradFn& grad_fn, const MomentumConfig& cfg) {
  const std::size_t p = s.theta.size();
  if (s.theta_prev.size() != p) s.theta_prev = s.theta;
  Vector next(p);
  if (cfg.mode == MomentumMode::HeavyBall) {
    const Vector g = grad_fn(s.theta);
    for (std::size_t j = 0; j < p; ++j)
      next[j] = s.theta[j] - cfg.lr * g[j] + cfg.momentum * (s.theta[j] - s.theta_prev[j]);
  } else {
    Vector look(p);
    for (std::size_t j = 0; j < p; ++j) look[j] = s.theta[j] + cfg.momentum * (s.theta[j] - s.theta_prev[j]);
    const Vector g = grad_fn(look);
    for (std::size_t j = 0; j < p; ++j) next[j] = look[j] - cfg.lr * g[j];
  }
  s.theta_prev = std::move(s.theta);
  s.theta = std::move(next);
  s.t += 1;
  return s;
}

OptState prm_step(OptState s, const GradHessFn& oracle, const PrmConfig& cfg) {
  const std::size_t p = s.theta.size();
  if (s.theta_prev.size() != p) s.theta_prev = s.theta;
  Vector look = s.theta;
  if (cfg.momentum > 0.0)
    for (std::size_t j = 0; j < p; ++j) look[j] += cfg.momentum * (s.theta[j] - s.theta_prev[j]);
  const double alpha = cfg.step_size(s.t);
  GradHess gh = oracle(look);
  DenseMatrix a = std::move(gh.hess);
  for (double& v : a.entries()) v *= alpha;
  for (std::size_t j = 0; j < p; ++j) a(j, j) += 1.0;
  const Vector d = Cholesky(a).solve(gh.grad);
  Vector next(p);
  for (std::size_t j = 0; j < p; ++j) next[j] = look[j] - alpha * d[j];
  s.theta_prev = std::move(s.theta);
  s.theta = std::move(next);
  s.t += 1;
  return s;
}

std::string method_name(const OptimizerConfig& cfg) {
  if (const auto* a = std::get_if<AdamConfig>(&cfg)) return a->decoupled ? "adamw" : "adam";
  if (const auto* m = std::get_if<MomentumConfig>(&cfg))
    return m->mode == MomentumMode::HeavyBall ? "sgd_momentum" : "sgd_nesterov";
  return std::get<PrmConfig>(cfg).momentum > 0.0 ? "prm_nesterov" : "prm";
}

RunTrace run_baseline(const Dataset& data, const MixtureSpec& spec, const OptimizerConfig& cfg,
                      const BaselineOptions& options) {
  data.validate();
  spec.validate();
  if (spec.loss.kind != LossKind::Logistic || spec.penalty.kind != PenaltyKind::Ridge)
    throw DomainError("baselines support the logistic loss with a ridge penalty only");
  std::visit([](const auto& c) { c.validate(); }, cfg);

  const std::size_t n = data.n();
  const std::size_t p = data.p();
  const auto* prm = std::get_if<PrmConfig>(&cfg);
  const std::size_t batch = prm ? prm->batch_size : options.batch_size;
  if (batch == 0 || batch > n) throw DomainError("batch size must lie in [1, n]");
  const std::size_t batches = (n + batch - 1) / batch;
  PrmConfig prm_cfg;
  if (prm) {
    prm_cfg = *prm;
    prm_cfg.schedule_stride = batches;
  }
  for (std::size_t j : options.sample_coords)
    if (j >= p) throw InvalidShape("sampled coordinate out of range");

  RunTrace trace;
  trace.method = method_name(cfg);
  const bool sample_v = std::holds_alternative<AdamConfig>(cfg);
  for (std::size_t j : options.sample_coords) trace.sample_labels.push_back((sample_v ? "v_" : "theta_") + std::to_string(j));

  const auto start = Clock::now();
  OptState state = OptState::zeros(p);
  auto record = [&](std::size_t epoch, double step_s) {
    TraceRecord r;
    r.iter = epoch;
    r.objective = objective(data, spec, state.theta);
    r.elapsed_s = std::chrono::duration<double>(Clock::now() - start).count();
    r.active_size = p;
    r.step_s = step_s;
    for (std::size_t j : options.sample_coords) r.samples.push_back(sample_v ? state.v[j] : state.theta[j]);
    if (!std::isfinite(r.objective)) throw DomainError(trace.method + ": objective became non-finite");
    trace.records.push_back(std::move(r));
  };
  record(0, 0.0);

  const double ridge = spec.rho / static_cast<double>(n);
  std::vector<std::size_t> order(n);
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    const auto t0 = Clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(options.seed, kStreamBatches, epoch);
    shuffle(order, rng);
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t lo = b * batch;
      const std::size_t hi = std::min(n, lo + batch);
      const BatchObjective obj{data, ridge, std::span<const std::size_t>(order).subspan(lo, hi - lo)};
      if (const auto* a = std::get_if<AdamConfig>(&cfg)) {
        state = adam_step(std::move(state), obj.grad(state.theta), *a);
      } else if (const auto* m = std::get_if<MomentumConfig>(&cfg)) {
        state = momentum_step(std::move(state), [&](std::span<const double> th) { return obj.grad(th); }, *m);
      } else {
        state = prm_step(std::move(state), [&](std::span<const double> th) { return obj.grad_hess(th); }, prm_cfg);
      }
    }
    require_finite(state.theta, "baseline iterate");
    record(epoch, std::chrono::duration<double>(Clock::now() - t0).count());
  }
  trace.beta = state.theta;
  return trace;
}

}  // namespace smem
