#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <string>

#include <json.hpp>

#include "csv_util.hpp"
#include "oracles.hpp"
#include "smem/baselines.hpp"
#include "smem/bench.hpp"
#include "smem/engine.hpp"
#include "smem/errors.hpp"
#include "smem/kernels.hpp"
#include "smem/prox.hpp"
#include "smem/random.hpp"
#include "smem/selection.hpp"
#include "smem/synth.hpp"

using namespace smem;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::map<std::string, double> final_nll(const ExperimentResult& r) {
  std::map<std::string, double> out;
  for (const SummaryRow& row : r.summary) out[row.method] = row.final_nll;
  return out;
}

Outcome optimum_agreement() {
  const Dataset d = make_preset("conv50");
  const double rho = 0.01;
  const oracle::NewtonResult ref = oracle::newton_logistic_ridge(d, rho, 1e-12);
  const auto t0 = Clock::now();
  const RunTrace t = run_smem(d, MixtureSpec::logistic_ridge(rho), StoppingRule{1000, 1e-15, 1e-13});
  const double secs = seconds_since(t0);
  const double diff = std::abs(t.final_objective() - ref.objective);
  return {diff <= 1e-6 && secs < 5.0, "|F_smem - F_newton| = " + fmt("%.2e", diff) + ", oracle grad " +
                                          fmt("%.1e", ref.grad_norm) + ", " + fmt("%.2f s", secs)};
}

Outcome monotonicity() {
  const auto t0 = Clock::now();
  double worst = -INFINITY;
  std::string where;
  auto check = [&](const std::string& name, const RunTrace& t) {
    for (std::size_t k = 1; k < t.records.size(); ++k) {
      const double rise = t.records[k].objective - t.records[k - 1].objective;
      if (rise > worst) {
        worst = rise;
        where = name;
      }
    }
  };
  for (const std::string& name : preset_names()) {
    const Dataset d = make_preset(name);
    const std::size_t iters = d.p() >= 200 ? 15 : 60;
    check(name + " ridge", run_smem(d, MixtureSpec::logistic_ridge(0.01), StoppingRule{iters, 0.0, 0.0}));
    if (name == "activeset") check(name + " lasso", run_smem(d, MixtureSpec::logistic_lasso(1.0), StoppingRule{iters, 0.0, 0.0}));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-10 && secs < 60.0,
          "largest per-step increase " + fmt("%.2e", worst) + " (" + where + "), " + fmt("%.1f s", secs)};
}

Outcome weight_identities() {
  Rng rng(2024, 1);
  double worst = 0.0;
  for (const LossFamily& f : {LossFamily::logistic(), LossFamily::squared(), LossFamily::check(0.25),
                              LossFamily::check(0.75), LossFamily::hinge()}) {
    const WeightKernelParams k = kernel_params(f);
    for (int draw = 0; draw < 1000; ++draw) {
      double z = -25.0 + 50.0 * rng.uniform();
      if (std::abs(z) < 1e-3) z = 1e-3;
      const double lhs = (z - k.mu_z) * obs_weight(f, z, 1.0);
      const double rhs = k.kappa_z + k.sigma * k.sigma * loss_value_grad(f, z, 1.0).grad;
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  }
  bool bounded = true;
  for (int k = -4000; k <= 4000; ++k) {
    const double z = std::copysign(std::pow(10.0, std::abs(k) / 400.0 - 6.0), k);
    const double w = obs_weight(LossFamily::logistic(), z, 1.0);
    bounded = bounded && w > 0.0 && w <= 0.25;
  }
  bounded = bounded && obs_weight(LossFamily::logistic(), 0.0, 1.0) == 0.25;
  double hq = 0.0;
  const ScalarPenalty lc = ScalarPenalty::log_cosh(0.5);
  for (int draw = 0; draw < 1000; ++draw) {
    const double z = -30.0 + 60.0 * rng.uniform();
    hq = std::max(hq, std::abs(hq_minimizer(HqForm::GR, lc, z) - obs_weight(LossFamily::logistic(), z, 1.0)));
  }
  return {worst < 1e-10 && bounded && hq <= 1e-12,
          "gradient-to-weight residual " + fmt("%.1e", worst) + ", PG weight in (0, 1/4]: " + (bounded ? "yes" : "no") +
              ", log-cosh HQ gap " + fmt("%.1e", hq)};
}

double grid_prox(const std::function<double(double)>& penalty, double y, double gam) {
  const double b = std::abs(y) + 10.0 * gam + 10.0;
  return oracle::grid_argmin([&](double z) { return penalty(z) + (z - y) * (z - y) / (2.0 * gam); }, -b, b);
}

Outcome prox_suite() {
  const auto t0 = Clock::now();
  Rng rng(77, 1);
  double worst = 0.0;
  for (double p : {1.0, 1.5, 2.0, 3.0}) {
    for (int draw = 0; draw < 100; ++draw) {
      const double y = -6.0 + 12.0 * rng.uniform();
      const double lam = 0.05 + 2.0 * rng.uniform();
      const double ref = grid_prox([&](double z) { return lam * std::pow(std::abs(z), p); }, y, 1.0);
      worst = std::max(worst, std::abs(prox_lp(y, lam, p) - ref));
    }
  }
  for (int draw = 0; draw < 100; ++draw) {
    const double p = 0.1 + 0.8 * rng.uniform();
    const double y = -5.0 + 10.0 * rng.uniform();
    const double lam = 0.05 + 1.5 * rng.uniform();
    const double ref = grid_prox([&](double z) { return lam * std::pow(std::abs(z), p); }, y, 1.0);
    worst = std::max(worst, std::abs(prox_lp_subunit(y, lam, p) - ref));
  }
  for (int draw = 0; draw < 100; ++draw) {
    const double a = 0.3 + 2.0 * rng.uniform();
    const double gam = a * a * rng.uniform_open();
    const double u = -6.0 + 12.0 * rng.uniform();
    const double ref = grid_prox([&](double z) { return gam * std::log1p(std::abs(z) / a); }, u, 1.0);
    worst = std::max(worst, std::abs(prox_double_pareto(u, a, gam) - ref));
  }
  for (int draw = 0; draw < 100; ++draw) {
    const double a = 0.3 + 2.0 * rng.uniform();
    const double gam = 0.05 + 5.0 * rng.uniform();
    const double u = -6.0 + 12.0 * rng.uniform();
    const ScalarPenalty dp = ScalarPenalty::double_pareto(a, 1.0);
    const double ref = grid_prox([&](double z) { return dp.value(z); }, u, gam);
    worst = std::max(worst, std::abs(prox_scalar(dp, gam, u) - ref));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-6 && secs < 10.0,
          "max deviation from grid/golden oracle " + fmt("%.1e", worst) +
              " (closed-form double-Pareto drawn with gamma <= a^2, general double-Pareto via prox_scalar), " +
              fmt("%.1f s", secs)};
}

Outcome fista_rate() {
  Rng rng(91, 1);
  DenseMatrix x(40, 20);
  for (std::size_t i = 0; i < 40; ++i)
    for (std::size_t j = 0; j < 20; ++j) x(i, j) = rng.normal() * std::pow(0.8, static_cast<double>(j));
  Vector y(40);
  for (double& v : y) v = rng.normal();
  const RunTrace t = fista_run(x, y, 0.0, ScalarPenalty::abs_pow(1.0), 499);
  const DenseMatrix xtx = matmul(x.transpose(), x);
  const oracle::Vec star = oracle::solve(oracle::dense(xtx), matvec_transposed(x, y));
  const double fstar = composite_objective(x, y, star, 0.0, ScalarPenalty::abs_pow(1.0));
  const double lip = symmetric_eigenvalues(xtx).back();
  const double dist2 = dot(star, star);
  double worst_ratio = 0.0;
  for (const TraceRecord& r : t.records) {
    const double bound = 2.0 * lip * dist2 / (static_cast<double>(r.iter) * r.iter);
    worst_ratio = std::max(worst_ratio, (r.objective - fstar) / bound);
  }
  const NesterovSeq s = nesterov_seq(10000);
  bool lam_ok = true;
  for (std::size_t k = 2; k <= 10000; ++k) lam_ok = lam_ok && s.lambda[k - 1] >= 0.5 * static_cast<double>(k);
  return {worst_ratio <= 1.0 && lam_ok && t.records.size() == 500,
          "max gap/bound over t <= 500: " + fmt("%.3f", worst_ratio) + "; lambda_{t-1} >= t/2 for 2 <= t <= 1e4: " +
              (lam_ok ? "yes" : "no") + " (t = 1 excluded, lambda_0 = 0)"};
}

Outcome nesterov_gain() {
  const auto t0 = Clock::now();
  const ExperimentResult r = run_experiment(default_config("nesterov"));
  const double secs = seconds_since(t0);
  auto nll = final_nll(r);
  const double ratio = nll["SM-EM+Nesterov"] / nll["SM-EM"];
  const bool prm = nll["PRM+Nesterov"] < nll["PRM"];
  return {ratio <= 0.8 && prm && secs < 30.0,
          "SM-EM+Nesterov/SM-EM = " + fmt("%.3f", ratio) + ", PRM+Nesterov " + fmt("%.4f", nll["PRM+Nesterov"]) +
              " vs PRM " + fmt("%.4f", nll["PRM"]) + ", " + fmt("%.1f s", secs)};
}

Outcome dimension_ordering() {
  const auto t0 = Clock::now();
  const ExperimentConfig cfg = default_config("highdim");
  const ExperimentResult r = run_experiment(cfg);
  const double secs = seconds_since(t0);
  auto nll = final_nll(r);
  bool ok = secs < 600.0;
  std::string detail;
  for (const std::string& preset : cfg.presets) {
    const double a = nll[preset + "/SM-EM+Nesterov"], b = nll[preset + "/Adam*"], c = nll[preset + "/Adam"];
    ok = ok && a < b && b < c;
    detail += preset + " " + fmt("%.4f", a) + " < " + fmt("%.4f", b) + " < " + fmt("%.4f", c) + "; ";
  }
  return {ok, detail + fmt("%.1f s", secs)};
}

Outcome regularization_path() {
  const auto t0 = Clock::now();
  const ExperimentResult r = run_experiment(default_config("regpath"));
  const double secs = seconds_since(t0);
  double max_diff = 0.0;
  for (const auto& row : r.path_rows) max_diff = std::max(max_diff, std::stod(row[3]));
  double amortized = 0.0, individual = 0.0;
  for (const SummaryRow& row : r.summary) {
    if (row.method == "SM-EM path (amortized)") amortized = row.elapsed_s;
    if (row.method == "SM-EM path (individual)") individual = row.elapsed_s;
  }
  const double ratio = amortized / individual;
  return {r.path_rows.size() == 40 && max_diff <= 1e-4 && ratio <= 0.5 && secs < 900.0,
          std::to_string(r.path_rows.size()) + " penalties, max |NLL diff| " + fmt("%.1e", max_diff) +
              ", amortized/individual time " + fmt("%.3f", ratio) + ", " + fmt("%.1f s", secs)};
}

Outcome active_set() {
  const ExperimentResult r = run_experiment(default_config("activeset"));
  const RunTrace& t = r.traces.front().trace;
  const std::size_t final_active = t.records.back().active_size;
  const std::size_t n = t.records.size();
  double first = 0.0, last = 0.0;
  for (std::size_t k = 1; k <= 20; ++k) first += t.records[k].step_s / 20.0;
  for (std::size_t k = n - 20; k < n; ++k) last += t.records[k].step_s / 20.0;
  return {n == 81 && final_active < 500 && last < first,
          "final active set " + std::to_string(final_active) + "/500, mean M-step " + fmt("%.4f s", first) +
              " (first 20) vs " + fmt("%.4f s", last) + " (last 20)"};
}

Outcome selection_formulas() {
  double dof_gap = 0.0;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    Rng rng(seed, 12);
    DenseMatrix m(12, 7);
    for (double& v : m.entries()) v = rng.normal();
    const DenseMatrix b = matmul(m.transpose(), m);
    const double tau_sq = 0.05 + 2.0 * rng.uniform();
    DenseMatrix a = b;
    for (std::size_t j = 0; j < 7; ++j) a(j, j) += tau_sq;
    dof_gap = std::max(dof_gap, std::abs(effective_dof_from_hessian(a, tau_sq) - effective_dof(symmetric_eigenvalues(b), tau_sq)));
  }
  const Vector d{3.0, 1.0, 0.5, 2.0, 0.1};
  const Vector y{1.0, -2.0, 0.5, 4.0, -1.0};
  const double rho = 0.7;
  Dataset diag;
  diag.x = DenseMatrix::diagonal(d);
  diag.y = y;
  diag.m.assign(d.size(), 1.0);
  const RunTrace t = run_smem(diag, MixtureSpec::make(LossFamily::squared(), PenaltyFamily::ridge(), rho), StoppingRule{3, 0.0, 0.0});
  double closed = 0.0;
  for (std::size_t j = 0; j < d.size(); ++j) {
    closed = std::max(closed, std::abs(t.beta[j] - d[j] * y[j] / (d[j] * d[j] + rho)));
    closed = std::max(closed, std::abs(gen_ridge_shrinkage(d[j], rho) - d[j] * d[j] / (d[j] * d[j] + rho)));
  }
  closed = std::max(closed, std::abs(effective_dof_from_hessian(DenseMatrix::diagonal(Vector{5.0, 2.0}), 1.0) - 1.3));
  const bool gcv = gcv_score(4.0, 0.0, 4) == 1.0 && gcv_score(4.0, 2.0, 4) == 4.0 && gcv_score(0.0, 1.0, 4) == 0.0 &&
                   std::abs(gcv_score(7.5, 3.2, 50) - (7.5 / 50.0) / std::pow(1.0 - 3.2 / 50.0, 2)) <= 1e-15;
  return {dof_gap <= 1e-9 && closed <= 1e-10 && gcv,
          "dof form gap " + fmt("%.1e", dof_gap) + ", diagonal closed forms " + fmt("%.1e", closed) + ", GCV arithmetic " +
              (gcv ? "exact" : "wrong")};
}

Outcome baseline_identities() {
  const Vector g{0.3, -2.0, 1e-3, 5.0};
  const AdamConfig cfg;
  const OptState s = adam_step(OptState::zeros(4), g, cfg);
  double bias = 0.0;
  for (std::size_t j = 0; j < g.size(); ++j) {
    bias = std::max(bias, std::abs(s.m[j] / (1.0 - cfg.beta1) - g[j]) / std::abs(g[j]));
    bias = std::max(bias, std::abs(s.v[j] / (1.0 - cfg.beta2) - g[j] * g[j]) / (g[j] * g[j]));
  }

  AdamConfig adamw;
  adamw.decoupled = true;
  adamw.weight_decay = 0.0;
  Rng rng(5, 2);
  OptState a = OptState::zeros(6), b = a;
  bool bitwise = true;
  for (int k = 0; k < 200; ++k) {
    Vector grad(6);
    for (double& v : grad) v = rng.normal();
    a = adam_step(a, grad, cfg);
    b = adam_step(b, grad, adamw);
    bitwise = bitwise && a.theta == b.theta && a.m == b.m && a.v == b.v;
  }

  const std::size_t p = 6;
  DenseMatrix r(p + 3, p);
  for (double& v : r.entries()) v = rng.normal();
  const DenseMatrix h = matmul(r.transpose(), r);
  Vector rhs(p);
  for (double& v : rhs) v = rng.normal();
  const GradHessFn quad = [&](std::span<const double> th) {
    Vector gr = matvec(h, th);
    for (std::size_t j = 0; j < p; ++j) gr[j] -= rhs[j];
    return GradHess{gr, h};
  };
  PrmConfig prm;
  prm.c = 0.9;
  OptState st = OptState::zeros(p);
  double prm_err = 0.0;
  for (int k = 0; k < 10; ++k) {
    const double alpha = prm.step_size(st.t);
    oracle::Mat m = oracle::dense(h);
    oracle::Vec v(p);
    for (std::size_t j = 0; j < p; ++j) {
      for (double& e : m[j]) e *= alpha;
      m[j][j] += 1.0;
      v[j] = st.theta[j] + alpha * rhs[j];
    }
    const oracle::Vec exact = oracle::solve(m, v);
    st = prm_step(st, quad, prm);
    for (std::size_t j = 0; j < p; ++j) prm_err = std::max(prm_err, std::abs(st.theta[j] - exact[j]));
  }
  return {bias <= 1e-15 && bitwise && prm_err <= 1e-12,
          "Adam t=1 bias-correction error " + fmt("%.1e", bias) + ", AdamW(wd=0) bitwise equal: " +
              (bitwise ? "yes" : "no") + ", PRM implicit-step error " + fmt("%.1e", prm_err)};
}

std::string reduced_config(const std::string& experiment) {
  nlohmann::json j{{"experiment", experiment}, {"n", 800}, {"p", 15}, {"iterations", 20}, {"batch_size", 100}};
  if (experiment == "highdim") {
    j["presets"] = {"highdim10", "highdim20"};
    j.erase("p");
  }
  if (experiment == "regpath") j["regpath"] = {{"count", 6}};
  if (experiment == "activeset") j["p"] = 60;
  return j.dump();
}

Outcome determinism() {
  const auto root = std::filesystem::temp_directory_path() / "smem_acceptance_determinism";
  std::filesystem::remove_all(root);
  std::string bad;
  for (const std::string& name : experiment_names()) {
    const ExperimentConfig cfg = validate_config(reduced_config(name));
    write_results(run_experiment(cfg, 1), cfg, root / (name + "_a"));
    write_results(run_experiment(cfg, 2), cfg, root / (name + "_b"));
    for (const std::string& f : csvutil::diff_dirs(root / (name + "_a"), root / (name + "_b"))) bad += name + "/" + f + " ";
  }
  std::filesystem::remove_all(root);
  return {bad.empty(), std::to_string(experiment_names().size()) +
                           " experiments at reduced size (n=800), 1 vs 2 threads, timing columns excluded" +
                           (bad.empty() ? "" : "; differing: " + bad)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"optimum agreement with Newton oracle", optimum_agreement},
      {"SM-EM monotone on all presets", monotonicity},
      {"weight identities", weight_identities},
      {"prox oracle suite", prox_suite},
      {"FISTA rate and Nesterov sequence", fista_rate},
      {"Nesterov gain on nesterov450", nesterov_gain},
      {"dimension ordering on highdim presets", dimension_ordering},
      {"amortized regularization path", regularization_path},
      {"active-set shrinkage", active_set},
      {"selection formulas", selection_formulas},
      {"baseline identities", baseline_identities},
      {"determinism of experiment outputs", determinism},
  };
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %zu %s: %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
