#include "smem/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <memory>
#include <mutex>
#include <set>
#include <thread>

#include <json.hpp>

#include "smem/baselines.hpp"
#include "smem/engine.hpp"
#include "smem/errors.hpp"
#include "smem/selection.hpp"
#include "smem/synth.hpp"

namespace smem {

namespace {

using json = nlohmann::ordered_json;
using Clock = std::chrono::steady_clock;

// ---------------------------------------------------------------- config --

std::size_t line_of_key(const std::string& text, const std::string& key) {
  const auto pos = text.find("\"" + key + "\"");
  if (pos == std::string::npos) return 0;
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

class FieldReader {
 public:
  FieldReader(const json& obj, std::string prefix, const std::string& text)
      : obj_(obj), prefix_(std::move(prefix)), text_(text) {
    if (!obj_.is_object()) fail(prefix_.empty() ? "<root>" : prefix_.substr(0, prefix_.size() - 1), "expected an object");
  }

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    const std::string leaf = field.substr(field.rfind('.') + 1);
    const std::size_t line = line_of_key(text_, leaf);
    std::string msg = "config";
    if (line > 0) msg += " line " + std::to_string(line);
    throw ParseError(msg + ": field '" + field + "': " + what);
  }

  const json* find(const std::string& key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = find(key)) {
      if (!v->is_number()) fail(prefix_ + key, "expected a number");
      out = v->get<double>();
      if (!std::isfinite(out)) fail(prefix_ + key, "expected a finite number");
    }
  }

  template <class T>
  void count(const std::string& key, T& out) {
    if (const json* v = find(key)) {
      if (!v->is_number_unsigned())
        fail(prefix_ + key, "expected a nonnegative integer");
      out = v->get<T>();
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) fail(prefix_ + key, "expected true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = find(key)) {
      if (!v->is_string()) fail(prefix_ + key, "expected a string");
      out = v->get<std::string>();
    }
  }

  template <class T>
  void optional_count(const std::string& key, std::optional<T>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      T tmp{};
      seen_.erase(key);
      count(key, tmp);
      out = tmp;
    }
  }

  void optional_number(const std::string& key, std::optional<double>& out) {
    if (const json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      double tmp = 0.0;
      number(key, tmp);
      out = tmp;
    }
  }

  void numbers(const std::string& key, std::vector<double>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) fail(prefix_ + key, "expected an array of numbers");
      std::vector<double> tmp;
      for (const auto& e : *v) {
        if (!e.is_number()) fail(prefix_ + key, "expected an array of numbers");
        tmp.push_back(e.get<double>());
      }
      out = std::move(tmp);
    }
  }

  void counts(const std::string& key, std::vector<std::size_t>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) fail(prefix_ + key, "expected an array of nonnegative integers");
      std::vector<std::size_t> tmp;
      for (const auto& e : *v) {
        if (!e.is_number_unsigned()) fail(prefix_ + key, "expected an array of nonnegative integers");
        tmp.push_back(e.get<std::size_t>());
      }
      out = std::move(tmp);
    }
  }

  void strings(const std::string& key, std::vector<std::string>& out) {
    if (const json* v = find(key)) {
      if (!v->is_array()) fail(prefix_ + key, "expected an array of strings");
      std::vector<std::string> tmp;
      for (const auto& e : *v) {
        if (!e.is_string()) fail(prefix_ + key, "expected an array of strings");
        tmp.push_back(e.get<std::string>());
      }
      out = std::move(tmp);
    }
  }

  FieldReader object(const std::string& key) {
    static const json empty = json::object();
    const json* v = find(key);
    return FieldReader(v ? *v : empty, prefix_ + key + ".", text_);
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (!seen_.count(it.key())) fail(prefix_ + it.key(), "unknown key");
  }

  std::string path(const std::string& key) const { return prefix_ + key; }

 private:
  const json& obj_;
  std::string prefix_;
  const std::string& text_;
  std::set<std::string> seen_;
};

void check(bool ok, const FieldReader& r, const std::string& key, const std::string& what) {
  if (!ok) r.fail(r.path(key), what);
}

std::vector<double> default_sensitivity_lrs() {
  // 10^-4 … 10^-0.5 in half-decade steps.
  std::vector<double> out;
  for (int k = 0; k <= 7; ++k) out.push_back(std::pow(10.0, -4.0 + 0.5 * k));
  return out;
}

PresetInfo resolve_preset(const ExperimentConfig& cfg, const std::string& name) {
  PresetInfo info = preset_info(name);
  if (cfg.seed) info.seed = *cfg.seed;
  if (cfg.n) info.n = *cfg.n;
  if (cfg.p) info.p = *cfg.p;
  if (cfg.cond) info.cond = *cfg.cond;
  if (cfg.signal) info.signal = *cfg.signal;
  return info;
}

// --------------------------------------------------------------- running --

std::string format_double(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

struct Job {
  std::string file;
  std::string method;
  std::shared_ptr<const Dataset> data;
  std::function<RunTrace(json& meta)> run;
};

struct JobOutput {
  RunTrace trace;
  json meta = json::object();
};

AdamConfig adam_config(const AdamSettings& s, std::optional<double> lr = std::nullopt) {
  AdamConfig c;
  c.lr = lr.value_or(s.lr);
  c.beta1 = s.beta1;
  c.beta2 = s.beta2;
  c.eps = s.eps;
  c.weight_decay = s.weight_decay;
  c.decoupled = s.decoupled;
  return c;
}

MomentumConfig momentum_config(const MomentumSettings& s, double lr) {
  MomentumConfig c;
  c.lr = lr;
  c.momentum = s.momentum;
  c.mode = s.mode == "nesterov" ? MomentumMode::Nesterov : MomentumMode::HeavyBall;
  return c;
}

PrmConfig prm_config(const PrmSettings& s, bool nesterov) {
  PrmConfig c;
  c.c = s.c;
  c.batch_size = s.batch_size;
  c.momentum = nesterov ? s.momentum : 0.0;
  return c;
}

BaselineOptions baseline_options(const ExperimentConfig& cfg, std::vector<std::size_t> coords = {}) {
  BaselineOptions o;
  o.epochs = cfg.iterations;
  o.batch_size = cfg.batch_size;
  o.seed = cfg.optimizer_seed;
  o.sample_coords = std::move(coords);
  return o;
}

// Runs every learning rate and keeps the lowest final objective; a rate
// that diverges is recorded as such and skipped.
RunTrace grid_search(const Dataset& data, const MixtureSpec& spec, const ExperimentConfig& cfg,
                     const std::function<OptimizerConfig(double)>& make, json& meta) {
  std::optional<RunTrace> best;
  double best_lr = 0.0;
  json grid = json::array();
  for (double lr : cfg.lr_grid) {
    try {
      RunTrace t = run_baseline(data, spec, make(lr), baseline_options(cfg));
      grid.push_back({{"lr", lr}, {"final_nll", t.final_objective()}});
      if (!best || t.final_objective() < best->final_objective()) {
        best = std::move(t);
        best_lr = lr;
      }
    } catch (const DomainError&) {
      grid.push_back({{"lr", lr}, {"final_nll", nullptr}});
    }
  }
  if (!best) throw Error("every learning rate in the grid diverged");
  meta["lr"] = best_lr;
  meta["grid"] = grid;
  return std::move(*best);
}

void add_standard_jobs(std::vector<Job>& jobs, const ExperimentConfig& cfg, std::shared_ptr<const Dataset> data,
                       const std::string& prefix, const std::vector<std::string>& which) {
  const MixtureSpec spec = MixtureSpec::logistic_ridge(cfg.rho);
  const StoppingRule stop{cfg.iterations, 0.0, 0.0};
  const std::string fp = prefix.empty() ? "" : prefix + "_";
  const std::string mp = prefix.empty() ? "" : prefix + "/";
  for (const std::string& w : which) {
    Job j;
    j.data = data;
    if (w == "smem") {
      j.file = fp + "smem";
      j.method = mp + "SM-EM";
      j.run = [=](json&) { return run_smem(*data, spec, stop); };
    } else if (w == "smem_nesterov") {
      j.file = fp + "smem_nesterov";
      j.method = mp + "SM-EM+Nesterov";
      j.run = [=](json&) { return run_smem_nesterov(*data, spec, stop); };
    } else if (w == "adam") {
      j.file = fp + "adam";
      j.method = mp + "Adam";
      j.run = [=](json& meta) {
        meta["lr"] = cfg.adam.lr;
        return run_baseline(*data, spec, adam_config(cfg.adam), baseline_options(cfg));
      };
    } else if (w == "adam_tuned") {
      j.file = fp + "adam_tuned";
      j.method = mp + "Adam*";
      j.run = [=](json& meta) {
        return grid_search(*data, spec, cfg, [&](double lr) { return OptimizerConfig(adam_config(cfg.adam, lr)); }, meta);
      };
    } else if (w == "sgd_tuned") {
      j.file = fp + "sgd_momentum_tuned";
      j.method = mp + "SGD+Momentum*";
      j.run = [=](json& meta) {
        meta["momentum"] = cfg.momentum.momentum;
        return grid_search(*data, spec, cfg,
                           [&](double lr) { return OptimizerConfig(momentum_config(cfg.momentum, lr)); }, meta);
      };
    } else if (w == "prm" || w == "prm_nesterov") {
      const bool nest = w == "prm_nesterov";
      j.file = fp + w;
      j.method = mp + (nest ? "PRM+Nesterov" : "PRM");
      j.run = [=](json& meta) {
        meta["c"] = cfg.prm.c;
        meta["batch_size"] = cfg.prm.batch_size;
        if (nest) meta["momentum"] = cfg.prm.momentum;
        return run_baseline(*data, spec, prm_config(cfg.prm, nest), baseline_options(cfg));
      };
    } else {
      throw Error("unknown method " + w);
    }
    jobs.push_back(std::move(j));
  }
}

void run_jobs(const std::vector<Job>& jobs, std::size_t threads, ExperimentResult& result) {
  std::vector<JobOutput> outs(jobs.size());
  std::vector<std::function<void()>> tasks;
  for (std::size_t k = 0; k < jobs.size(); ++k)
    tasks.push_back([&, k] { outs[k].trace = jobs[k].run(outs[k].meta); });
  run_parallel(std::move(tasks), threads);
  for (std::size_t k = 0; k < jobs.size(); ++k) {
    RunTrace& t = outs[k].trace;
    t.method = jobs[k].method;
    SummaryRow row;
    row.method = jobs[k].method;
    row.final_nll = t.final_objective();
    row.accuracy = accuracy(*jobs[k].data, t.beta);
    row.elapsed_s = t.total_seconds();
    row.meta = outs[k].meta.dump();
    result.summary.push_back(std::move(row));
    result.traces.push_back({"trace_" + jobs[k].file + ".csv", std::move(t)});
  }
}

std::shared_ptr<const Dataset> load(const ExperimentConfig& cfg, const std::string& preset) {
  return std::make_shared<const Dataset>(make_dataset(resolve_preset(cfg, preset)));
}

void add_gain(ExperimentResult& result, const std::string& base, const std::string& accel) {
  const SummaryRow* b = nullptr;
  for (const auto& r : result.summary)
    if (r.method == base) b = &r;
  for (auto& r : result.summary) {
    if (r.method != accel || !b) continue;
    json meta = json::parse(r.meta);
    meta["gain_pct"] = 100.0 * (1.0 - r.final_nll / b->final_nll);
    r.meta = meta.dump();
  }
}

ExperimentResult run_regpath(const ExperimentConfig& cfg) {
  ExperimentResult result;
  const auto data = load(cfg, cfg.presets.front());
  const MixtureSpec spec = MixtureSpec::logistic_ridge(cfg.rho);
  const std::size_t k = cfg.regpath.count;
  std::vector<double> penalties(k);
  for (std::size_t i = 0; i < k; ++i) {
    const double frac = k == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(k - 1);
    penalties[i] = std::exp(std::log(cfg.regpath.hi) + frac * (std::log(cfg.regpath.lo) - std::log(cfg.regpath.hi)));
  }
  const StoppingRule stop{cfg.regpath.max_sweeps, cfg.regpath.rel_tol, 0.0};

  const auto t0 = Clock::now();
  const std::vector<PathPoint> path = reg_path(*data, spec, penalties, stop);
  const double amortized_s = std::chrono::duration<double>(Clock::now() - t0).count();

  std::vector<RunTrace> fits;
  std::vector<double> fit_s;
  for (double rho : penalties) {
    const auto f0 = Clock::now();
    fits.push_back(run_smem(*data, MixtureSpec::logistic_ridge(rho), stop));
    fit_s.push_back(std::chrono::duration<double>(Clock::now() - f0).count());
  }

  result.path_header = {"penalty",  "nll_amortized", "nll_individual", "abs_diff",     "sweeps_amortized",
                        "iters_individual", "dof", "gcv", "log_evidence", "elapsed_s_amortized",
                        "elapsed_s_individual"};
  std::vector<double> gcv(k);
  double max_diff = 0.0;
  double mean_amortized = 0.0, mean_individual = 0.0, acc_amortized = 0.0, acc_individual = 0.0;
  double individual_total = 0.0;
  RunTrace amortized_trace;
  amortized_trace.method = "SM-EM path (amortized)";
  RunTrace individual_trace;
  individual_trace.method = "SM-EM path (individual)";
  for (std::size_t i = 0; i < k; ++i) {
    const double indiv = fits[i].final_objective();
    const double diff = std::abs(path[i].objective - indiv);
    max_diff = std::max(max_diff, diff);
    const RidgeDiagnostics diag = ridge_diagnostics(*data, penalties[i], path[i].beta);
    gcv[i] = diag.gcv;
    individual_total += fit_s[i];
    mean_amortized += path[i].objective / static_cast<double>(k);
    mean_individual += indiv / static_cast<double>(k);
    acc_amortized += accuracy(*data, path[i].beta) / static_cast<double>(k);
    acc_individual += accuracy(*data, fits[i].beta) / static_cast<double>(k);
    result.path_rows.push_back({format_double(penalties[i]), format_double(path[i].objective), format_double(indiv),
                                format_double(diff), std::to_string(path[i].sweeps),
                                std::to_string(fits[i].records.size() - 1), format_double(diag.dof),
                                format_double(diag.gcv), format_double(diag.log_evidence),
                                format_double(path[i].elapsed_s), format_double(individual_total)});
    TraceRecord ra{i, path[i].objective, path[i].elapsed_s, data->p(), 0.0, {penalties[i]}};
    TraceRecord ri{i, indiv, individual_total, data->p(), 0.0, {penalties[i]}};
    amortized_trace.records.push_back(ra);
    individual_trace.records.push_back(ri);
  }
  amortized_trace.sample_labels = individual_trace.sample_labels = {"penalty"};
  const std::size_t pick = gcv_argmin(gcv, penalties);

  json meta_a = {{"penalties", k}, {"max_abs_nll_diff", max_diff}, {"gcv_penalty", penalties[pick]},
                 {"statistic", "mean over the path"}};
  json meta_i = {{"penalties", k}, {"statistic", "mean over the path"}};
  result.summary.push_back({amortized_trace.method, mean_amortized, acc_amortized, amortized_s, meta_a.dump()});
  result.summary.push_back({individual_trace.method, mean_individual, acc_individual, individual_total, meta_i.dump()});
  result.traces.push_back({"trace_path_amortized.csv", std::move(amortized_trace)});
  result.traces.push_back({"trace_path_individual.csv", std::move(individual_trace)});
  return result;
}

}  // namespace

std::vector<std::string> experiment_names() {
  return {"convergence", "sensitivity", "conditioning", "nesterov", "highdim", "regpath", "activeset", "weights"};
}

ExperimentConfig default_config(const std::string& experiment) {
  ExperimentConfig c;
  c.experiment = experiment;
  c.sensitivity_lrs = default_sensitivity_lrs();
  if (experiment == "convergence" || experiment == "sensitivity" || experiment == "weights") {
    c.presets = {"conv50"};
  } else if (experiment == "conditioning") {
    c.presets = {"conv50", "cond500"};
  } else if (experiment == "nesterov") {
    c.presets = {"nesterov450"};
    c.iterations = 100;
  } else if (experiment == "highdim") {
    c.presets = {"highdim20", "highdim50", "highdim100", "highdim200"};
  } else if (experiment == "regpath") {
    c.presets = {"regpath"};
  } else if (experiment == "activeset") {
    c.presets = {"activeset"};
  } else {
    throw ParseError("config: field 'experiment': unknown experiment '" + experiment + "'");
  }
  return c;
}

ExperimentConfig validate_config(const std::string& text) {
  json doc;
  try {
    if (text.find_first_not_of(" \t\r\n") != std::string::npos) doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: ") + e.what());
  }
  if (doc.is_null()) doc = json::object();
  FieldReader r(doc, "", text);
  std::string experiment;
  r.string("experiment", experiment);
  if (experiment.empty()) r.fail("experiment", "required field is missing");
  const auto names = experiment_names();
  if (std::find(names.begin(), names.end(), experiment) == names.end())
    r.fail("experiment", "unknown experiment '" + experiment + "'");

  ExperimentConfig c = default_config(experiment);
  r.strings("presets", c.presets);
  r.optional_count("seed", c.seed);
  r.optional_count("n", c.n);
  r.optional_count("p", c.p);
  r.optional_number("cond", c.cond);
  r.optional_number("signal", c.signal);
  r.count("iterations", c.iterations);
  r.number("rho", c.rho);
  r.count("batch_size", c.batch_size);
  r.count("optimizer_seed", c.optimizer_seed);
  {
    FieldReader a = r.object("adam");
    a.number("lr", c.adam.lr);
    a.number("beta1", c.adam.beta1);
    a.number("beta2", c.adam.beta2);
    a.number("eps", c.adam.eps);
    a.number("weight_decay", c.adam.weight_decay);
    a.boolean("decoupled", c.adam.decoupled);
    a.finish();
    check(c.adam.lr > 0.0, a, "lr", "must be positive");
    check(c.adam.beta1 >= 0.0 && c.adam.beta1 < 1.0, a, "beta1", "must lie in [0, 1)");
    check(c.adam.beta2 >= 0.0 && c.adam.beta2 < 1.0, a, "beta2", "must lie in [0, 1)");
    check(c.adam.eps > 0.0, a, "eps", "must be positive");
    check(c.adam.weight_decay >= 0.0, a, "weight_decay", "must be nonnegative");
  }
  r.numbers("lr_grid", c.lr_grid);
  r.numbers("sensitivity_lrs", c.sensitivity_lrs);
  {
    FieldReader m = r.object("momentum");
    m.number("momentum", c.momentum.momentum);
    m.string("mode", c.momentum.mode);
    m.finish();
    check(c.momentum.momentum >= 0.0 && c.momentum.momentum < 1.0, m, "momentum", "must lie in [0, 1)");
    check(c.momentum.mode == "heavy_ball" || c.momentum.mode == "nesterov", m, "mode",
          "must be 'heavy_ball' or 'nesterov'");
  }
  {
    FieldReader p = r.object("prm");
    p.number("c", c.prm.c);
    p.count("batch_size", c.prm.batch_size);
    p.number("momentum", c.prm.momentum);
    p.finish();
    check(c.prm.c > 0.0, p, "c", "must be positive");
    check(c.prm.batch_size >= 1, p, "batch_size", "must be at least 1");
    check(c.prm.momentum >= 0.0 && c.prm.momentum < 1.0, p, "momentum", "must lie in [0, 1)");
  }
  {
    FieldReader g = r.object("regpath");
    g.count("count", c.regpath.count);
    g.number("lo", c.regpath.lo);
    g.number("hi", c.regpath.hi);
    g.count("max_sweeps", c.regpath.max_sweeps);
    g.number("rel_tol", c.regpath.rel_tol);
    g.finish();
    check(c.regpath.count >= 1, g, "count", "must be at least 1");
    check(c.regpath.lo > 0.0, g, "lo", "must be positive");
    check(c.regpath.hi >= c.regpath.lo, g, "hi", "must be at least lo");
    check(c.regpath.max_sweeps >= 1, g, "max_sweeps", "must be at least 1");
    check(c.regpath.rel_tol >= 0.0, g, "rel_tol", "must be nonnegative");
  }
  r.number("lasso_tau", c.lasso_tau);
  r.counts("sample_obs", c.sample_obs);
  r.counts("sample_coords", c.sample_coords);
  if (const json* v = r.find("out")) {
    if (v->is_null()) {
      c.out.reset();
    } else {
      std::string dir;
      r.string("out", dir);
      check(!dir.empty(), r, "out", "must not be empty");
      c.out = dir;
    }
  }
  r.finish();

  check(!c.presets.empty(), r, "presets", "must name at least one preset");
  for (const auto& name : c.presets) {
    try {
      preset_info(name);
    } catch (const UnknownPreset&) {
      r.fail("presets", "unknown preset '" + name + "'");
    }
  }
  check(c.iterations >= 1, r, "iterations", "must be at least 1");
  check(c.rho >= 0.0, r, "rho", "must be nonnegative");
  check(c.batch_size >= 1, r, "batch_size", "must be at least 1");
  check(!c.lr_grid.empty(), r, "lr_grid", "must not be empty");
  for (double lr : c.lr_grid) check(lr > 0.0, r, "lr_grid", "learning rates must be positive");
  for (double lr : c.sensitivity_lrs) check(lr > 0.0, r, "sensitivity_lrs", "learning rates must be positive");
  check(c.lasso_tau > 0.0, r, "lasso_tau", "must be positive");
  check(!c.n || *c.n >= 1, r, "n", "must be at least 1");
  check(!c.p || *c.p >= 1, r, "p", "must be at least 1");
  check(!c.cond || *c.cond >= 1.0, r, "cond", "must be at least 1");
  check(!c.signal || *c.signal >= 0.0, r, "signal", "must be nonnegative");
  if (c.n && c.p) check(*c.n >= *c.p, r, "n", "must be at least p");
  return c;
}

std::string serialize_config(const ExperimentConfig& c) {
  json j;
  j["experiment"] = c.experiment;
  j["presets"] = c.presets;
  j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
  j["n"] = c.n ? json(*c.n) : json(nullptr);
  j["p"] = c.p ? json(*c.p) : json(nullptr);
  j["cond"] = c.cond ? json(*c.cond) : json(nullptr);
  j["signal"] = c.signal ? json(*c.signal) : json(nullptr);
  j["iterations"] = c.iterations;
  j["rho"] = c.rho;
  j["batch_size"] = c.batch_size;
  j["optimizer_seed"] = c.optimizer_seed;
  j["adam"] = {{"lr", c.adam.lr},
               {"beta1", c.adam.beta1},
               {"beta2", c.adam.beta2},
               {"eps", c.adam.eps},
               {"weight_decay", c.adam.weight_decay},
               {"decoupled", c.adam.decoupled}};
  j["lr_grid"] = c.lr_grid;
  j["sensitivity_lrs"] = c.sensitivity_lrs;
  j["momentum"] = {{"momentum", c.momentum.momentum}, {"mode", c.momentum.mode}};
  j["prm"] = {{"c", c.prm.c}, {"batch_size", c.prm.batch_size}, {"momentum", c.prm.momentum}};
  j["regpath"] = {{"count", c.regpath.count},
                  {"lo", c.regpath.lo},
                  {"hi", c.regpath.hi},
                  {"max_sweeps", c.regpath.max_sweeps},
                  {"rel_tol", c.regpath.rel_tol}};
  j["lasso_tau"] = c.lasso_tau;
  j["sample_obs"] = c.sample_obs;
  j["sample_coords"] = c.sample_coords;
  j["out"] = c.out ? json(*c.out) : json(nullptr);
  return j.dump(2);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, std::size_t threads) {
  ExperimentResult result;
  std::vector<Job> jobs;
  const std::string& e = cfg.experiment;
  if (e == "regpath") return run_regpath(cfg);

  if (e == "convergence") {
    add_standard_jobs(jobs, cfg, load(cfg, cfg.presets.front()), "", {"smem", "adam", "adam_tuned", "sgd_tuned", "prm"});
  } else if (e == "sensitivity") {
    const auto data = load(cfg, cfg.presets.front());
    add_standard_jobs(jobs, cfg, data, "", {"smem"});
    const MixtureSpec spec = MixtureSpec::logistic_ridge(cfg.rho);
    for (std::size_t k = 0; k < cfg.sensitivity_lrs.size(); ++k) {
      const double lr = cfg.sensitivity_lrs[k];
      Job j;
      j.data = data;
      j.file = "adam_lr" + std::to_string(k);
      j.method = "Adam(lr=" + format_double(lr) + ")";
      j.run = [=](json& meta) {
        meta["lr"] = lr;
        return run_baseline(*data, spec, adam_config(cfg.adam, lr), baseline_options(cfg));
      };
      jobs.push_back(std::move(j));
    }
  } else if (e == "conditioning") {
    for (const auto& preset : cfg.presets)
      add_standard_jobs(jobs, cfg, load(cfg, preset), preset, {"smem", "prm", "adam", "adam_tuned"});
  } else if (e == "nesterov") {
    add_standard_jobs(jobs, cfg, load(cfg, cfg.presets.front()), "", {"smem", "smem_nesterov", "prm", "prm_nesterov"});
  } else if (e == "highdim") {
    for (const auto& preset : cfg.presets)
      add_standard_jobs(jobs, cfg, load(cfg, preset), preset, {"smem", "smem_nesterov", "adam_tuned", "adam", "sgd_tuned"});
  } else if (e == "activeset") {
    const auto data = load(cfg, cfg.presets.front());
    const MixtureSpec spec = MixtureSpec::logistic_lasso(cfg.lasso_tau);
    const StoppingRule stop{cfg.iterations, 0.0, 0.0};
    Job j;
    j.data = data;
    j.file = "smem_lasso";
    j.method = "SM-EM (Lasso)";
    j.run = [=](json& meta) {
      RunTrace t = run_smem(*data, spec, stop);
      meta["tau"] = cfg.lasso_tau;
      meta["initial_active"] = t.records.front().active_size;
      meta["final_active"] = t.records.back().active_size;
      return t;
    };
    jobs.push_back(std::move(j));
  } else if (e == "weights") {
    const auto data = load(cfg, cfg.presets.front());
    const MixtureSpec spec = MixtureSpec::logistic_ridge(cfg.rho);
    const StoppingRule stop{cfg.iterations, 0.0, 0.0};
    for (std::size_t i : cfg.sample_obs)
      if (i >= data->n()) throw Error("sample_obs index " + std::to_string(i) + " is out of range");
    for (std::size_t j : cfg.sample_coords)
      if (j >= data->p()) throw Error("sample_coords index " + std::to_string(j) + " is out of range");
    Job a;
    a.data = data;
    a.file = "smem";
    a.method = "SM-EM";
    a.run = [=](json& meta) {
      meta["sampled"] = "omega";
      RunOptions opt;
      opt.sample_obs = cfg.sample_obs;
      return run_smem(*data, spec, stop, opt);
    };
    Job b;
    b.data = data;
    b.file = "adam";
    b.method = "Adam";
    b.run = [=](json& meta) {
      meta["sampled"] = "v";
      meta["lr"] = cfg.adam.lr;
      return run_baseline(*data, spec, adam_config(cfg.adam), baseline_options(cfg, cfg.sample_coords));
    };
    jobs.push_back(std::move(a));
    jobs.push_back(std::move(b));
  } else {
    throw Error("unknown experiment " + e);
  }
  run_jobs(jobs, threads, result);
  if (e == "nesterov") {
    add_gain(result, "SM-EM", "SM-EM+Nesterov");
    add_gain(result, "PRM", "PRM+Nesterov");
  }
  if (e == "highdim")
    for (const auto& preset : cfg.presets) add_gain(result, preset + "/SM-EM", preset + "/SM-EM+Nesterov");
  return result;
}

void write_trace_csv(std::ostream& out, const RunTrace& trace) {
  out << "iter,objective,elapsed_s,active_set_size,method,extra\n";
  for (const auto& r : trace.records) {
    json extra = json::object();
    for (std::size_t k = 0; k < r.samples.size() && k < trace.sample_labels.size(); ++k)
      extra[trace.sample_labels[k]] = r.samples[k];
    out << r.iter << ',' << format_double(r.objective) << ',' << format_double(r.elapsed_s) << ',' << r.active_size
        << ',' << csv_field(trace.method) << ',' << csv_field(extra.dump()) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "method,final_nll,accuracy,elapsed_s,meta\n";
  for (const auto& r : rows)
    out << csv_field(r.method) << ',' << format_double(r.final_nll) << ',' << format_double(r.accuracy) << ','
        << format_double(r.elapsed_s) << ',' << csv_field(r.meta) << '\n';
}

void write_results(const ExperimentResult& result, const ExperimentConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream out(dir / name);
    if (!out) throw Error("cannot write " + (dir / name).string());
    return out;
  };
  for (const auto& t : result.traces) {
    auto out = open(t.file);
    write_trace_csv(out, t.trace);
  }
  {
    auto out = open("summary.csv");
    write_summary_csv(out, result.summary);
  }
  if (!result.path_header.empty()) {
    auto out = open("path.csv");
    for (std::size_t k = 0; k < result.path_header.size(); ++k) out << (k ? "," : "") << result.path_header[k];
    out << '\n';
    for (const auto& row : result.path_rows) {
      for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << row[k];
      out << '\n';
    }
  }
  auto out = open("config.json");
  out << serialize_config(config) << '\n';
}

void run_parallel(std::vector<std::function<void()>> tasks, std::size_t threads) {
  threads = std::max<std::size_t>(1, std::min(threads, tasks.size()));
  if (threads == 1) {
    for (auto& t : tasks) t();
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t k = next++; k < tasks.size(); k = next++) {
      try {
        tasks[k]();
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace smem
