// smem: benchmark harness, single fits and dataset generation.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "smem/bench.hpp"
#include "smem/engine.hpp"
#include "smem/errors.hpp"
#include "smem/synth.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw smem::Error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

smem::LossFamily parse_loss(const std::string& name, double q) {
  if (name == "logistic") return smem::LossFamily::logistic();
  if (name == "squared") return smem::LossFamily::squared();
  if (name == "check") return smem::LossFamily::check(q);
  if (name == "hinge") return smem::LossFamily::hinge();
  throw smem::Error("unknown loss '" + name + "' (logistic, squared, check, hinge)");
}

smem::PenaltyFamily parse_penalty(const std::string& name, double tau, double a, double gamma) {
  if (name == "ridge") return smem::PenaltyFamily::ridge();
  if (name == "lasso") return smem::PenaltyFamily::lasso(tau);
  if (name == "double_pareto") return smem::PenaltyFamily::double_pareto(a, gamma, tau);
  throw smem::Error("unknown penalty '" + name + "' (ridge, lasso, double_pareto)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scale-mixture EM solvers and benchmark harness"};
  app.require_subcommand(1);

  auto* bench = app.add_subcommand("bench", "Run one experiment and write CSV results");
  std::string experiment, config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  bench->add_option("experiment", experiment, "Experiment name")
      ->required()
      ->check(CLI::IsMember(smem::experiment_names()));
  bench->add_option("--config", config_path, "JSON configuration file");
  bench->add_option("--out", out_dir, "Output directory (default: $SMEM_OUT_DIR)");
  bench->add_option("--seed", seed, "Override the data seed of every preset");
  bench->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  auto* fit = app.add_subcommand("fit", "Fit one model with SM-EM");
  std::string data_arg, loss_name = "logistic", penalty_name = "ridge", trace_path;
  double rho = 0.01, tau = 1.0, q = 0.5, dp_a = 1.0, dp_gamma = 1.0, rel_tol = 0.0;
  std::size_t max_iter = 100;
  bool nesterov = false;
  fit->add_option("--data", data_arg, "X.csv,y.csv")->required();
  fit->add_option("--loss", loss_name, "logistic, squared, check or hinge");
  fit->add_option("--penalty", penalty_name, "ridge, lasso or double_pareto");
  fit->add_option("--rho", rho, "Ridge precision");
  fit->add_option("--tau", tau, "Global scale for lasso and double_pareto");
  fit->add_option("--q", q, "Quantile level for the check loss");
  fit->add_option("--dp-a", dp_a, "Double-Pareto scale");
  fit->add_option("--dp-gamma", dp_gamma, "Double-Pareto shape");
  fit->add_option("--max-iter", max_iter, "Iteration budget");
  fit->add_option("--rel-tol", rel_tol, "Relative objective tolerance");
  fit->add_flag("--nesterov", nesterov, "Use the accelerated variant");
  fit->add_option("--trace", trace_path, "Write the per-iteration trace CSV here");

  auto* datagen = app.add_subcommand("datagen", "Write a preset dataset as CSV");
  std::string preset, gen_out;
  std::optional<std::uint64_t> gen_seed;
  datagen->add_option("--preset", preset, "Preset name")->required();
  datagen->add_option("--out", gen_out, "Output directory")->required();
  datagen->add_option("--seed", gen_seed, "Override the preset seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*bench) {
      smem::ExperimentConfig cfg = config_path.empty()
                                       ? smem::validate_config("{\"experiment\": \"" + experiment + "\"}")
                                       : smem::validate_config(read_file(config_path));
      if (cfg.experiment != experiment)
        throw smem::Error("config names experiment '" + cfg.experiment + "' but '" + experiment + "' was requested");
      if (seed) cfg.seed = seed;
      std::string dir = out_dir;
      if (dir.empty() && cfg.out) dir = *cfg.out;
      if (dir.empty()) {
        const char* env = std::getenv("SMEM_OUT_DIR");
        if (!env || !*env) throw smem::Error("no output directory: pass --out or set SMEM_OUT_DIR");
        dir = env;
      }
      const smem::ExperimentResult result = smem::run_experiment(cfg, threads);
      smem::write_results(result, cfg, dir);
      smem::write_summary_csv(std::cout, result.summary);
    } else if (*fit) {
      const auto comma = data_arg.find(',');
      if (comma == std::string::npos) throw smem::Error("--data expects X.csv,y.csv");
      const smem::Dataset data = smem::read_dataset(data_arg.substr(0, comma), data_arg.substr(comma + 1));
      const smem::MixtureSpec spec = smem::MixtureSpec::make(parse_loss(loss_name, q),
                                                             parse_penalty(penalty_name, tau, dp_a, dp_gamma), rho);
      const smem::StoppingRule stop{max_iter, rel_tol, 0.0};
      smem::RunTrace trace = nesterov ? smem::run_smem_nesterov(data, spec, stop) : smem::run_smem(data, spec, stop);
      if (!trace_path.empty()) {
        std::ofstream out(trace_path);
        if (!out) throw smem::Error("cannot write " + trace_path);
        smem::write_trace_csv(out, trace);
      }
      nlohmann::ordered_json j;
      j["method"] = trace.method;
      j["objective"] = trace.final_objective();
      j["iterations"] = trace.records.size() - 1;
      j["converged"] = trace.converged;
      j["active_set_size"] = trace.records.back().active_size;
      if (spec.loss.is_classification()) j["accuracy"] = smem::accuracy(data, trace.beta);
      j["elapsed_s"] = trace.total_seconds();
      j["beta"] = trace.beta;
      std::cout << j.dump(2) << '\n';
    } else if (*datagen) {
      smem::write_dataset(smem::make_preset(preset, gen_seed), gen_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "smem: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
