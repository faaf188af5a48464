#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "csv_util.hpp"
#include "smem/bench.hpp"
#include "smem/errors.hpp"

using namespace smem;

namespace {

std::string small_config(const std::string& experiment) {
  nlohmann::json j{{"experiment", experiment}, {"n", 240}, {"p", 6}, {"iterations", 8}, {"batch_size", 40}};
  if (experiment == "highdim") {
    j["presets"] = {"highdim4", "highdim6"};
    j.erase("p");
  }
  if (experiment == "sensitivity") j["sensitivity_lrs"] = {1e-3, 1e-2};
  if (experiment == "regpath") j["regpath"] = {{"count", 4}, {"max_sweeps", 200}};
  if (experiment == "activeset") j["p"] = 12;
  if (experiment == "convergence" || experiment == "conditioning") j["lr_grid"] = {1e-3, 1e-2};
  return j.dump();
}

std::string error_of(const std::string& text) {
  try {
    validate_config(text);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("validate_config examples") {
  for (const std::string empty : {"", "  \n", "{}"}) {
    const std::string msg = error_of(empty);
    CHECK(msg.find("experiment") != std::string::npos);
    CHECK(msg.find("required") != std::string::npos);
  }
  const std::string typo = error_of("{\n  \"experiment\": \"convergence\",\n  \"learning_rat\": 0.1\n}");
  CHECK(typo.find("learning_rat") != std::string::npos);
  CHECK(typo.find("line 3") != std::string::npos);
  CHECK(error_of(R"({"experiment": "nesterov", "adam": {"lr": -1}})").find("adam.lr") != std::string::npos);
  CHECK(error_of(R"({"experiment": "nesterov", "iterations": "ten"})").find("iterations") != std::string::npos);
  CHECK(error_of(R"({"experiment": "plots"})").find("unknown experiment") != std::string::npos);
  CHECK(!error_of("{not json").empty());

  const ExperimentConfig c = validate_config(R"({"experiment": "nesterov"})");
  CHECK(c.presets == std::vector<std::string>{"nesterov450"});
  CHECK(c.iterations == 100);
  CHECK(c.adam.beta1 == 0.9);
  CHECK(c.adam.beta2 == 0.999);
  CHECK(c.adam.eps == 1e-8);
  CHECK(c.lr_grid.size() == 6);
}

TEST_CASE("nesterov config round-trips") {
  const ExperimentConfig full = validate_config(R"({
    "experiment": "nesterov", "presets": ["nesterov450"], "seed": 7, "iterations": 100, "rho": 0.02,
    "adam": {"lr": 0.003, "decoupled": true, "weight_decay": 0.01},
    "momentum": {"momentum": 0.8, "mode": "nesterov"}, "prm": {"c": 0.4, "batch_size": 30, "momentum": 0.6},
    "lr_grid": [0.001, 0.01], "sample_obs": [1, 2], "signal": 3.5
  })");
  const std::string once = serialize_config(full);
  const ExperimentConfig again = validate_config(once);
  CHECK(again == full);
  CHECK(serialize_config(again) == once);
  CHECK(validate_config(serialize_config(default_config("regpath"))) == default_config("regpath"));
}

TEST_CASE("trace CSV schema") {
  const ExperimentConfig cfg = validate_config(small_config("weights"));
  const ExperimentResult r = run_experiment(cfg);
  REQUIRE(!r.traces.empty());
  for (const NamedTrace& t : r.traces) {
    std::ostringstream out;
    write_trace_csv(out, t.trace);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "iter,objective,elapsed_s,active_set_size,method,extra");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
      const csvutil::Row cells = csvutil::split(line);
      REQUIRE(cells.size() == 6);
      CHECK(std::stoul(cells[0]) == rows);
      CHECK(std::isfinite(std::stod(cells[1])));
      CHECK(std::stod(cells[2]) >= 0.0);
      CHECK(std::stoul(cells[3]) <= 6);
      CHECK(!cells[4].empty());
      if (!cells[5].empty()) CHECK(nlohmann::json::parse(cells[5]).is_object());
      ++rows;
    }
    CHECK(rows == t.trace.records.size());
  }
  std::ostringstream summary;
  write_summary_csv(summary, r.summary);
  CHECK(summary.str().rfind("method,final_nll,accuracy,elapsed_s,meta\n", 0) == 0);
}

TEST_CASE("nesterov experiment row set") {
  const ExperimentResult r = run_experiment(validate_config(small_config("nesterov")));
  std::vector<std::string> methods;
  for (const SummaryRow& row : r.summary) methods.push_back(row.method);
  CHECK(methods == std::vector<std::string>{"SM-EM", "SM-EM+Nesterov", "PRM", "PRM+Nesterov"});
}

TEST_CASE("sensitivity experiment has one row per learning rate plus SM-EM") {
  const ExperimentResult r = run_experiment(validate_config(small_config("sensitivity")));
  REQUIRE(r.summary.size() == 3);
  CHECK(r.summary[0].method == "SM-EM");
  CHECK(r.summary[1].method.rfind("Adam(lr=", 0) == 0);
}

TEST_CASE("every experiment is reproducible apart from timing") {
  const auto root = std::filesystem::temp_directory_path() / "smem_bench_determinism";
  std::filesystem::remove_all(root);
  for (const std::string& name : experiment_names()) {
    CAPTURE(name);
    const ExperimentConfig cfg = validate_config(small_config(name));
    write_results(run_experiment(cfg, 1), cfg, root / (name + "_a"));
    write_results(run_experiment(cfg, 3), cfg, root / (name + "_b"));
    CHECK(std::filesystem::exists(root / (name + "_a") / "summary.csv"));
    CHECK(csvutil::diff_dirs(root / (name + "_a"), root / (name + "_b")).empty());
  }
  std::filesystem::remove_all(root);
}

TEST_CASE("run_parallel rethrows") {
  std::vector<std::function<void()>> tasks{[] {}, [] { throw DomainError("boom"); }, [] {}};
  CHECK_THROWS_AS(run_parallel(tasks, 2), DomainError);
}
