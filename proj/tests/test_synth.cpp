#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "smem/errors.hpp"
#include "smem/linalg.hpp"
#include "smem/synth.hpp"

using namespace smem;

namespace {

double raw_cond(const PresetInfo& info, std::uint64_t seed) {
  const DenseMatrix x = gen_design_raw(info.n, info.p, info.cond, seed);
  return spectral_cond(matmul(x.transpose(), x));
}

}  // namespace

TEST_CASE("raw design condition number is within 10% of target") {
  CHECK(std::abs(raw_cond(PresetInfo{"flat", 30, 30, 1.0, 1, 2.0, 1.0}, 1) - 1.0) <= 0.1);
  for (const std::string name : {"conv50", "cond500", "nesterov450", "highdim20", "highdim50"}) {
    const PresetInfo info = preset_info(name);
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const double c = raw_cond(info, seed);
      CHECK(std::abs(c - info.cond) <= 0.1 * info.cond);
    }
  }
  for (const std::string name : {"regpath", "highdim200", "activeset"}) {
    const PresetInfo info = preset_info(name);
    for (std::uint64_t seed = 1; seed <= 2; ++seed) CHECK(std::abs(raw_cond(info, seed) - info.cond) <= 0.1 * info.cond);
  }
  const double c500 = raw_cond(preset_info("cond500"), 102);
  CHECK(c500 >= 450.0);
  CHECK(c500 <= 550.0);
}

TEST_CASE("standardized columns") {
  const DenseMatrix x = gen_design(400, 12, 50.0, 3);
  for (std::size_t j = 0; j < x.cols(); ++j) {
    double mean = 0.0, var = 0.0;
    for (std::size_t i = 0; i < x.rows(); ++i) mean += x(i, j);
    mean /= static_cast<double>(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) var += (x(i, j) - mean) * (x(i, j) - mean);
    var /= static_cast<double>(x.rows());
    CHECK(std::abs(mean) < 1e-10);
    CHECK(std::abs(var - 1.0) < 1e-10);
  }
  DenseMatrix constant(5, 1, {2.0, 2.0, 2.0, 2.0, 2.0});
  CHECK_THROWS_AS(standardize_columns(constant), DomainError);
}

TEST_CASE("design shape and determinism") {
  CHECK_THROWS_AS(gen_design(3, 5, 10.0, 1), InvalidShape);
  CHECK(gen_design(50, 6, 20.0, 9) == gen_design(50, 6, 20.0, 9));
  CHECK(gen_design(50, 6, 20.0, 9) != gen_design(50, 6, 20.0, 10));
}

TEST_CASE("gen_beta_true scaling and sparsity") {
  const DenseMatrix x = gen_design(300, 40, 10.0, 4);
  const Vector beta = gen_beta_true(x, 2.0, 0.25, 4);
  CHECK(norm2(matvec(x, beta)) / std::sqrt(300.0) == doctest::Approx(2.0).epsilon(1e-12));
  std::size_t nonzero = 0;
  for (double b : beta) nonzero += b != 0.0;
  CHECK(nonzero == 10);
}

TEST_CASE("gen_logistic examples") {
  const DenseMatrix x = gen_design(2000, 3, 5.0, 1);
  const Vector zero(3, 0.0);
  const Vector y = gen_logistic(x, zero, 7);
  double mean = 0.0;
  for (double v : y) {
    CHECK((v == 0.0 || v == 1.0));
    mean += v;
  }
  mean /= 2000.0;
  CHECK(mean >= 0.45);
  CHECK(mean <= 0.55);
  CHECK(gen_logistic(x, zero, 7) == y);

  const DenseMatrix ones(2000, 1, Vector(2000, 1.0));
  const Vector sat = gen_logistic(ones, Vector{20.0}, 7);
  double frac = 0.0;
  for (double v : sat) frac += v;
  CHECK(frac / 2000.0 >= 0.99);

  CHECK_THROWS_AS(gen_logistic(x, Vector{1.0}, 1), InvalidShape);
}

TEST_CASE("preset table") {
  const PresetInfo n450 = preset_info("nesterov450");
  CHECK(n450.n == 2000);
  CHECK(n450.p == 20);
  CHECK(n450.cond == 450.0);
  const PresetInfo h = preset_info("highdim(200)");
  CHECK(h.n == 5000);
  CHECK(h.p == 200);
  CHECK(h.cond == 500.0);
  CHECK(preset_info("highdim200").seed == h.seed);
  const PresetInfo r = preset_info("regpath");
  CHECK(r.n == 5000);
  CHECK(r.p == 200);
  CHECK(r.cond == 200.0);
  CHECK(preset_info("activeset").p == 500);
  CHECK(preset_info("conv50").cond == 50.0);
  CHECK(preset_info("cond500").cond == 500.0);
  for (const std::string& name : preset_names()) CHECK_NOTHROW(preset_info(name));
  CHECK_THROWS_AS(preset_info("cond5000"), UnknownPreset);
  CHECK_THROWS_AS(preset_info("highdim()"), UnknownPreset);
  CHECK_THROWS_AS(make_preset("nope"), UnknownPreset);
}

TEST_CASE("make_preset is bit-deterministic") {
  const Dataset a = make_preset("conv50");
  const Dataset b = make_preset("conv50");
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  CHECK(a.beta_true == b.beta_true);
  CHECK(a.seed == 101);
  CHECK(make_preset("conv50", 5).y != a.y);
  for (double v : a.y) CHECK((v == 0.0 || v == 1.0));
}

TEST_CASE("dataset CSV round trip") {
  const Dataset d = make_dataset(PresetInfo{"small", 40, 4, 10.0, 77, 2.0, 1.0});
  const auto dir = std::filesystem::temp_directory_path() / "smem_synth_roundtrip";
  std::filesystem::remove_all(dir);
  write_dataset(d, dir);
  const Dataset r = read_dataset(dir / "X.csv", dir / "y.csv");
  CHECK(r.x == d.x);
  CHECK(r.y == d.y);
  CHECK(r.m == d.m);
  CHECK(r.beta_true == d.beta_true);
  CHECK(r.seed == 77);
  CHECK(r.target_cond == 10.0);
  CHECK(r.name == "small");
  std::filesystem::remove_all(dir);
}
