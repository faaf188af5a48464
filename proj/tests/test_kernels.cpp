#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "smem/kernels.hpp"
#include "smem/prox.hpp"
#include "smem/random.hpp"

using namespace smem;

TEST_CASE("loss_value_grad examples") {
  const ValueGrad l = loss_value_grad(LossFamily::logistic(), 0.0, 1.0);
  CHECK(l.value == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(l.grad == doctest::Approx(0.5).epsilon(1e-15));

  const ValueGrad s = loss_value_grad(LossFamily::squared(), 3.0);
  CHECK(s.value == 4.5);
  CHECK(s.grad == 3.0);

  // ρ_q(θ) = ½|θ| + (q − ½)θ at q = 0.9, θ = −1: value 0.1 and slope −½ + 0.4.
  const ValueGrad c = loss_value_grad(LossFamily::check(0.9), -1.0);
  CHECK(c.value == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(c.grad == doctest::Approx(-0.1).epsilon(1e-15));
  CHECK(loss_value_grad(LossFamily::check(0.9), 0.0).grad == doctest::Approx(0.4).epsilon(1e-15));
}

TEST_CASE("obs_weight examples") {
  CHECK(obs_weight(LossFamily::logistic(), 0.0, 1.0) == 0.25);
  CHECK(obs_weight(LossFamily::logistic(), 2.0, 1.0) == doctest::Approx(std::tanh(1.0) / 4.0).epsilon(1e-15));
  CHECK(obs_weight(LossFamily::logistic(), 2.0, 1.0) == doctest::Approx(0.190399).epsilon(1e-6));
  CHECK(obs_weight(LossFamily::check(0.5), 0.25) == 4.0);
  CHECK(obs_weight(LossFamily::check(0.5), 0.0) == doctest::Approx(1e6).epsilon(1e-12));
  CHECK(obs_weight(LossFamily::squared(), 7.0) == 1.0);
  CHECK(obs_weight(LossFamily::hinge(), -0.5) == 2.0);
}

TEST_CASE("logistic weight is bounded by 1/4 and decreasing in |z|") {
  double prev = 0.25;
  for (int k = 1; k <= 4000; ++k) {
    const double z = 0.01 * k;
    const double w = obs_weight(LossFamily::logistic(), z, 1.0);
    CHECK(w > 0.0);
    CHECK(w <= 0.25);
    CHECK(w < prev);
    CHECK(w == obs_weight(LossFamily::logistic(), -z, 1.0));
    prev = w;
  }
  // Both sides of the Taylor switch match the series 1/4 − z²/48 + z⁴/480.
  for (double z : {0.5e-4, 0.99e-4, 1.01e-4, 2e-4}) {
    const double series = 0.25 - z * z / 48.0 + z * z * z * z / 480.0;
    CHECK(std::abs(obs_weight(LossFamily::logistic(), z, 1.0) - series) < 1e-15);
  }
}

TEST_CASE("gradient-to-weight identity for every loss") {
  Rng rng(17, 1);
  for (const LossFamily& f : {LossFamily::logistic(), LossFamily::squared(), LossFamily::check(0.3),
                              LossFamily::check(0.9), LossFamily::hinge()}) {
    const WeightKernelParams k = kernel_params(f);
    for (int draw = 0; draw < 1000; ++draw) {
      double z = -20.0 + 40.0 * rng.uniform();
      if (std::abs(z) < 1e-3) z = 1e-3;
      const double lhs = (z - k.mu_z) * obs_weight(f, z, 1.0);
      const double rhs = k.kappa_z + k.sigma * k.sigma * loss_value_grad(f, z, 1.0).grad;
      CHECK(std::abs(lhs - rhs) < 1e-10);
    }
  }
}

TEST_CASE("logistic weight equals the log-cosh half-quadratic minimizer") {
  const ScalarPenalty lc = ScalarPenalty::log_cosh(0.5);
  CHECK(std::abs(hq_minimizer(HqForm::GR, lc, 2.0) - obs_weight(LossFamily::logistic(), 2.0, 1.0)) <= 1e-12);
  Rng rng(3, 1);
  for (int draw = 0; draw < 1000; ++draw) {
    const double z = -30.0 + 60.0 * rng.uniform();
    CHECK(std::abs(hq_minimizer(HqForm::GR, lc, z) - obs_weight(LossFamily::logistic(), z, 1.0)) <= 1e-12);
  }
}

TEST_CASE("penalty_value_grad examples") {
  const ValueGrad r = penalty_value_grad(PenaltyFamily::ridge(), 2.0);
  CHECK(r.value == 2.0);
  CHECK(r.grad == 2.0);
  const ValueGrad l = penalty_value_grad(PenaltyFamily::lasso(), -1.5);
  CHECK(l.value == 1.5);
  CHECK(l.grad == -1.0);
  CHECK(penalty_value_grad(PenaltyFamily::lasso(), 0.0).grad == 0.0);
  const ValueGrad d = penalty_value_grad(PenaltyFamily::double_pareto(1.0, 2.0), 1.0);
  CHECK(d.value == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-15));
  CHECK(d.grad == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("param_weight examples") {
  CHECK(param_weight(PenaltyFamily::lasso(1.0), 0.5) == 2.0);
  CHECK(param_weight(PenaltyFamily::ridge(3.0), 0.123) == 9.0);
  CHECK(param_weight(PenaltyFamily::double_pareto(1.0, 2.0, 1.0), 1.0) == 1.0);
  CHECK(param_weight(PenaltyFamily::lasso(1.0), 1e-12) == kPrunedWeight);
  CHECK(param_weight(PenaltyFamily::double_pareto(1.0, 2.0, 1.0), -1e-9) == kPrunedWeight);
}

TEST_CASE("Lasso weight reproduces the penalty gradient") {
  Rng rng(5, 1);
  for (int draw = 0; draw < 200; ++draw) {
    const double tau = 0.1 + 2.0 * rng.uniform();
    const double beta = -5.0 + 10.0 * rng.uniform();
    const PenaltyFamily f = PenaltyFamily::lasso(tau);
    CHECK(beta * param_weight(f, beta) == doctest::Approx(tau * tau * penalty_value_grad(f, beta).grad).epsilon(1e-15));
  }
}

TEST_CASE("gradients match central differences") {
  const double h = 1e-6;
  Rng rng(23, 1);
  for (const LossFamily& f : {LossFamily::logistic(), LossFamily::squared(), LossFamily::check(0.7), LossFamily::hinge()}) {
    for (int draw = 0; draw < 100; ++draw) {
      double z = -8.0 + 16.0 * rng.uniform();
      if (std::abs(z) < 1e-3) z += 0.01;
      const double m = f.kind == LossKind::Logistic ? 1.0 + std::floor(3.0 * rng.uniform()) : 1.0;
      const double fd = (loss_value_grad(f, z + h, m).value - loss_value_grad(f, z - h, m).value) / (2.0 * h);
      CHECK(std::abs(fd - loss_value_grad(f, z, m).grad) < 1e-5);
    }
  }
  for (const PenaltyFamily& f : {PenaltyFamily::ridge(), PenaltyFamily::lasso(), PenaltyFamily::double_pareto(0.5, 1.5)}) {
    for (int draw = 0; draw < 100; ++draw) {
      double b = -4.0 + 8.0 * rng.uniform();
      if (std::abs(b) < 1e-3) b += 0.01;
      const double fd = (penalty_value_grad(f, b + h).value - penalty_value_grad(f, b - h).value) / (2.0 * h);
      CHECK(std::abs(fd - penalty_value_grad(f, b).grad) < 1e-5);
    }
  }
}

TEST_CASE("invalid family parameters are rejected") {
  CHECK_THROWS(LossFamily::check(1.0));
  CHECK_THROWS(PenaltyFamily::lasso(0.0));
  CHECK_THROWS(PenaltyFamily::double_pareto(-1.0, 1.0));
}
