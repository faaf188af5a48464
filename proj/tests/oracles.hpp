#pragma once

// Reference implementations used only by the tests.  They share no code with
// the library beyond the data containers.

#include <cmath>
#include <functional>
#include <vector>

#include "smem/dataset.hpp"

namespace oracle {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;

// Gaussian elimination with partial pivoting.
inline Vec solve(Mat a, Vec b) {
  const std::size_t n = b.size();
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(a[i][k]) > std::abs(a[piv][k])) piv = i;
    std::swap(a[k], a[piv]);
    std::swap(b[k], b[piv]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = a[i][k] / a[k][k];
      for (std::size_t j = k; j < n; ++j) a[i][j] -= f * a[k][j];
      b[i] -= f * b[k];
    }
  }
  Vec x(n);
  for (std::size_t k = n; k-- > 0;) {
    double s = b[k];
    for (std::size_t j = k + 1; j < n; ++j) s -= a[k][j] * x[j];
    x[k] = s / a[k][k];
  }
  return x;
}

inline Mat dense(const smem::DenseMatrix& m) {
  Mat out(m.rows(), Vec(m.cols()));
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) out[i][j] = m(i, j);
  return out;
}

// Σ_i [m_i log(1 + e^{z_i}) − y_i z_i] + ρ‖β‖²/2, divided by n.
inline double logistic_ridge_objective(const smem::Dataset& d, const Vec& beta, double rho) {
  const std::size_t n = d.n(), p = d.p();
  long double total = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    long double z = 0.0L;
    for (std::size_t j = 0; j < p; ++j) z += static_cast<long double>(d.x(i, j)) * beta[j];
    const long double m = d.m.empty() ? 1.0L : d.m[i];
    const long double sp = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
    total += m * sp - d.y[i] * z;
  }
  for (double b : beta) total += 0.5L * rho * b * b;
  return static_cast<double>(total / n);
}

struct NewtonResult {
  Vec beta;
  double objective;
  double grad_norm;
};

/// Damped Newton on the logistic ridge objective, run until the gradient
/// (per observation) has sup-norm below `tol`.
inline NewtonResult newton_logistic_ridge(const smem::Dataset& d, double rho, double tol = 1e-12) {
  const std::size_t n = d.n(), p = d.p();
  Vec beta(p, 0.0);
  double gnorm = INFINITY;
  for (int it = 0; it < 200; ++it) {
    Vec g(p, 0.0);
    Mat h(p, Vec(p, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      double z = 0.0;
      for (std::size_t j = 0; j < p; ++j) z += d.x(i, j) * beta[j];
      const double m = d.m.empty() ? 1.0 : d.m[i];
      const double s = 1.0 / (1.0 + std::exp(-z));
      const double r = m * s - d.y[i];
      const double w = m * s * (1.0 - s);
      for (std::size_t j = 0; j < p; ++j) {
        g[j] += r * d.x(i, j);
        for (std::size_t k = 0; k < p; ++k) h[j][k] += w * d.x(i, j) * d.x(i, k);
      }
    }
    gnorm = 0.0;
    for (std::size_t j = 0; j < p; ++j) {
      g[j] += rho * beta[j];
      h[j][j] += rho;
      gnorm = std::max(gnorm, std::abs(g[j]) / n);
    }
    if (gnorm < tol) break;
    const Vec step = solve(h, g);
    double t = 1.0;
    const double f0 = logistic_ridge_objective(d, beta, rho);
    Vec trial(p);
    for (int ls = 0; ls < 60; ++ls) {
      for (std::size_t j = 0; j < p; ++j) trial[j] = beta[j] - t * step[j];
      if (logistic_ridge_objective(d, trial, rho) <= f0) break;
      t *= 0.5;
    }
    beta = trial;
  }
  return {beta, logistic_ridge_objective(d, beta, rho), gnorm};
}

/// Global minimizer of a 1-D function on [lo, hi]: a dense grid locates the
/// basin, then golden-section refines around the best grid point.
inline double grid_argmin(const std::function<double(double)>& f, double lo, double hi, int points = 20001) {
  const double h = (hi - lo) / (points - 1);
  double best = lo;
  double fbest = f(lo);
  for (int k = 1; k < points; ++k) {
    const double x = lo + k * h;
    const double fx = f(x);
    if (fx < fbest) {
      best = x;
      fbest = fx;
    }
  }
  double a = std::max(lo, best - h), b = std::min(hi, best + h);
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200 && b - a > 1e-13; ++it) {
    const double c = b - r * (b - a), e = a + r * (b - a);
    if (f(c) <= f(e))
      b = e;
    else
      a = c;
  }
  const double mid = 0.5 * (a + b);
  return f(mid) <= fbest ? mid : best;
}

}  // namespace oracle
