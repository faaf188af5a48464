#include "smem/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "smem/errors.hpp"

namespace smem {

ActiveSet full_active_set(std::size_t p) {
  ActiveSet all(p);
  for (std::size_t j = 0; j < p; ++j) all[j] = j;
  return all;
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), data_(std::move(entries)) {
  if (data_.size() != rows * cols) {
    throw InvalidShape("DenseMatrix: " + std::to_string(data_.size()) + " entries for a " +
                       std::to_string(rows) + "x" + std::to_string(cols) + " matrix");
  }
}

DenseMatrix DenseMatrix::identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseMatrix DenseMatrix::diagonal(std::span<const double> d) {
  DenseMatrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

bool DenseMatrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

DenseMatrix DenseMatrix::transpose() const {
  DenseMatrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) throw InvalidShape("matmul: inner dimensions differ");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      auto bk = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

Vector matvec(const DenseMatrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw InvalidShape("matvec: dimension mismatch");
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

Vector matvec_transposed(const DenseMatrix& a, std::span<const double> x) {
  if (a.rows() != x.size()) throw InvalidShape("matvec_transposed: dimension mismatch");
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double xi = x[i];
    auto ai = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += xi * ai[j];
  }
  return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

double norm_inf(std::span<const double> a) {
  double m = 0.0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

// ---------------------------------------------------------------------------
// Cholesky

Cholesky::Cholesky(const DenseMatrix& a) : l_(a.rows(), a.cols()) {
  const std::size_t n = a.rows();
  if (a.cols() != n) throw InvalidShape("Cholesky: matrix is not square");
  if (!a.all_finite()) throw DomainError("Cholesky: non-finite entry");
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, a(i, i));
  const double floor = 1e-12 * max_diag;

  for (std::size_t j = 0; j < n; ++j) {
    auto lj = l_.row(j);
    double pivot = a(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= lj[k] * lj[k];
    if (!(pivot > floor) || pivot <= 0.0) {
      throw NotPositiveDefinite("Cholesky: pivot " + std::to_string(pivot) + " at index " +
                                std::to_string(j));
    }
    const double ljj = std::sqrt(pivot);
    lj[j] = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      auto li = l_.row(i);
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
      li[j] = s / ljj;
    }
  }
}

Vector Cholesky::solve(std::span<const double> b) const {
  const std::size_t n = size();
  if (b.size() != n) throw InvalidShape("Cholesky::solve: dimension mismatch");
  Vector x(b.begin(), b.end());
  for (std::size_t i = 0; i < n; ++i) {
    auto li = l_.row(i);
    double s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= li[k] * x[k];
    x[i] = s / li[i];
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = x[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l_(k, i) * x[k];
    x[i] = s / l_(i, i);
  }
  return x;
}

double Cholesky::trace_inverse() const {
  // Columns of L⁻¹ by forward substitution on unit vectors.
  const std::size_t n = size();
  double total = 0.0;
  Vector col(n);
  for (std::size_t j = 0; j < n; ++j) {
    std::fill(col.begin(), col.end(), 0.0);
    col[j] = 1.0 / l_(j, j);
    total += col[j] * col[j];
    for (std::size_t i = j + 1; i < n; ++i) {
      auto li = l_.row(i);
      double s = 0.0;
      for (std::size_t k = j; k < i; ++k) s -= li[k] * col[k];
      col[i] = s / li[i];
      total += col[i] * col[i];
    }
  }
  return total;
}

double Cholesky::log_det() const {
  double s = 0.0;
  for (std::size_t i = 0; i < size(); ++i) s += std::log(l_(i, i));
  return 2.0 * s;
}

Vector chol_solve(const DenseMatrix& a, std::span<const double> b) { return Cholesky(a).solve(b); }

double trace_inverse(const DenseMatrix& a) { return Cholesky(a).trace_inverse(); }

// ---------------------------------------------------------------------------
// Symmetric eigenvalues

Vector symmetric_eigenvalues(const DenseMatrix& input) {
  const std::size_t n = input.rows();
  if (input.cols() != n) throw InvalidShape("symmetric_eigenvalues: matrix is not square");
  if (!input.all_finite()) throw DomainError("symmetric_eigenvalues: non-finite entry");
  DenseMatrix a = input;

  double fro = 0.0;
  for (double v : a.entries()) fro += v * v;
  fro = std::sqrt(fro);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) off += a(i, j) * a(i, j);
    if (std::sqrt(off) <= 1e-12 * fro) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        auto rp = a.row(p);
        auto rq = a.row(q);
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = rp[k];
          const double aqk = rq[k];
          rp[k] = c * apk - s * aqk;
          rq[k] = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
      }
    }
  }

  Vector eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

double spectral_cond(const DenseMatrix& a) {
  const Vector eig = symmetric_eigenvalues(a);
  if (eig.empty()) throw InvalidShape("spectral_cond: empty matrix");
  const double hi = eig.back();
  const double lo = eig.front();
  if (!(hi > 0.0)) throw DomainError("spectral_cond: matrix has no positive eigenvalue");
  if (lo < 1e-14 * hi) return std::numeric_limits<double>::infinity();
  return hi / lo;
}

// ---------------------------------------------------------------------------
// Gram cache

DenseMatrix GramCache::outer_product(std::size_t i) const {
  const std::size_t dim = p();
  DenseMatrix g(dim, dim);
  auto xi = x_.row(i);
  for (std::size_t a = 0; a < dim; ++a)
    for (std::size_t b = 0; b < dim; ++b) g(a, b) = xi[a] * xi[b];
  return g;
}

GramCache gram_build(const DenseMatrix& x) {
  if (x.rows() == 0 || x.cols() == 0) throw InvalidShape("gram_build: empty design");
  return GramCache(x);
}

namespace {

void check_active(const ActiveSet& active, std::size_t p) {
  if (active.empty()) throw EmptyActiveSet("active set is empty");
  for (std::size_t k = 0; k < active.size(); ++k) {
    if (active[k] >= p) throw InvalidShape("active index out of range");
    if (k > 0 && active[k] <= active[k - 1]) throw InvalidShape("active set must be sorted and unique");
  }
}

}  // namespace

DenseMatrix gram_assemble(const GramCache& cache, std::span<const double> obs_weights,
                          std::span<const double> prior_precisions, const ActiveSet& active) {
  const std::size_t n = cache.n();
  const std::size_t p = cache.p();
  if (obs_weights.size() != n) throw InvalidShape("gram_assemble: weight length differs from n");
  if (prior_precisions.size() != p) throw InvalidShape("gram_assemble: prior length differs from p");
  check_active(active, p);
  const std::size_t k = active.size();
  const DenseMatrix& x = cache.rows();

  // Contiguous copy of the active columns.
  std::vector<double> xa;
  const double* xs = x.entries().data();
  if (k != p) {
    xa.resize(n * k);
    for (std::size_t i = 0; i < n; ++i) {
      auto xi = x.row(i);
      for (std::size_t c = 0; c < k; ++c) xa[i * k + c] = xi[active[c]];
    }
    xs = xa.data();
  }

  DenseMatrix out(k, k);
  constexpr std::size_t kTileRows = 16;
  constexpr std::size_t kTileCols = 256;
  std::vector<double> acc(kTileRows * kTileCols);

  for (std::size_t a0 = 0; a0 < k; a0 += kTileRows) {
    const std::size_t a1 = std::min(k, a0 + kTileRows);
    for (std::size_t b0 = a0; b0 < k; b0 += kTileCols) {
      const std::size_t b1 = std::min(k, b0 + kTileCols);
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const double* xi = xs + i * k;
        const double w = obs_weights[i];
        for (std::size_t a = a0; a < a1; ++a) {
          const double s = w * xi[a];
          double* row = acc.data() + (a - a0) * kTileCols;
          const double* xb = xi + b0;
          for (std::size_t b = std::max(b0, a) - b0; b < b1 - b0; ++b) row[b] += s * xb[b];
        }
      }
      for (std::size_t a = a0; a < a1; ++a) {
        const double* row = acc.data() + (a - a0) * kTileCols;
        for (std::size_t b = std::max(b0, a); b < b1; ++b) {
          out(a, b) = row[b - b0];
          out(b, a) = row[b - b0];
        }
      }
    }
  }
  for (std::size_t c = 0; c < k; ++c) out(c, c) += prior_precisions[active[c]];
  return out;
}

Vector gram_cross(const GramCache& cache, std::span<const double> c, const ActiveSet& active) {
  if (c.size() != cache.n()) throw InvalidShape("gram_cross: vector length differs from n");
  check_active(active, cache.p());
  const Vector full = matvec_transposed(cache.rows(), c);
  Vector out(active.size());
  for (std::size_t k = 0; k < active.size(); ++k) out[k] = full[active[k]];
  return out;
}

}  // namespace smem
