#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace smem {

using Vector = std::vector<double>;

// Sorted, duplicate-free list of coordinate indices.
using ActiveSet = std::vector<std::size_t>;

ActiveSet full_active_set(std::size_t p);

/// Dense row-major matrix of doubles.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static DenseMatrix identity(std::size_t n);
  static DenseMatrix diagonal(std::span<const double> d);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::span<const double> entries() const { return data_; }
  std::span<double> entries() { return data_; }

  bool all_finite() const;
  DenseMatrix transpose() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);
Vector matvec(const DenseMatrix& a, std::span<const double> x);
// Computes aᵀx.
Vector matvec_transposed(const DenseMatrix& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
double norm_inf(std::span<const double> a);

/// Cholesky factorization A = L Lᵀ without pivoting.
///
/// A pivot at or below 1e-12 times the largest diagonal entry is treated as
/// loss of positive definiteness.  Only the lower triangle of the input is read.
class Cholesky {
 public:
  explicit Cholesky(const DenseMatrix& a);

  std::size_t size() const { return l_.rows(); }
  const DenseMatrix& factor() const { return l_; }

  Vector solve(std::span<const double> b) const;
  // tr(A⁻¹) = ‖L⁻¹‖²_F.
  double trace_inverse() const;
  double log_det() const;

 private:
  DenseMatrix l_;
};

Vector chol_solve(const DenseMatrix& a, std::span<const double> b);
double trace_inverse(const DenseMatrix& a);

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
Vector symmetric_eigenvalues(const DenseMatrix& a);

/// λ_max / λ_min of a symmetric PSD matrix; +infinity when λ_min is below
/// 1e-14 λ_max.
double spectral_cond(const DenseMatrix& a);

/// Offline sufficient statistics for the weighted Gram matrix XᵀΩX.
///
/// The outer products x_i x_iᵀ are never materialized: the cache keeps the
/// design rows and accumulates Σ ω_i x_i x_iᵀ on demand, which is the same
/// arithmetic in O(np) memory.
class GramCache {
 public:
  GramCache() = default;
  explicit GramCache(DenseMatrix x) : x_(std::move(x)) {}

  std::size_t n() const { return x_.rows(); }
  std::size_t p() const { return x_.cols(); }
  const DenseMatrix& rows() const { return x_; }

  // Outer product x_i x_iᵀ, for inspection and tests.
  DenseMatrix outer_product(std::size_t i) const;

 private:
  DenseMatrix x_;
};

GramCache gram_build(const DenseMatrix& x);

/// (diag(prior_precisions) + XᵀΩX) restricted to `active`.
///
/// Every entry is accumulated over observations in index order, so the
/// restriction to a subset is bitwise equal to the matching submatrix of the
/// full assembly.
DenseMatrix gram_assemble(const GramCache& cache, std::span<const double> obs_weights,
                          std::span<const double> prior_precisions, const ActiveSet& active);

/// (Xᵀc) restricted to `active`.
Vector gram_cross(const GramCache& cache, std::span<const double> c, const ActiveSet& active);

}  // namespace smem
