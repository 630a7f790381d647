#pragma once

// Dense real-matrix kernels: row-major storage, 64-bit reals, deterministic
// iteration order. Sized for the small matrices (n <= ~200) that the
// manifold code works with.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "demr/error.hpp"

namespace demr {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  // Row-major nested initializer, e.g. Matrix{{1, 2}, {3, 4}}.
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diag(std::span<const double> d);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::span<double> row(std::size_t r) {
    return std::span<double>(data_).subspan(r * cols_, cols_);
  }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(data_).subspan(r * cols_, cols_);
  }

  std::vector<double> col(std::size_t c) const;
  void set_col(std::size_t c, std::span<const double> v);

  Matrix transpose() const;
  // Leading `k` columns.
  Matrix left_cols(std::size_t k) const;

  Matrix& operator+=(const Matrix& o);
  Matrix& operator-=(const Matrix& o);
  Matrix& operator*=(double s);

  bool operator==(const Matrix& o) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
Matrix operator*(const Matrix& a, const Matrix& b);
// a^T * b without materializing the transpose.
Matrix transpose_times(const Matrix& a, const Matrix& b);

double max_abs(const Matrix& a);
double frobenius_norm(const Matrix& a);
double trace(const Matrix& a);
bool all_finite(const Matrix& a);
// max |A - A^T|.
double asymmetry(const Matrix& a);
// max |A^T A - I| over the columns of `a`.
double orthonormality_error(const Matrix& a);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

struct SvdResult {
  Matrix u;               // rows x k, orthonormal columns
  std::vector<double> s;  // k values, descending, >= 0
  Matrix v;               // cols x k, orthonormal columns
  int sweeps = 0;
};

struct SymEigResult {
  Matrix q;                    // n x n orthonormal, eigenvectors in columns
  std::vector<double> lambda;  // descending
  int sweeps = 0;
};

inline constexpr int kMaxJacobiSweeps = 100;

// Thin SVD by one-sided (Hestenes) Jacobi rotations, k = min(rows, cols).
// Sign convention: the first entry of each U column with magnitude above
// 1e-14 is positive; V's column follows U's. Throws
// ErrorWithValue<SvdResult> (kNonConvergence) after kMaxJacobiSweeps.
SvdResult svd(const Matrix& a);

// Cyclic two-sided Jacobi eigendecomposition of a symmetric matrix; same
// sign convention as svd. Throws kNotSymmetric when
// max|S - S^T| > 1e-9 * max|S|.
SymEigResult sym_eig(const Matrix& s);

// Classical Gram-Schmidt with one re-orthogonalization pass. Throws
// kDegenerateInput when a deflated column has norm < 1e-12.
Matrix gram_schmidt(const Matrix& cols);

// Lower-triangular Cholesky factor L with L L^T = S. Throws
// kDegenerateInput when S is not positive definite.
Matrix cholesky(const Matrix& s);

}  // namespace demr
