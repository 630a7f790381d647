#include "demr/matlin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace demr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonConvergence: return "NonConvergence";
    case ErrorCode::kNotSymmetric: return "NotSymmetric";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kNotSkew: return "NotSkew";
    case ErrorCode::kInvalidPoint: return "InvalidPoint";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kUnknownTag: return "UnknownTag";
    case ErrorCode::kTagMismatch: return "TagMismatch";
    case ErrorCode::kDispersedSamples: return "DispersedSamples";
    case ErrorCode::kBadFraction: return "BadFraction";
    case ErrorCode::kSpectralTie: return "SpectralTie";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kMartinUndefined: return "MartinUndefined";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kBadConfig: return "BadConfig";
    case ErrorCode::kIngestError: return "IngestError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw Error(ErrorCode::kShapeMismatch,
                "matrix data length " + std::to_string(data_.size()) +
                    " does not match " + std::to_string(rows_) + "x" +
                    std::to_string(cols_));
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
    : rows_(rows.size()), cols_(rows.size() ? rows.begin()->size() : 0) {
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) {
      throw Error(ErrorCode::kShapeMismatch, "ragged matrix initializer");
    }
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diag(std::span<const double> d) {
  Matrix m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

std::vector<double> Matrix::col(std::size_t c) const {
  std::vector<double> out(rows_);
  for (std::size_t r = 0; r < rows_; ++r) out[r] = (*this)(r, c);
  return out;
}

void Matrix::set_col(std::size_t c, std::span<const double> v) {
  for (std::size_t r = 0; r < rows_; ++r) (*this)(r, c) = v[r];
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  return t;
}

Matrix Matrix::left_cols(std::size_t k) const {
  Matrix out(rows_, k);
  for (std::size_t r = 0; r < rows_; ++r)
    for (std::size_t c = 0; c < k; ++c) out(r, c) = (*this)(r, c);
  return out;
}

Matrix& Matrix::operator+=(const Matrix& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_)
    throw Error(ErrorCode::kShapeMismatch, "matrix addition");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& o) {
  if (rows_ != o.rows_ || cols_ != o.cols_)
    throw Error(ErrorCode::kShapeMismatch, "matrix subtraction");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& x : data_) x *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw Error(ErrorCode::kShapeMismatch, "matrix product");
  Matrix c(a.rows(), b.cols());
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

Matrix transpose_times(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows())
    throw Error(ErrorCode::kShapeMismatch, "transposed matrix product");
  Matrix c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    auto ak = a.row(k);
    auto bk = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      auto ci = c.row(i);
      const double aki = ak[i];
      for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
    }
  }
  return c;
}

double max_abs(const Matrix& a) {
  double m = 0.0;
  for (double x : a.data()) m = std::max(m, std::abs(x));
  return m;
}

double frobenius_norm(const Matrix& a) { return norm2(a.data()); }

double trace(const Matrix& a) {
  double t = 0.0;
  for (std::size_t i = 0; i < std::min(a.rows(), a.cols()); ++i) t += a(i, i);
  return t;
}

bool all_finite(const Matrix& a) {
  return std::all_of(a.data().begin(), a.data().end(),
                     [](double x) { return std::isfinite(x); });
}

double asymmetry(const Matrix& a) {
  if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      m = std::max(m, std::abs(a(i, j) - a(j, i)));
  return m;
}

double orthonormality_error(const Matrix& a) {
  Matrix g = transpose_times(a, a);
  for (std::size_t i = 0; i < g.rows(); ++i) g(i, i) -= 1.0;
  return max_abs(g);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

namespace {

constexpr double kSignThreshold = 1e-14;

// Flip column c of `u` (and of `v`, when given) so that its first entry
// above kSignThreshold in magnitude is positive.
void fix_column_sign(Matrix& u, Matrix* v, std::size_t c) {
  for (std::size_t r = 0; r < u.rows(); ++r) {
    const double x = u(r, c);
    if (std::abs(x) > kSignThreshold) {
      if (x < 0.0) {
        for (std::size_t i = 0; i < u.rows(); ++i) u(i, c) = -u(i, c);
        if (v != nullptr)
          for (std::size_t i = 0; i < v->rows(); ++i) (*v)(i, c) = -(*v)(i, c);
      }
      return;
    }
  }
}

// Fills the columns of `u` flagged in `missing` with unit vectors orthogonal
// to every other column, drawn deterministically from the standard basis.
void complete_basis(Matrix& u, const std::vector<bool>& missing) {
  const std::size_t n = u.rows();
  std::size_t next_basis = 0;
  for (std::size_t c = 0; c < u.cols(); ++c) {
    if (!missing[c]) continue;
    bool filled = false;
    while (!filled && next_basis < n) {
      std::vector<double> e(n, 0.0);
      e[next_basis++] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t k = 0; k < u.cols(); ++k) {
          if (k == c || (missing[k] && k > c)) continue;
          const auto uk = u.col(k);
          const double proj = dot(uk, e);
          for (std::size_t i = 0; i < n; ++i) e[i] -= proj * uk[i];
        }
      }
      const double nrm = norm2(e);
      if (nrm > 0.5) {
        for (double& x : e) x /= nrm;
        u.set_col(c, e);
        filled = true;
      }
    }
  }
}

SvdResult svd_tall(const Matrix& a) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  // Rows of `w` are the working columns of A; rows of `vt` the columns of V.
  Matrix w = a.transpose();
  Matrix vt = Matrix::identity(n);

  const double fro = frobenius_norm(a);
  const double null_norm = 1e-14 * fro;
  const double null_sq = null_norm * null_norm;
  const double rel_tol =
      std::max(1e-15, static_cast<double>(m) *
                          std::numeric_limits<double>::epsilon());

  int sweep = 0;
  bool converged = (fro == 0.0);
  while (!converged) {
    if (sweep == kMaxJacobiSweeps) {
      double worst = 0.0;
      for (std::size_t p = 0; p < n; ++p)
        for (std::size_t q = p + 1; q < n; ++q) {
          const double denom =
              std::sqrt(dot(w.row(p), w.row(p)) * dot(w.row(q), w.row(q)));
          if (denom > 0.0)
            worst = std::max(worst, std::abs(dot(w.row(p), w.row(q))) / denom);
        }
      SvdResult partial{Matrix(m, n), std::vector<double>(n, 0.0),
                        vt.transpose(), sweep};
      throw ErrorWithValue<SvdResult>(
          ErrorCode::kNonConvergence,
          "one-sided Jacobi SVD did not converge in " +
              std::to_string(kMaxJacobiSweeps) + " sweeps",
          std::move(partial), worst);
    }
    ++sweep;
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        auto wp = w.row(p);
        auto wq = w.row(q);
        const double alpha = dot(wp, wp);
        const double beta = dot(wq, wq);
        if (alpha <= null_sq || beta <= null_sq) continue;
        const double gamma = dot(wp, wq);
        if (std::abs(gamma) <= rel_tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double x = wp[i];
          const double y = wq[i];
          wp[i] = c * x - s * y;
          wq[i] = s * x + c * y;
        }
        auto vp = vt.row(p);
        auto vq = vt.row(q);
        for (std::size_t i = 0; i < n; ++i) {
          const double x = vp[i];
          const double y = vq[i];
          vp[i] = c * x - s * y;
          vq[i] = s * x + c * y;
        }
      }
    }
    converged = !rotated;
  }

  std::vector<double> norms(n);
  for (std::size_t j = 0; j < n; ++j) norms[j] = norm2(w.row(j));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return norms[x] > norms[y];
  });

  SvdResult out{Matrix(m, n), std::vector<double>(n), Matrix(n, n), sweep};
  std::vector<bool> missing(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.s[k] = norms[j];
    for (std::size_t i = 0; i < n; ++i) out.v(i, k) = vt(j, i);
    if (norms[j] <= null_norm || norms[j] == 0.0) {
      missing[k] = true;
    } else {
      for (std::size_t i = 0; i < m; ++i) out.u(i, k) = w(j, i) / norms[j];
    }
  }
  if (std::find(missing.begin(), missing.end(), true) != missing.end())
    complete_basis(out.u, missing);
  for (std::size_t k = 0; k < n; ++k) fix_column_sign(out.u, &out.v, k);
  return out;
}

}  // namespace

SvdResult svd(const Matrix& a) {
  if (a.rows() == 0 || a.cols() == 0)
    throw Error(ErrorCode::kShapeMismatch, "svd of an empty matrix");
  if (!all_finite(a))
    throw Error(ErrorCode::kDegenerateInput, "svd input has non-finite entries");
  if (a.rows() >= a.cols()) return svd_tall(a);
  // A^T = U' S V'^T  =>  A = V' S U'^T.
  SvdResult t = svd_tall(a.transpose());
  SvdResult out{std::move(t.v), std::move(t.s), std::move(t.u), t.sweeps};
  for (std::size_t k = 0; k < out.s.size(); ++k) fix_column_sign(out.u, &out.v, k);
  return out;
}

SymEigResult sym_eig(const Matrix& s) {
  if (s.rows() == 0 || s.rows() != s.cols())
    throw Error(ErrorCode::kShapeMismatch, "sym_eig needs a square matrix");
  if (!all_finite(s))
    throw Error(ErrorCode::kDegenerateInput, "sym_eig input has non-finite entries");
  const double scale = max_abs(s);
  const double asym = asymmetry(s);
  if (asym > 1e-9 * scale) {
    throw Error(ErrorCode::kNotSymmetric,
                "max|S - S^T| = " + std::to_string(asym));
  }
  const std::size_t n = s.rows();
  Matrix a = s;
  // Work on the exactly symmetric part.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double avg = 0.5 * (a(i, j) + a(j, i));
      a(i, j) = avg;
      a(j, i) = avg;
    }
  Matrix q = Matrix::identity(n);
  const double negligible = 1e-20 * frobenius_norm(a);

  int sweep = 0;
  while (true) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t r = p + 1; r < n; ++r) off += std::abs(a(p, r));
    if (off == 0.0) break;
    if (sweep == kMaxJacobiSweeps) {
      std::vector<double> lam(n);
      for (std::size_t i = 0; i < n; ++i) lam[i] = a(i, i);
      throw ErrorWithValue<SymEigResult>(
          ErrorCode::kNonConvergence, "Jacobi eigensolver did not converge",
          SymEigResult{q, lam, sweep}, off);
    }
    ++sweep;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t r = p + 1; r < n; ++r) {
        const double apr = a(p, r);
        if (apr == 0.0) continue;
        const double g = 100.0 * std::abs(apr);
        const double app = a(p, p);
        const double arr = a(r, r);
        if ((sweep > 3 && std::abs(app) + g == std::abs(app) &&
             std::abs(arr) + g == std::abs(arr)) ||
            std::abs(apr) <= negligible) {
          a(p, r) = 0.0;
          a(r, p) = 0.0;
          continue;
        }
        const double h = arr - app;
        double t;
        if (std::abs(h) + g == std::abs(h)) {
          t = apr / h;
        } else {
          const double theta = 0.5 * h / apr;
          t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = t * c;
        const double tau = sn / (1.0 + c);
        a(p, p) = app - t * apr;
        a(r, r) = arr + t * apr;
        a(p, r) = 0.0;
        a(r, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == r) continue;
          const double akp = a(k, p);
          const double akr = a(k, r);
          const double new_kp = akp - sn * (akr + akp * tau);
          const double new_kr = akr + sn * (akp - akr * tau);
          a(k, p) = new_kp;
          a(p, k) = new_kp;
          a(k, r) = new_kr;
          a(r, k) = new_kr;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double qkp = q(k, p);
          const double qkr = q(k, r);
          q(k, p) = qkp - sn * (qkr + qkp * tau);
          q(k, r) = qkr + sn * (qkp - qkr * tau);
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return a(x, x) > a(y, y);
  });
  SymEigResult out{Matrix(n, n), std::vector<double>(n), sweep};
  for (std::size_t k = 0; k < n; ++k) {
    out.lambda[k] = a(order[k], order[k]);
    for (std::size_t i = 0; i < n; ++i) out.q(i, k) = q(i, order[k]);
    fix_column_sign(out.q, nullptr, k);
  }
  return out;
}

Matrix gram_schmidt(const Matrix& cols) {
  const std::size_t n = cols.rows();
  const std::size_t k = cols.cols();
  Matrix out(n, k);
  for (std::size_t c = 0; c < k; ++c) {
    std::vector<double> v = cols.col(c);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < c; ++j) {
        double proj = 0.0;
        for (std::size_t i = 0; i < n; ++i) proj += out(i, j) * v[i];
        for (std::size_t i = 0; i < n; ++i) v[i] -= proj * out(i, j);
      }
    }
    const double nrm = norm2(v);
    if (!(nrm >= 1e-12)) {
      throw Error(ErrorCode::kDegenerateInput,
                  "column " + std::to_string(c) +
                      " is (numerically) dependent on the previous ones");
    }
    for (std::size_t i = 0; i < n; ++i) out(i, c) = v[i] / nrm;
  }
  return out;
}

Matrix cholesky(const Matrix& s) {
  if (s.rows() != s.cols())
    throw Error(ErrorCode::kShapeMismatch, "cholesky needs a square matrix");
  const std::size_t n = s.rows();
  Matrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double d = s(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > 0.0))
      throw Error(ErrorCode::kDegenerateInput, "matrix is not positive definite");
    l(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double x = s(i, j);
      for (std::size_t k = 0; k < j; ++k) x -= l(i, k) * l(j, k);
      l(i, j) = x / l(j, j);
    }
  }
  return l;
}

}  // namespace demr
