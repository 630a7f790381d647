#include "demr/grassmann.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace demr {

GrassmannPoint::GrassmannPoint(Matrix u) : u_(std::move(u)) {
  if (u_.cols() < 1 || u_.cols() >= u_.rows()) {
    throw Error(ErrorCode::kInvalidPoint,
                "Grassmann frame must satisfy 1 <= m < n, got " +
                    std::to_string(u_.rows()) + "x" + std::to_string(u_.cols()));
  }
  if (!all_finite(u_) || orthonormality_error(u_) > 1e-9) {
    throw Error(ErrorCode::kInvalidPoint, "frame columns are not orthonormal");
  }
}

std::size_t symvec_dimension(std::size_t length) {
  std::size_t n = 0;
  while (symvec_length(n) < length) ++n;
  if (symvec_length(n) != length)
    throw Error(ErrorCode::kLengthMismatch,
                std::to_string(length) + " is not a triangular number");
  return n;
}

Projector embed_projector(const GrassmannPoint& g) {
  const Matrix& u = g.frame();
  const std::size_t n = g.n();
  Matrix p(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double x = dot(u.row(i), u.row(j));
      p(i, j) = x;
      p(j, i) = x;
    }
  }
  return {std::move(p)};
}

GrassmannPoint inverse_embed_grassmann(const Matrix& msym, std::size_t m) {
  if (msym.rows() != msym.cols())
    throw Error(ErrorCode::kShapeMismatch, "expected a square matrix");
  if (m < 1 || m >= msym.rows())
    throw Error(ErrorCode::kDimMismatch, "subspace dimension out of range");
  Matrix s = msym;
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = i + 1; j < s.cols(); ++j) {
      const double avg = 0.5 * (s(i, j) + s(j, i));
      s(i, j) = avg;
      s(j, i) = avg;
    }
  const SymEigResult eig = sym_eig(s);
  const double gap = eig.lambda[m - 1] - eig.lambda[m];
  if (!(gap >= 1e-10)) {
    throw Error(ErrorCode::kSpectralTie,
                "eigengap lambda_m - lambda_{m+1} = " + std::to_string(gap));
  }
  return GrassmannPoint(eig.q.left_cols(m));
}

SymVec sym_vec(const Matrix& a) {
  if (a.rows() != a.cols())
    throw Error(ErrorCode::kShapeMismatch, "sym_vec needs a square matrix");
  if (asymmetry(a) > 1e-9)
    throw Error(ErrorCode::kNotSymmetric, "sym_vec input is not symmetric");
  const std::size_t n = a.rows();
  SymVec v{std::vector<double>(), n};
  v.data.reserve(symvec_length(n));
  for (std::size_t i = 0; i < n; ++i) v.data.push_back(a(i, i));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      v.data.push_back(std::numbers::sqrt2 * a(i, j));
  return v;
}

SymVec sym_vec(const Projector& p) { return sym_vec(p.p); }

Matrix sym_unvec(const SymVec& v) {
  if (v.data.size() != symvec_length(v.n)) {
    throw Error(ErrorCode::kLengthMismatch,
                "symvec of n=" + std::to_string(v.n) + " needs " +
                    std::to_string(symvec_length(v.n)) + " entries, got " +
                    std::to_string(v.data.size()));
  }
  const std::size_t n = v.n;
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) a(i, i) = v.data[i];
  std::size_t k = n;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double x = v.data[k++] / std::numbers::sqrt2;
      a(i, j) = x;
      a(j, i) = x;
    }
  return a;
}

PrincipalAngles principal_angles(const GrassmannPoint& a, const GrassmannPoint& b) {
  if (a.n() != b.n() || a.m() != b.m())
    throw Error(ErrorCode::kDimMismatch, "principal angles need equal (n, m)");
  const Matrix& ua = a.frame();
  const Matrix& ub = b.frame();
  const Matrix c = transpose_times(ua, ub);
  const SvdResult cos_svd = svd(c);
  // Sines come from the component of span(B) orthogonal to span(A); acos
  // alone loses half the digits for nearly aligned directions.
  const Matrix resid = ub - ua * c;
  const SvdResult sin_svd = svd(resid);
  const std::size_t m = a.m();
  PrincipalAngles out;
  out.theta.resize(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double cs = std::clamp(cos_svd.s[k], 0.0, 1.0);
    const double sn = std::clamp(sin_svd.s[m - 1 - k], 0.0, 1.0);
    out.theta[k] = (cs * cs < 0.5) ? std::acos(cs) : std::asin(sn);
  }
  std::sort(out.theta.begin(), out.theta.end());
  return out;
}

std::string_view distance_name(GrassmannDistance kind) {
  switch (kind) {
    case GrassmannDistance::kGeodesic: return "geodesic";
    case GrassmannDistance::kBinetCauchy: return "bc";
    case GrassmannDistance::kMartin: return "martin";
  }
  return "?";
}

double dist_grassmann(const PrincipalAngles& angles, GrassmannDistance kind) {
  switch (kind) {
    case GrassmannDistance::kGeodesic: {
      double s = 0.0;
      for (double t : angles.theta) s += t * t;
      return std::sqrt(s);
    }
    case GrassmannDistance::kBinetCauchy: {
      double prod = 1.0;
      for (double t : angles.theta) {
        const double c = std::cos(t);
        prod *= c * c;
      }
      return 1.0 - prod;
    }
    case GrassmannDistance::kMartin: {
      double s = 0.0;
      for (double t : angles.theta) {
        if (t >= std::numbers::pi / 2 - 1e-9)
          throw Error(ErrorCode::kMartinUndefined,
                      "a principal angle equals pi/2");
        s -= std::log(std::cos(t) * std::cos(t));
      }
      return s;
    }
  }
  return 0.0;
}

double dist_grassmann(const GrassmannPoint& a, const GrassmannPoint& b,
                      GrassmannDistance kind) {
  return dist_grassmann(principal_angles(a, b), kind);
}

GrassmannPoint sample_subspace_uniform(std::size_t n, std::size_t m, Rng& rng) {
  while (true) {
    Matrix g(n, m);
    for (double& x : g.data()) x = rng.gaussian();
    try {
      return GrassmannPoint(gram_schmidt(g));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kDegenerateInput) throw;
    }
  }
}

Matrix projector_gaussian_sample(const GrassmannPoint& gt, double sigma, Rng& rng) {
  if (!(sigma >= 0.0))
    throw Error(ErrorCode::kDegenerateInput, "noise level must be >= 0");
  Matrix p = embed_projector(gt).p;
  const std::size_t n = p.rows();
  Matrix g(n, n);
  for (double& x : g.data()) x = rng.gaussian();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) p(i, j) += sigma * 0.5 * (g(i, j) + g(j, i));
  return p;
}

}  // namespace demr
