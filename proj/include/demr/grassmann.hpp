#pragma once

// Grassmann manifold G(m, R^n): orthonormal frames modulo right O(m)
// action, the projector embedding U U^T and its inverse by symmetric
// eigendecomposition, the sqrt(2)-weighted half-vectorization, and
// principal-angle distances.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "demr/matlin.hpp"
#include "demr/rng.hpp"

namespace demr {

// n x m frame with orthonormal columns, 1 <= m < n.
class GrassmannPoint {
 public:
  // Throws kInvalidPoint when the columns are not orthonormal to 1e-9 or the
  // shape is outside 1 <= m < n.
  explicit GrassmannPoint(Matrix u);

  const Matrix& frame() const noexcept { return u_; }
  std::size_t n() const noexcept { return u_.rows(); }
  std::size_t m() const noexcept { return u_.cols(); }

 private:
  Matrix u_;
};

struct Projector {
  Matrix p;  // n x n, symmetric idempotent, trace m
};

struct PrincipalAngles {
  std::vector<double> theta;  // ascending, each in [0, pi/2]
};

// Half-vectorization of a symmetric n x n matrix: the n diagonal entries,
// then the upper off-diagonal entries row by row (12, 13, ..., 1n, 23, ...)
// scaled by sqrt(2), so that dot(sym_vec(A), sym_vec(B)) = <A, B>_F.
struct SymVec {
  std::vector<double> data;
  std::size_t n = 0;
};

constexpr std::size_t symvec_length(std::size_t n) { return n * (n + 1) / 2; }
// Inverse of symvec_length; throws kLengthMismatch for non-triangular sizes.
std::size_t symvec_dimension(std::size_t length);

Projector embed_projector(const GrassmannPoint& g);

// Symmetrizes msym, then returns its top-m eigenvector frame. Throws
// kSpectralTie when lambda_m - lambda_{m+1} < 1e-10.
GrassmannPoint inverse_embed_grassmann(const Matrix& msym, std::size_t m);

// Throws kNotSymmetric when max|A - A^T| > 1e-9.
SymVec sym_vec(const Matrix& sym);
SymVec sym_vec(const Projector& p);
// Throws kLengthMismatch when data.size() != n(n+1)/2.
Matrix sym_unvec(const SymVec& v);

// Throws kDimMismatch for differing n or m.
PrincipalAngles principal_angles(const GrassmannPoint& a, const GrassmannPoint& b);

enum class GrassmannDistance { kGeodesic, kBinetCauchy, kMartin };

std::string_view distance_name(GrassmannDistance kind);

// geodesic: sqrt(sum theta^2); bc: 1 - prod cos^2; martin: -sum log cos^2.
// Martin throws kMartinUndefined when some theta >= pi/2 - 1e-9.
double dist_grassmann(const GrassmannPoint& a, const GrassmannPoint& b,
                      GrassmannDistance kind = GrassmannDistance::kGeodesic);
double dist_grassmann(const PrincipalAngles& angles, GrassmannDistance kind);

// Orthonormalized Gaussian frame: invariant distribution on G(m, R^n).
GrassmannPoint sample_subspace_uniform(std::size_t n, std::size_t m, Rng& rng);

// U U^T + sigma (G + G^T) / 2 with G entrywise standard normal.
Matrix projector_gaussian_sample(const GrassmannPoint& gt, double sigma, Rng& rng);

}  // namespace demr
