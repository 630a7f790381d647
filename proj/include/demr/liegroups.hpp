#pragma once

// SO(3) / SE(3) points, tangent coordinates, exp/log maps, extrinsic
// embeddings and their inverses, distances, and the concentrated Gaussian
// noise model.

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "demr/matlin.hpp"
#include "demr/rng.hpp"

namespace demr {

using Vec3 = std::array<double, 3>;

inline Vec3 operator+(const Vec3& a, const Vec3& b) {
  return {a[0] + b[0], a[1] + b[1], a[2] + b[2]};
}
inline Vec3 operator-(const Vec3& a, const Vec3& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2]};
}
inline Vec3 operator*(double s, const Vec3& a) {
  return {s * a[0], s * a[1], s * a[2]};
}
inline double dot(const Vec3& a, const Vec3& b) {
  return a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
}
inline Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
          a[0] * b[1] - a[1] * b[0]};
}
double norm(const Vec3& a);

// Row-major 3x3.
struct Mat3 {
  std::array<double, 9> a{};

  static Mat3 identity();
  static Mat3 from_cols(const Vec3& c0, const Vec3& c1, const Vec3& c2);
  static Mat3 from_matrix(const Matrix& m);

  double& operator()(int r, int c) { return a[3 * r + c]; }
  double operator()(int r, int c) const { return a[3 * r + c]; }
  Vec3 col(int c) const { return {a[c], a[3 + c], a[6 + c]}; }

  Mat3 transpose() const;
  double det() const;
  double trace() const { return a[0] + a[4] + a[8]; }
  Matrix to_matrix() const;

  bool operator==(const Mat3&) const = default;
};

Mat3 operator*(const Mat3& x, const Mat3& y);
Vec3 operator*(const Mat3& x, const Vec3& v);
Mat3 operator+(const Mat3& x, const Mat3& y);
Mat3 operator-(const Mat3& x, const Mat3& y);
Mat3 operator*(double s, const Mat3& x);
double max_abs(const Mat3& x);
double frobenius_norm(const Mat3& x);

// A point on SO(3): ||R^T R - I||_max <= 1e-9 and |det R - 1| <= 1e-9.
class RotationMatrix {
 public:
  RotationMatrix() : r_(Mat3::identity()) {}

  // Validates the group invariants; throws kInvalidPoint.
  static RotationMatrix from_matrix(const Mat3& r);
  // For matrices that are rotations by construction (closed forms,
  // products of rotations).
  static RotationMatrix unchecked(const Mat3& r) { return RotationMatrix(r); }
  static RotationMatrix identity() { return RotationMatrix(); }

  const Mat3& matrix() const noexcept { return r_; }
  double operator()(int r, int c) const { return r_(r, c); }
  RotationMatrix inverse() const { return RotationMatrix(r_.transpose()); }
  Vec3 apply(const Vec3& x) const { return r_ * x; }

  // max(||R^T R - I||_max, |det R - 1|).
  static double membership_error(const Mat3& r);

  bool operator==(const RotationMatrix&) const = default;

 private:
  explicit RotationMatrix(const Mat3& r) : r_(r) {}
  Mat3 r_;
};

RotationMatrix operator*(const RotationMatrix& a, const RotationMatrix& b);

// A point on SE(3); acts on points as x -> R x + t.
struct RigidTransform {
  RotationMatrix rot;
  Vec3 trans{};

  static RigidTransform identity() { return {}; }
  RigidTransform inverse() const;
  Vec3 apply(const Vec3& x) const { return rot.apply(x) + trans; }
  // [[R, t], [0, 1]].
  Matrix homogeneous() const;

  bool operator==(const RigidTransform&) const = default;
};

RigidTransform operator*(const RigidTransform& a, const RigidTransform& b);

// so(3) coordinates (axis * angle, radians).
struct So3Tangent {
  Vec3 omega{};
};

// se(3) coordinates: rotational part omega, translational part v.
struct Se3Tangent {
  Vec3 omega{};
  Vec3 v{};
};

enum class ReprTag { kEuler3, kAxis3, kQuat4, kSixD6, kNine9, kSe12, kSymVec };

std::string_view tag_name(ReprTag tag);
// Accepts the names produced by tag_name; throws kUnknownTag.
ReprTag parse_tag(std::string_view name);
// Fixed length of a tag's vector; kSymVec has no fixed length (returns 0).
std::size_t tag_length(ReprTag tag);
bool is_rotation_tag(ReprTag tag);

// Unconstrained Euclidean representation as emitted by a network.
struct EmbeddedVector {
  ReprTag tag = ReprTag::kNine9;
  std::vector<double> data;

  // Checks the tag length and finiteness; throws kLengthMismatch or
  // kDegenerateInput.
  static EmbeddedVector make(ReprTag tag, std::vector<double> data);
};

// ---- hat / vee ----------------------------------------------------------

Mat3 hat(const So3Tangent& t);
// Throws kNotSkew when max|S + S^T| > 1e-9.
So3Tangent vee(const Mat3& s);

// ---- exponential / logarithm --------------------------------------------

RotationMatrix exp_so3(const So3Tangent& t);
// Returns ||omega|| in [0, pi].
So3Tangent log_so3(const RotationMatrix& r);
RigidTransform exp_se3(const Se3Tangent& t);
Se3Tangent log_se3(const RigidTransform& m);

// ---- embeddings and inverse embeddings ------------------------------------

// Nearest rotation to the row-major 3x3 reshaping of a nine9 vector:
// U V^T, or U diag(1, 1, -1) V^T when the orientation is reversed. Throws
// ErrorWithValue<RotationMatrix> (kRankDeficient) when the two smallest
// singular values sum below 1e-12; the attached value is a valid rotation.
RotationMatrix project_so3_svd(const EmbeddedVector& e);
RotationMatrix project_so3_svd(const Mat3& m);

// Gram-Schmidt on the two 3-vectors of a sixd6 vector, completed by the
// cross product. Throws kDegenerateInput for zero or parallel inputs.
RotationMatrix rot_from_6d(const EmbeddedVector& e);

// euler3 (intrinsic Z-Y-X: R = Rz(a0) Ry(a1) Rx(a2)), axis3 (axis-angle) or
// quat4 (w, x, y, z; normalized internally).
RotationMatrix baseline_to_rotation(const EmbeddedVector& e);

EmbeddedVector embed(const RotationMatrix& r);  // nine9
EmbeddedVector embed(const RigidTransform& m);  // se12

// Representation of `r` in any rotation tag; used as the regression target.
// sixd6 holds the first two columns; euler3 has pitch in [-pi/2, pi/2];
// axis3 is log_so3; quat4 has w >= 0.
EmbeddedVector encode_rotation(ReprTag tag, const RotationMatrix& r);

using ManifoldPoint = std::variant<RotationMatrix, RigidTransform>;

ManifoldPoint inverse_embed(const EmbeddedVector& e);
// inverse_embed restricted to rotation tags; se12 yields its rotation part.
RotationMatrix to_rotation(const EmbeddedVector& e);

// ---- distances ----------------------------------------------------------

// Rotation angle of R1^T R2, radians in [0, pi].
double dist_geodesic(const RotationMatrix& a, const RotationMatrix& b);
// ||log_se3(M1^-1 M2)||_2; radians and length units weighted equally.
double dist_geodesic(const RigidTransform& a, const RigidTransform& b);
// acos((tr(R1^T R2) - 1) / 2), argument clamped to [-1, 1].
double dist_angular(const RotationMatrix& a, const RotationMatrix& b);
// Mean squared entrywise difference. Throws kTagMismatch.
double dist_extrinsic(const EmbeddedVector& a, const EmbeddedVector& b);

// ---- concentrated Gaussian ------------------------------------------------

// x = mean * exp(eps^), eps ~ N(0, sigma) in tangent coordinates.
struct ConcentratedGaussianSO3 {
  RotationMatrix mean;
  Matrix sigma;  // 3x3 SPD, rad^2

  ConcentratedGaussianSO3(RotationMatrix mean, Matrix sigma);
  static ConcentratedGaussianSO3 isotropic(RotationMatrix mean, double stddev);

  Matrix chol;  // lower Cholesky factor of sigma
};

struct ConcentratedGaussianSE3 {
  RigidTransform mean;
  Matrix sigma;  // 6x6 SPD, (omega, v) ordering

  ConcentratedGaussianSE3(RigidTransform mean, Matrix sigma);

  Matrix chol;
};

RotationMatrix sample_concentrated(const ConcentratedGaussianSO3& g, Rng& rng);
RigidTransform sample_concentrated(const ConcentratedGaussianSE3& g, Rng& rng);

// ---- means ----------------------------------------------------------------

struct FrechetDiagnostics {
  int iterations = 0;
  double last_update = 0.0;
};

// Intrinsic mean by the fixed point mu <- mu exp(mean_i log(mu^T R_i)),
// starting at samples[0]; stops when the update norm is <= 1e-10 (cap 1000
// iterations). Throws kDispersedSamples when a sample lies pi/2 or further
// from samples[0], and ErrorWithValue<RotationMatrix> (kNonConvergence) at
// the cap.
RotationMatrix frechet_mean(std::span<const RotationMatrix> samples,
                            FrechetDiagnostics* diag = nullptr);

// Entrywise mean of the nine9 embeddings, projected back to SO(3).
RotationMatrix chordal_mean_project(std::span<const RotationMatrix> samples);

// ---- sampling -------------------------------------------------------------

enum class SampleMode { kEuler, kAxis, kSo3 };

std::string_view mode_name(SampleMode mode);
SampleMode parse_mode(std::string_view name);

// Three i.i.d. uniforms on [-pi*fraction, pi*fraction] read as Z-Y-X Euler
// angles (kEuler) or as an axis-angle vector mapped through exp_so3 (kAxis,
// kSo3); translation ~ N(0, I3). Throws kBadFraction unless fraction is in
// (0, 1].
RigidTransform sample_transform_uniform(SampleMode mode, double fraction,
                                        Rng& rng);

// Haar-uniform rotation (normalized Gaussian quaternion).
RotationMatrix sample_rotation_uniform(Rng& rng);

RotationMatrix rotation_from_quaternion(double w, double x, double y, double z);

}  // namespace demr
