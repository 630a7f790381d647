#include "demr/liegroups.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace demr {

using std::numbers::pi;

double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }

// ---- Mat3 -----------------------------------------------------------------

Mat3 Mat3::identity() {
  Mat3 m;
  m.a = {1, 0, 0, 0, 1, 0, 0, 0, 1};
  return m;
}

Mat3 Mat3::from_cols(const Vec3& c0, const Vec3& c1, const Vec3& c2) {
  Mat3 m;
  m.a = {c0[0], c1[0], c2[0], c0[1], c1[1], c2[1], c0[2], c1[2], c2[2]};
  return m;
}

Mat3 Mat3::from_matrix(const Matrix& m) {
  if (m.rows() != 3 || m.cols() != 3)
    throw Error(ErrorCode::kShapeMismatch, "expected a 3x3 matrix");
  Mat3 out;
  std::copy(m.data().begin(), m.data().end(), out.a.begin());
  return out;
}

Mat3 Mat3::transpose() const {
  Mat3 t;
  t.a = {a[0], a[3], a[6], a[1], a[4], a[7], a[2], a[5], a[8]};
  return t;
}

double Mat3::det() const {
  return a[0] * (a[4] * a[8] - a[5] * a[7]) -
         a[1] * (a[3] * a[8] - a[5] * a[6]) +
         a[2] * (a[3] * a[7] - a[4] * a[6]);
}

Matrix Mat3::to_matrix() const {
  return Matrix(3, 3, std::vector<double>(a.begin(), a.end()));
}

Mat3 operator*(const Mat3& x, const Mat3& y) {
  Mat3 z;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      z(i, j) = x(i, 0) * y(0, j) + x(i, 1) * y(1, j) + x(i, 2) * y(2, j);
  return z;
}

Vec3 operator*(const Mat3& x, const Vec3& v) {
  return {x(0, 0) * v[0] + x(0, 1) * v[1] + x(0, 2) * v[2],
          x(1, 0) * v[0] + x(1, 1) * v[1] + x(1, 2) * v[2],
          x(2, 0) * v[0] + x(2, 1) * v[1] + x(2, 2) * v[2]};
}

Mat3 operator+(const Mat3& x, const Mat3& y) {
  Mat3 z;
  for (int i = 0; i < 9; ++i) z.a[i] = x.a[i] + y.a[i];
  return z;
}

Mat3 operator-(const Mat3& x, const Mat3& y) {
  Mat3 z;
  for (int i = 0; i < 9; ++i) z.a[i] = x.a[i] - y.a[i];
  return z;
}

Mat3 operator*(double s, const Mat3& x) {
  Mat3 z;
  for (int i = 0; i < 9; ++i) z.a[i] = s * x.a[i];
  return z;
}

double max_abs(const Mat3& x) {
  double m = 0.0;
  for (double v : x.a) m = std::max(m, std::abs(v));
  return m;
}

double frobenius_norm(const Mat3& x) {
  double s = 0.0;
  for (double v : x.a) s += v * v;
  return std::sqrt(s);
}

// ---- group types ------------------------------------------------------------

double RotationMatrix::membership_error(const Mat3& r) {
  Mat3 g = r.transpose() * r - Mat3::identity();
  return std::max(max_abs(g), std::abs(r.det() - 1.0));
}

RotationMatrix RotationMatrix::from_matrix(const Mat3& r) {
  for (double x : r.a)
    if (!std::isfinite(x))
      throw Error(ErrorCode::kInvalidPoint, "rotation has non-finite entries");
  const double err = membership_error(r);
  if (err > 1e-9) {
    throw Error(ErrorCode::kInvalidPoint,
                "not a rotation (orthogonality/determinant error " +
                    std::to_string(err) + ")");
  }
  return RotationMatrix(r);
}

RotationMatrix operator*(const RotationMatrix& a, const RotationMatrix& b) {
  return RotationMatrix::unchecked(a.matrix() * b.matrix());
}

RigidTransform RigidTransform::inverse() const {
  RotationMatrix rinv = rot.inverse();
  Vec3 t = rinv.apply(trans);
  return {rinv, {-t[0], -t[1], -t[2]}};
}

Matrix RigidTransform::homogeneous() const {
  Matrix h(4, 4);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) h(i, j) = rot(i, j);
    h(i, 3) = trans[i];
  }
  h(3, 3) = 1.0;
  return h;
}

RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
  return {a.rot * b.rot, a.rot.apply(b.trans) + a.trans};
}

// ---- tags -------------------------------------------------------------------

std::string_view tag_name(ReprTag tag) {
  switch (tag) {
    case ReprTag::kEuler3: return "euler3";
    case ReprTag::kAxis3: return "axis3";
    case ReprTag::kQuat4: return "quat4";
    case ReprTag::kSixD6: return "sixd6";
    case ReprTag::kNine9: return "nine9";
    case ReprTag::kSe12: return "se12";
    case ReprTag::kSymVec: return "symvec";
  }
  return "?";
}

ReprTag parse_tag(std::string_view name) {
  for (ReprTag t : {ReprTag::kEuler3, ReprTag::kAxis3, ReprTag::kQuat4,
                    ReprTag::kSixD6, ReprTag::kNine9, ReprTag::kSe12,
                    ReprTag::kSymVec}) {
    if (tag_name(t) == name) return t;
  }
  throw Error(ErrorCode::kUnknownTag, "unknown representation tag '" +
                                          std::string(name) + "'");
}

std::size_t tag_length(ReprTag tag) {
  switch (tag) {
    case ReprTag::kEuler3: return 3;
    case ReprTag::kAxis3: return 3;
    case ReprTag::kQuat4: return 4;
    case ReprTag::kSixD6: return 6;
    case ReprTag::kNine9: return 9;
    case ReprTag::kSe12: return 12;
    case ReprTag::kSymVec: return 0;
  }
  return 0;
}

bool is_rotation_tag(ReprTag tag) {
  return tag != ReprTag::kSe12 && tag != ReprTag::kSymVec;
}

EmbeddedVector EmbeddedVector::make(ReprTag tag, std::vector<double> data) {
  const std::size_t want = tag_length(tag);
  if (want != 0 && data.size() != want) {
    throw Error(ErrorCode::kLengthMismatch,
                std::string(tag_name(tag)) + " needs " + std::to_string(want) +
                    " entries, got " + std::to_string(data.size()));
  }
  for (double x : data)
    if (!std::isfinite(x))
      throw Error(ErrorCode::kDegenerateInput, "embedded vector is not finite");
  return EmbeddedVector{tag, std::move(data)};
}

// ---- hat / vee --------------------------------------------------------------

Mat3 hat(const So3Tangent& t) {
  const auto& w = t.omega;
  Mat3 s;
  s.a = {0.0, -w[2], w[1], w[2], 0.0, -w[0], -w[1], w[0], 0.0};
  return s;
}

So3Tangent vee(const Mat3& s) {
  const double asym = max_abs(s + s.transpose());
  if (asym > 1e-9) {
    throw Error(ErrorCode::kNotSkew,
                "max|S + S^T| = " + std::to_string(asym));
  }
  return {{s(2, 1), s(0, 2), s(1, 0)}};
}

// ---- exp / log --------------------------------------------------------------

namespace {

// Coefficients of I + a W + b W^2 for the Rodrigues formula.
void rodrigues_coeffs(double theta, double& a, double& b) {
  const double t2 = theta * theta;
  if (theta < 1e-4) {
    a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
    b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
  } else {
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / t2;
  }
}

Mat3 poly(double a, const Mat3& w, double b) {
  return Mat3::identity() + a * w + b * (w * w);
}

// (vee of the skew part of R, its norm); the norm is sin(theta).
Vec3 skew_axis(const Mat3& r) {
  return {0.5 * (r(2, 1) - r(1, 2)), 0.5 * (r(0, 2) - r(2, 0)),
          0.5 * (r(1, 0) - r(0, 1))};
}

}  // namespace

RotationMatrix exp_so3(const So3Tangent& t) {
  const double theta = norm(t.omega);
  double a, b;
  rodrigues_coeffs(theta, a, b);
  return RotationMatrix::unchecked(poly(a, hat(t), b));
}

So3Tangent log_so3(const RotationMatrix& rot) {
  const Mat3& r = rot.matrix();
  const Vec3 s = skew_axis(r);
  const double sin_theta = norm(s);
  const double cos_theta = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double theta = std::atan2(sin_theta, cos_theta);

  if (theta < 1e-7) {
    // theta / sin(theta) ~ 1 + theta^2 / 6.
    return {(1.0 + theta * theta / 6.0) * s};
  }
  if (cos_theta < -1.0 + 1e-7) {
    // Near pi the skew part vanishes; read the axis off the symmetric part
    // (R + R^T)/2 = cos(theta) I + (1 - cos(theta)) a a^T.
    const double k = 1.0 - cos_theta;
    double aa[3][3];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        aa[i][j] = (0.5 * (r(i, j) + r(j, i)) - (i == j ? cos_theta : 0.0)) / k;
    int big = 0;
    for (int i = 1; i < 3; ++i)
      if (aa[i][i] > aa[big][big]) big = i;
    const double ab = std::sqrt(std::max(aa[big][big], 0.0));
    Vec3 axis{};
    for (int i = 0; i < 3; ++i) axis[i] = aa[i][big] / ab;
    axis = (1.0 / norm(axis)) * axis;
    if (dot(axis, s) < 0.0) axis = -1.0 * axis;
    return {theta * axis};
  }
  return {(theta / sin_theta) * s};
}

RigidTransform exp_se3(const Se3Tangent& t) {
  const double theta = norm(t.omega);
  const Mat3 w = hat({t.omega});
  double a, b;
  rodrigues_coeffs(theta, a, b);
  // V = I + (1 - cos)/theta^2 W + (theta - sin)/theta^3 W^2.
  double c;
  const double t2 = theta * theta;
  if (theta < 1e-4) {
    c = 1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0;
  } else {
    c = (theta - std::sin(theta)) / (t2 * theta);
  }
  const Mat3 v = poly(b, w, c);
  return {RotationMatrix::unchecked(poly(a, w, b)), v * t.v};
}

Se3Tangent log_se3(const RigidTransform& m) {
  const So3Tangent w = log_so3(m.rot);
  const double theta = norm(w.omega);
  const Mat3 wh = hat(w);
  // V^-1 = I - W/2 + (1/theta^2)(1 - theta sin / (2 (1 - cos))) W^2.
  double d;
  if (theta < 1e-4) {
    const double t2 = theta * theta;
    d = 1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0;
  } else {
    d = (1.0 - theta * std::sin(theta) / (2.0 * (1.0 - std::cos(theta)))) /
        (theta * theta);
  }
  const Mat3 vinv = poly(-0.5, wh, d);
  return {w.omega, vinv * m.trans};
}

// ---- embeddings -------------------------------------------------------------

RotationMatrix project_so3_svd(const Mat3& m) {
  const SvdResult f = svd(m.to_matrix());
  const Mat3 u = Mat3::from_matrix(f.u);
  const Mat3 v = Mat3::from_matrix(f.v);
  // sign(det M) = det(U) det(V) whenever M has full rank; branching on the
  // factors keeps the output in SO(3) when det(M) is rounding noise.
  Mat3 h = Mat3::identity();
  if (u.det() * v.det() < 0.0) h(2, 2) = -1.0;
  const RotationMatrix r = RotationMatrix::unchecked(u * h * v.transpose());
  const double small_pair = f.s[1] + f.s[2];
  if (small_pair < 1e-12) {
    throw ErrorWithValue<RotationMatrix>(
        ErrorCode::kRankDeficient,
        "nearest rotation is not unique (s2 + s3 = " +
            std::to_string(small_pair) + ")",
        r, small_pair);
  }
  return r;
}

RotationMatrix project_so3_svd(const EmbeddedVector& e) {
  if (e.tag != ReprTag::kNine9 && e.tag != ReprTag::kSe12)
    throw Error(ErrorCode::kTagMismatch, "project_so3_svd needs nine9");
  if (e.data.size() < 9)
    throw Error(ErrorCode::kLengthMismatch, "nine9 needs 9 entries");
  Mat3 m;
  std::copy_n(e.data.begin(), 9, m.a.begin());
  for (double x : m.a)
    if (!std::isfinite(x))
      throw Error(ErrorCode::kDegenerateInput, "non-finite 3x3 input");
  return project_so3_svd(m);
}

RotationMatrix rot_from_6d(const EmbeddedVector& e) {
  if (e.tag != ReprTag::kSixD6 || e.data.size() != 6)
    throw Error(ErrorCode::kTagMismatch, "rot_from_6d needs sixd6");
  const Vec3 xa{e.data[0], e.data[1], e.data[2]};
  const Vec3 xb{e.data[3], e.data[4], e.data[5]};
  const double na = norm(xa);
  if (!(na >= 1e-12))
    throw Error(ErrorCode::kDegenerateInput, "first 6D vector is zero");
  const Vec3 b1 = (1.0 / na) * xa;
  const Vec3 d = xb - dot(b1, xb) * b1;
  const double nd = norm(d);
  if (!(nd >= 1e-12))
    throw Error(ErrorCode::kDegenerateInput, "6D vectors are parallel");
  const Vec3 b2 = (1.0 / nd) * d;
  return RotationMatrix::unchecked(Mat3::from_cols(b1, b2, cross(b1, b2)));
}

RotationMatrix rotation_from_quaternion(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!(n >= 1e-12))
    throw Error(ErrorCode::kDegenerateInput, "zero quaternion");
  w /= n;
  x /= n;
  y /= n;
  z /= n;
  Mat3 r;
  r.a = {1 - 2 * (y * y + z * z), 2 * (x * y - w * z),     2 * (x * z + w * y),
         2 * (x * y + w * z),     1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
         2 * (x * z - w * y),     2 * (y * z + w * x),     1 - 2 * (x * x + y * y)};
  return RotationMatrix::unchecked(r);
}

namespace {

Mat3 euler_zyx(double yaw, double pitch, double roll) {
  const double cz = std::cos(yaw), sz = std::sin(yaw);
  const double cy = std::cos(pitch), sy = std::sin(pitch);
  const double cx = std::cos(roll), sx = std::sin(roll);
  Mat3 rz, ry, rx;
  rz.a = {cz, -sz, 0, sz, cz, 0, 0, 0, 1};
  ry.a = {cy, 0, sy, 0, 1, 0, -sy, 0, cy};
  rx.a = {1, 0, 0, 0, cx, -sx, 0, sx, cx};
  return rz * ry * rx;
}

}  // namespace

RotationMatrix baseline_to_rotation(const EmbeddedVector& e) {
  switch (e.tag) {
    case ReprTag::kEuler3:
      return RotationMatrix::unchecked(
          euler_zyx(e.data.at(0), e.data.at(1), e.data.at(2)));
    case ReprTag::kAxis3:
      return exp_so3({{e.data.at(0), e.data.at(1), e.data.at(2)}});
    case ReprTag::kQuat4:
      return rotation_from_quaternion(e.data.at(0), e.data.at(1), e.data.at(2),
                                      e.data.at(3));
    default:
      throw Error(ErrorCode::kTagMismatch,
                  "baseline_to_rotation needs euler3, axis3 or quat4");
  }
}

EmbeddedVector embed(const RotationMatrix& r) {
  const auto& a = r.matrix().a;
  return EmbeddedVector{ReprTag::kNine9, std::vector<double>(a.begin(), a.end())};
}

EmbeddedVector embed(const RigidTransform& m) {
  EmbeddedVector e = embed(m.rot);
  e.tag = ReprTag::kSe12;
  e.data.insert(e.data.end(), m.trans.begin(), m.trans.end());
  return e;
}

EmbeddedVector encode_rotation(ReprTag tag, const RotationMatrix& rot) {
  const Mat3& r = rot.matrix();
  switch (tag) {
    case ReprTag::kNine9:
      return embed(rot);
    case ReprTag::kSixD6:
      return {tag, {r(0, 0), r(1, 0), r(2, 0), r(0, 1), r(1, 1), r(2, 1)}};
    case ReprTag::kAxis3: {
      const Vec3 w = log_so3(rot).omega;
      return {tag, {w[0], w[1], w[2]}};
    }
    case ReprTag::kEuler3: {
      const double pitch = std::asin(std::clamp(-r(2, 0), -1.0, 1.0));
      const double yaw = std::atan2(r(1, 0), r(0, 0));
      const double roll = std::atan2(r(2, 1), r(2, 2));
      return {tag, {yaw, pitch, roll}};
    }
    case ReprTag::kQuat4: {
      // Shepperd's method: pivot on the largest of w^2, x^2, y^2, z^2.
      const double tr = r.trace();
      double w, x, y, z;
      if (tr >= r(0, 0) && tr >= r(1, 1) && tr >= r(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + tr);
        w = 0.25 * s;
        x = (r(2, 1) - r(1, 2)) / s;
        y = (r(0, 2) - r(2, 0)) / s;
        z = (r(1, 0) - r(0, 1)) / s;
      } else if (r(0, 0) >= r(1, 1) && r(0, 0) >= r(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + r(0, 0) - r(1, 1) - r(2, 2));
        w = (r(2, 1) - r(1, 2)) / s;
        x = 0.25 * s;
        y = (r(0, 1) + r(1, 0)) / s;
        z = (r(0, 2) + r(2, 0)) / s;
      } else if (r(1, 1) >= r(2, 2)) {
        const double s = 2.0 * std::sqrt(1.0 + r(1, 1) - r(0, 0) - r(2, 2));
        w = (r(0, 2) - r(2, 0)) / s;
        x = (r(0, 1) + r(1, 0)) / s;
        y = 0.25 * s;
        z = (r(1, 2) + r(2, 1)) / s;
      } else {
        const double s = 2.0 * std::sqrt(1.0 + r(2, 2) - r(0, 0) - r(1, 1));
        w = (r(1, 0) - r(0, 1)) / s;
        x = (r(0, 2) + r(2, 0)) / s;
        y = (r(1, 2) + r(2, 1)) / s;
        z = 0.25 * s;
      }
      if (w < 0.0) {
        w = -w;
        x = -x;
        y = -y;
        z = -z;
      }
      return {tag, {w, x, y, z}};
    }
    default:
      throw Error(ErrorCode::kTagMismatch,
                  std::string(tag_name(tag)) + " is not a rotation tag");
  }
}

ManifoldPoint inverse_embed(const EmbeddedVector& e) {
  const std::size_t want = tag_length(e.tag);
  if (want != 0 && e.data.size() != want)
    throw Error(ErrorCode::kLengthMismatch, "embedded vector length");
  switch (e.tag) {
    case ReprTag::kEuler3:
    case ReprTag::kAxis3:
    case ReprTag::kQuat4:
      return baseline_to_rotation(e);
    case ReprTag::kSixD6:
      return rot_from_6d(e);
    case ReprTag::kNine9:
      return project_so3_svd(e);
    case ReprTag::kSe12:
      return RigidTransform{project_so3_svd(e), {e.data[9], e.data[10], e.data[11]}};
    default:
      throw Error(ErrorCode::kUnknownTag,
                  std::string(tag_name(e.tag)) + " has no SO(3)/SE(3) inverse");
  }
}

RotationMatrix to_rotation(const EmbeddedVector& e) {
  ManifoldPoint p = inverse_embed(e);
  if (auto* r = std::get_if<RotationMatrix>(&p)) return *r;
  return std::get<RigidTransform>(p).rot;
}

// ---- distances --------------------------------------------------------------

double dist_geodesic(const RotationMatrix& a, const RotationMatrix& b) {
  return norm(log_so3(a.inverse() * b).omega);
}

double dist_geodesic(const RigidTransform& a, const RigidTransform& b) {
  const Se3Tangent xi = log_se3(a.inverse() * b);
  return std::sqrt(dot(xi.omega, xi.omega) + dot(xi.v, xi.v));
}

double dist_angular(const RotationMatrix& a, const RotationMatrix& b) {
  const double tr = (a.inverse() * b).matrix().trace();
  return std::acos(std::clamp(0.5 * (tr - 1.0), -1.0, 1.0));
}

double dist_extrinsic(const EmbeddedVector& a, const EmbeddedVector& b) {
  if (a.tag != b.tag || a.data.size() != b.data.size()) {
    throw Error(ErrorCode::kTagMismatch,
                std::string(tag_name(a.tag)) + " vs " + std::string(tag_name(b.tag)));
  }
  if (a.data.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    s += d * d;
  }
  return s / static_cast<double>(a.data.size());
}

// ---- concentrated Gaussian --------------------------------------------------

namespace {

Matrix checked_cholesky(const Matrix& sigma, std::size_t dim) {
  if (sigma.rows() != dim || sigma.cols() != dim)
    throw Error(ErrorCode::kShapeMismatch,
                "covariance must be " + std::to_string(dim) + "x" + std::to_string(dim));
  if (asymmetry(sigma) > 1e-12)
    throw Error(ErrorCode::kNotSymmetric, "covariance is not symmetric");
  return cholesky(sigma);
}

std::vector<double> correlated_normal(const Matrix& chol, Rng& rng) {
  const std::size_t d = chol.rows();
  std::vector<double> z(d);
  for (double& x : z) x = rng.gaussian();
  std::vector<double> e(d, 0.0);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k <= i; ++k) e[i] += chol(i, k) * z[k];
  return e;
}

}  // namespace

ConcentratedGaussianSO3::ConcentratedGaussianSO3(RotationMatrix m, Matrix s)
    : mean(m), sigma(std::move(s)), chol(checked_cholesky(sigma, 3)) {}

ConcentratedGaussianSO3 ConcentratedGaussianSO3::isotropic(RotationMatrix mean,
                                                           double stddev) {
  return ConcentratedGaussianSO3(mean, Matrix::identity(3) * (stddev * stddev));
}

ConcentratedGaussianSE3::ConcentratedGaussianSE3(RigidTransform m, Matrix s)
    : mean(m), sigma(std::move(s)), chol(checked_cholesky(sigma, 6)) {}

RotationMatrix sample_concentrated(const ConcentratedGaussianSO3& g, Rng& rng) {
  const auto e = correlated_normal(g.chol, rng);
  return g.mean * exp_so3({{e[0], e[1], e[2]}});
}

RigidTransform sample_concentrated(const ConcentratedGaussianSE3& g, Rng& rng) {
  const auto e = correlated_normal(g.chol, rng);
  return g.mean * exp_se3({{e[0], e[1], e[2]}, {e[3], e[4], e[5]}});
}

// ---- means ------------------------------------------------------------------

RotationMatrix frechet_mean(std::span<const RotationMatrix> samples,
                            FrechetDiagnostics* diag) {
  if (samples.empty())
    throw Error(ErrorCode::kDegenerateInput, "frechet_mean of no samples");
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double d = dist_geodesic(samples[0], samples[i]);
    if (d >= pi / 2) {
      throw Error(ErrorCode::kDispersedSamples,
                  "sample " + std::to_string(i) + " is " + std::to_string(d) +
                      " rad from the first sample");
    }
  }
  constexpr int kMaxIterations = 1000;
  const double inv_n = 1.0 / static_cast<double>(samples.size());
  RotationMatrix mu = samples[0];
  double step = 0.0;
  for (int it = 1; it <= kMaxIterations; ++it) {
    const RotationMatrix mu_inv = mu.inverse();
    Vec3 acc{};
    for (const RotationMatrix& r : samples) acc = acc + log_so3(mu_inv * r).omega;
    const Vec3 update = inv_n * acc;
    step = norm(update);
    mu = mu * exp_so3({update});
    if (step <= 1e-10) {
      if (diag != nullptr) *diag = {it, step};
      return mu;
    }
  }
  if (diag != nullptr) *diag = {kMaxIterations, step};
  throw ErrorWithValue<RotationMatrix>(ErrorCode::kNonConvergence,
                                       "Frechet mean iteration hit its cap", mu,
                                       step);
}

RotationMatrix chordal_mean_project(std::span<const RotationMatrix> samples) {
  if (samples.empty())
    throw Error(ErrorCode::kDegenerateInput, "chordal mean of no samples");
  Mat3 acc{};
  for (const RotationMatrix& r : samples) acc = acc + r.matrix();
  return project_so3_svd((1.0 / static_cast<double>(samples.size())) * acc);
}

// ---- sampling ---------------------------------------------------------------

std::string_view mode_name(SampleMode mode) {
  switch (mode) {
    case SampleMode::kEuler: return "euler";
    case SampleMode::kAxis: return "axis";
    case SampleMode::kSo3: return "so3";
  }
  return "?";
}

SampleMode parse_mode(std::string_view name) {
  for (SampleMode m : {SampleMode::kEuler, SampleMode::kAxis, SampleMode::kSo3})
    if (mode_name(m) == name) return m;
  throw Error(ErrorCode::kBadConfig, "unknown sampling mode '" + std::string(name) + "'");
}

RigidTransform sample_transform_uniform(SampleMode mode, double fraction, Rng& rng) {
  if (!(fraction > 0.0 && fraction <= 1.0))
    throw Error(ErrorCode::kBadFraction,
                "fraction must lie in (0, 1], got " + std::to_string(fraction));
  const double half_width = pi * fraction;
  Vec3 angles{};
  for (double& x : angles) x = rng.uniform(-half_width, half_width);
  RigidTransform out;
  if (mode == SampleMode::kEuler) {
    out.rot = RotationMatrix::unchecked(euler_zyx(angles[0], angles[1], angles[2]));
  } else {
    out.rot = exp_so3({angles});
  }
  for (double& x : out.trans) x = rng.gaussian();
  return out;
}

RotationMatrix sample_rotation_uniform(Rng& rng) {
  double q[4];
  double n = 0.0;
  do {
    for (double& x : q) x = rng.gaussian();
    n = std::sqrt(q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]);
  } while (n < 1e-6);
  return rotation_from_quaternion(q[0], q[1], q[2], q[3]);
}

}  // namespace demr
