#include <cmath>
#include <numbers>

#include "demr/liegroups.hpp"
#include "test_util.hpp"

namespace {

using demr::ErrorCode;
using demr::Mat3;
using demr::ReprTag;
using demr::RotationMatrix;
using demr::Vec3;
using testutil::expect_rotation;
using testutil::max_diff;
using testutil::rz;
using demr::operator*;
using demr::operator+;
using demr::operator-;

constexpr double kPi = std::numbers::pi;

// Truncated power series of a square matrix exponential.
demr::Matrix expm_series(const demr::Matrix& a) {
  const std::size_t n = a.rows();
  demr::Matrix sum = demr::Matrix::identity(n), term = demr::Matrix::identity(n);
  for (int k = 1; k < 60; ++k) {
    term = (1.0 / k) * (term * a);
    sum += term;
  }
  return sum;
}

Mat3 rx(double a) {
  Mat3 m = Mat3::identity();
  m(1, 1) = std::cos(a);
  m(1, 2) = -std::sin(a);
  m(2, 1) = std::sin(a);
  m(2, 2) = std::cos(a);
  return m;
}

Mat3 ry(double a) {
  Mat3 m = Mat3::identity();
  m(0, 0) = std::cos(a);
  m(0, 2) = std::sin(a);
  m(2, 0) = -std::sin(a);
  m(2, 2) = std::cos(a);
  return m;
}

Vec3 random_vec(demr::Rng& rng, double scale) {
  return {scale * rng.gaussian(), scale * rng.gaussian(), scale * rng.gaussian()};
}

Vec3 random_in_ball(demr::Rng& rng, double radius) {
  const Vec3 v = random_vec(rng, 1.0);
  return (radius * rng.uniform() / demr::norm(v)) * v;
}

TEST(HatVee, Examples) {
  EXPECT_EQ(demr::hat({{0, 0, 0}}), Mat3{});
  const Mat3 h = demr::hat({{1, 2, 3}});
  const Mat3 expected{{0, -3, 2, 3, 0, -1, -2, 1, 0}};
  EXPECT_EQ(h, expected);
}

TEST(HatVee, RoundtripAndCrossProduct) {
  demr::Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 t = random_vec(rng, 2.0);
    EXPECT_EQ(demr::vee(demr::hat({t})).omega, t);
    const Vec3 x = random_vec(rng, 1.0);
    const Vec3 hx = demr::hat({t}) * x;
    const Vec3 cx = demr::cross(t, x);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(hx[k], cx[k], 1e-15);
  }
  EXPECT_DEMR_ERROR(demr::vee(Mat3::identity()), ErrorCode::kNotSkew);
}

TEST(ExpSo3, Examples) {
  EXPECT_EQ(demr::exp_so3({{0, 0, 0}}).matrix(), Mat3::identity());
  const Mat3 expected{{0, -1, 0, 1, 0, 0, 0, 0, 1}};
  EXPECT_LE(max_diff(demr::exp_so3({{0, 0, kPi / 2}}).matrix(), expected), 1e-15);
}

TEST(ExpSo3, MatchesPowerSeries) {
  demr::Rng rng(2);
  for (int i = 0; i < 200; ++i) {
    const Vec3 t = random_vec(rng, 1.5);
    const RotationMatrix r = demr::exp_so3({t});
    expect_rotation(r);
    const Mat3 oracle = Mat3::from_matrix(expm_series(demr::hat({t}).to_matrix()));
    EXPECT_LE(max_diff(r.matrix(), oracle), 1e-12);
  }
}

TEST(LogSo3, PiRotation) {
  const Mat3 m{{1, 0, 0, 0, -1, 0, 0, 0, -1}};
  const Vec3 w = demr::log_so3(RotationMatrix::from_matrix(m)).omega;
  EXPECT_NEAR(demr::norm(w), kPi, 1e-12);
  EXPECT_NEAR(std::abs(w[0]), kPi, 1e-12);
  EXPECT_NEAR(w[1], 0.0, 1e-12);
  EXPECT_NEAR(w[2], 0.0, 1e-12);
}

TEST(LogSo3, NearPiAndNearZeroBranches) {
  demr::Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    Vec3 axis = random_vec(rng, 1.0);
    axis = (1.0 / demr::norm(axis)) * axis;
    for (double angle : {kPi - 1e-3, kPi - 1e-6, kPi - 1e-9, 1e-5, 1e-8, 1e-12}) {
      const RotationMatrix r = demr::exp_so3({angle * axis});
      const Vec3 w = demr::log_so3(r).omega;
      EXPECT_LE(demr::norm(w), kPi + 1e-9);
      EXPECT_LE(max_diff(demr::exp_so3({w}).matrix(), r.matrix()), 1e-9);
    }
  }
}

TEST(LogSo3, RoundtripBothDirections) {
  demr::Rng rng(4);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 t = random_in_ball(rng, kPi - 1e-3);
    const Vec3 back = demr::log_so3(demr::exp_so3({t})).omega;
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(back[k], t[k], 1e-9);
    const RotationMatrix r = demr::sample_rotation_uniform(rng);
    EXPECT_LE(max_diff(demr::exp_so3(demr::log_so3(r)).matrix(), r.matrix()), 1e-9);
  }
}

TEST(Se3, Examples) {
  const auto id = demr::exp_se3({});
  EXPECT_EQ(id.rot.matrix(), Mat3::identity());
  EXPECT_EQ(id.trans, (Vec3{0, 0, 0}));
  const auto t = demr::exp_se3({{0, 0, 0}, {1, 2, 3}});
  EXPECT_EQ(t.rot.matrix(), Mat3::identity());
  EXPECT_EQ(t.trans, (Vec3{1, 2, 3}));
}

TEST(Se3, MatchesHomogeneousPowerSeries) {
  demr::Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const Vec3 w = random_vec(rng, 1.0), v = random_vec(rng, 2.0);
    demr::Matrix xi(4, 4);
    const Mat3 h = demr::hat({w});
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) xi(r, c) = h(r, c);
      xi(r, 3) = v[r];
    }
    const demr::Matrix oracle = expm_series(xi);
    const demr::Matrix got = demr::exp_se3({w, v}).homogeneous();
    EXPECT_LE(demr::max_abs(got - oracle), 1e-12);
  }
}

TEST(Se3, LogRoundtrip) {
  demr::Rng rng(6);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const demr::Se3Tangent xi{random_in_ball(rng, 3.0), random_vec(rng, 2.0)};
    const auto back = demr::log_se3(demr::exp_se3(xi));
    for (int k = 0; k < 3; ++k) {
      worst = std::max(worst, std::abs(back.omega[k] - xi.omega[k]));
      worst = std::max(worst, std::abs(back.v[k] - xi.v[k]));
    }
  }
  EXPECT_LE(worst, 1e-8);
  // Tiny rotations use the series form of V.
  const demr::Se3Tangent small{{1e-9, -2e-9, 5e-10}, {1, 2, 3}};
  const auto b = demr::log_se3(demr::exp_se3(small));
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(b.v[k], small.v[k], 1e-12);
}

TEST(ProjectSo3, Examples) {
  EXPECT_LE(max_diff(demr::project_so3_svd(Mat3::identity()).matrix(), Mat3::identity()), 1e-15);
  const Mat3 d211{{2, 0, 0, 0, 1, 0, 0, 0, 1}};
  EXPECT_LE(max_diff(demr::project_so3_svd(d211).matrix(), Mat3::identity()), 1e-15);
  const Mat3 reflect{{1, 0, 0, 0, 1, 0, 0, 0, -1}};
  EXPECT_LE(max_diff(demr::project_so3_svd(reflect).matrix(), Mat3::identity()), 1e-15);
}

TEST(ProjectSo3, IdempotentOnRotations) {
  demr::Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const RotationMatrix r = demr::sample_rotation_uniform(rng);
    const RotationMatrix p = demr::project_so3_svd(demr::embed(r));
    EXPECT_LE(max_diff(p.matrix(), r.matrix()), 1e-9);
  }
}

TEST(ProjectSo3, BeatsRandomRotations) {
  demr::Rng rng(8);
  for (int i = 0; i < 200; ++i) {
    Mat3 m;
    for (double& x : m.a) x = rng.gaussian();
    const RotationMatrix best = demr::project_so3_svd(m);
    expect_rotation(best);
    const double d = demr::frobenius_norm(m - best.matrix());
    for (int k = 0; k < 200; ++k) {
      const RotationMatrix r = demr::sample_rotation_uniform(rng);
      EXPECT_LE(d, demr::frobenius_norm(m - r.matrix()) + 1e-9);
    }
    // Local optimality: small rotations of the optimum never improve it.
    for (int k = 0; k < 20; ++k) {
      const RotationMatrix r = best * demr::exp_so3({random_vec(rng, 1e-3)});
      EXPECT_LE(d, demr::frobenius_norm(m - r.matrix()) + 1e-12);
    }
  }
}

TEST(ProjectSo3, RankDeficientCarriesRepresentative) {
  const Mat3 rank1{{1, 0, 0, 0, 0, 0, 0, 0, 0}};
  try {
    demr::project_so3_svd(rank1);
    ADD_FAILURE() << "expected RankDeficient";
  } catch (const demr::ErrorWithValue<RotationMatrix>& e) {
    EXPECT_EQ(e.code(), ErrorCode::kRankDeficient);
    expect_rotation(e.value());
  }
}

TEST(SixD, Examples) {
  auto six = [](std::vector<double> v) {
    return demr::rot_from_6d(demr::EmbeddedVector::make(ReprTag::kSixD6, std::move(v)));
  };
  EXPECT_EQ(six({1, 0, 0, 0, 1, 0}).matrix(), Mat3::identity());
  EXPECT_LE(max_diff(six({2, 0, 0, 0, 3, 0}).matrix(), Mat3::identity()), 1e-15);
  const double h = 1.0 / std::sqrt(2.0);
  const Mat3 expected = Mat3::from_cols({h, h, 0}, {-h, h, 0}, {0, 0, 1});
  EXPECT_LE(max_diff(six({1, 1, 0, 0, 1, 0}).matrix(), expected), 1e-15);
  EXPECT_DEMR_ERROR(six({0, 0, 0, 0, 1, 0}), ErrorCode::kDegenerateInput);
  EXPECT_DEMR_ERROR(six({1, 0, 0, 2, 0, 0}), ErrorCode::kDegenerateInput);
}

TEST(SixD, RandomInputsLandOnSo3) {
  demr::Rng rng(9);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> v(6);
    for (double& x : v) x = rng.gaussian();
    const RotationMatrix r = demr::rot_from_6d(demr::EmbeddedVector::make(ReprTag::kSixD6, v));
    expect_rotation(r, 1e-12);
    const Vec3 xa{v[0], v[1], v[2]};
    const Vec3 c0 = r.matrix().col(0);
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(c0[k], xa[k] / demr::norm(xa), 1e-15);
  }
}

TEST(Baselines, Examples) {
  auto conv = [](ReprTag tag, std::vector<double> v) {
    return demr::baseline_to_rotation(demr::EmbeddedVector::make(tag, std::move(v))).matrix();
  };
  EXPECT_EQ(conv(ReprTag::kEuler3, {0, 0, 0}), Mat3::identity());
  EXPECT_EQ(conv(ReprTag::kQuat4, {1, 0, 0, 0}), Mat3::identity());
  EXPECT_LE(max_diff(conv(ReprTag::kAxis3, {0, 0, kPi / 2}), rz(kPi / 2)), 1e-15);
  EXPECT_DEMR_ERROR(conv(ReprTag::kQuat4, {0, 0, 0, 0}), ErrorCode::kDegenerateInput);
}

TEST(Baselines, EulerIsIntrinsicZyx) {
  demr::Rng rng(10);
  for (int i = 0; i < 500; ++i) {
    const double a = rng.uniform(-kPi, kPi), b = rng.uniform(-kPi / 2, kPi / 2),
                 c = rng.uniform(-kPi, kPi);
    const Mat3 got =
        demr::baseline_to_rotation(demr::EmbeddedVector::make(ReprTag::kEuler3, {a, b, c}))
            .matrix();
    EXPECT_LE(max_diff(got, rz(a) * ry(b) * rx(c)), 1e-14);
  }
}

TEST(Baselines, QuaternionMatchesHamiltonFormula) {
  demr::Rng rng(11);
  for (int i = 0; i < 500; ++i) {
    double q[4];
    double n = 0.0;
    for (double& x : q) {
      x = rng.gaussian();
      n += x * x;
    }
    n = std::sqrt(n);
    const double w = q[0] / n, x = q[1] / n, y = q[2] / n, z = q[3] / n;
    const Mat3 oracle{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
                       2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
                       2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}};
    const Mat3 got = demr::baseline_to_rotation(
                         demr::EmbeddedVector::make(ReprTag::kQuat4, {q[0], q[1], q[2], q[3]}))
                         .matrix();
    EXPECT_LE(max_diff(got, oracle), 1e-14);
  }
}

TEST(Encode, EveryTagRoundtrips) {
  demr::Rng rng(12);
  for (int i = 0; i < 1000; ++i) {
    const RotationMatrix r = demr::sample_rotation_uniform(rng);
    for (ReprTag tag : {ReprTag::kEuler3, ReprTag::kAxis3, ReprTag::kQuat4, ReprTag::kSixD6,
                        ReprTag::kNine9}) {
      const auto e = demr::encode_rotation(tag, r);
      EXPECT_EQ(e.data.size(), demr::tag_length(tag));
      const RotationMatrix back = demr::to_rotation(e);
      expect_rotation(back);
      EXPECT_LE(max_diff(back.matrix(), r.matrix()), 1e-9) << demr::tag_name(tag);
    }
    const auto q = demr::encode_rotation(ReprTag::kQuat4, r);
    EXPECT_GE(q.data[0], 0.0);
    const auto eu = demr::encode_rotation(ReprTag::kEuler3, r);
    EXPECT_LE(std::abs(eu.data[1]), kPi / 2 + 1e-12);
  }
}

TEST(Embed, Examples) {
  EXPECT_EQ(demr::embed(RotationMatrix::identity()).data,
            (std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1}));
  const demr::RigidTransform t{RotationMatrix::identity(), {1, 2, 3}};
  const auto e = demr::embed(t);
  EXPECT_EQ(e.tag, ReprTag::kSe12);
  EXPECT_EQ(e.data, (std::vector<double>{1, 0, 0, 0, 1, 0, 0, 0, 1, 1, 2, 3}));
}

TEST(Embed, EquivariantUnderLeftMultiplication) {
  demr::Rng rng(13);
  for (int i = 0; i < 500; ++i) {
    const RotationMatrix g = demr::sample_rotation_uniform(rng);
    const RotationMatrix r = demr::sample_rotation_uniform(rng);
    const auto lhs = demr::embed(g * r).data;
    Mat3 reshaped;
    const auto er = demr::embed(r).data;
    std::copy(er.begin(), er.end(), reshaped.a.begin());
    const Mat3 rhs = g.matrix() * reshaped;
    for (int k = 0; k < 9; ++k) EXPECT_EQ(lhs[k], rhs.a[k]);
  }
}

TEST(InverseEmbed, Dispatch) {
  demr::Rng rng(14);
  const RotationMatrix r = demr::sample_rotation_uniform(rng);
  const auto got = std::get<RotationMatrix>(demr::inverse_embed(demr::embed(r)));
  EXPECT_LE(max_diff(got.matrix(), r.matrix()), 1e-9);
  EXPECT_EQ(std::get<RotationMatrix>(demr::inverse_embed(
                demr::EmbeddedVector::make(ReprTag::kSixD6, {1, 0, 0, 0, 1, 0})))
                .matrix(),
            Mat3::identity());

  // se12 with a perturbed rotation block equals the composed sub-operations.
  std::vector<double> data = demr::embed(r).data;
  Mat3 m;
  for (int k = 0; k < 9; ++k) m.a[k] = data[k] += 0.01 * rng.gaussian();
  for (double t : {0.5, -1.5, 2.0}) data.push_back(t);
  const auto se = std::get<demr::RigidTransform>(
      demr::inverse_embed(demr::EmbeddedVector::make(ReprTag::kSe12, data)));
  EXPECT_EQ(se.rot.matrix(), demr::project_so3_svd(m).matrix());
  EXPECT_EQ(se.trans, (Vec3{0.5, -1.5, 2.0}));

  EXPECT_DEMR_ERROR(demr::EmbeddedVector::make(ReprTag::kNine9, {1, 2}),
                    ErrorCode::kLengthMismatch);
  EXPECT_DEMR_ERROR(demr::parse_tag("ortho5"), ErrorCode::kUnknownTag);
}

TEST(Distances, Examples) {
  demr::Rng rng(15);
  const RotationMatrix r = demr::sample_rotation_uniform(rng);
  const RotationMatrix q = RotationMatrix::from_matrix(rz(kPi / 2));
  EXPECT_EQ(demr::dist_geodesic(r, r), 0.0);
  EXPECT_NEAR(demr::dist_geodesic(RotationMatrix::identity(), q), kPi / 2, 1e-15);
  // acos loses precision near 1: (R, R) is only zero to ~sqrt(eps).
  EXPECT_LE(demr::dist_angular(r, r), 1e-7);
  EXPECT_NEAR(demr::dist_angular(RotationMatrix::identity(), q), kPi / 2, 1e-15);
}

TEST(Distances, MetricAndBiInvariance) {
  demr::Rng rng(16);
  for (int i = 0; i < 1000; ++i) {
    const RotationMatrix a = demr::sample_rotation_uniform(rng);
    const RotationMatrix b = demr::sample_rotation_uniform(rng);
    const RotationMatrix c = demr::sample_rotation_uniform(rng);
    const RotationMatrix g = demr::sample_rotation_uniform(rng);
    const double ab = demr::dist_geodesic(a, b);
    EXPECT_NEAR(ab, demr::dist_geodesic(b, a), 1e-12);
    EXPECT_LE(demr::dist_geodesic(a, c), ab + demr::dist_geodesic(b, c) + 1e-9);
    EXPECT_NEAR(demr::dist_geodesic(g * a, g * b), ab, 1e-9);
    EXPECT_NEAR(demr::dist_angular(g * a, g * b), demr::dist_angular(a, b), 1e-9);
  }
}

TEST(Distances, AngularAgreesWithGeodesic) {
  demr::Rng rng(17);
  double worst = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const RotationMatrix a = demr::sample_rotation_uniform(rng);
    const RotationMatrix b = demr::sample_rotation_uniform(rng);
    worst = std::max(worst, std::abs(demr::dist_angular(a, b) - demr::dist_geodesic(a, b)));
  }
  EXPECT_LE(worst, 1e-9);
}

TEST(Distances, ExtrinsicMse) {
  const auto a = demr::embed(RotationMatrix::identity());
  const auto b = demr::embed(RotationMatrix::from_matrix(rz(kPi)));
  EXPECT_EQ(demr::dist_extrinsic(a, a), 0.0);
  EXPECT_NEAR(demr::dist_extrinsic(a, b), 8.0 / 9.0, 1e-15);
  EXPECT_DEMR_ERROR(demr::dist_extrinsic(a, demr::encode_rotation(ReprTag::kSixD6,
                                                                  RotationMatrix::identity())),
                    ErrorCode::kTagMismatch);
  demr::Rng rng(18);
  for (int i = 0; i < 1000; ++i) {
    const RotationMatrix x = demr::sample_rotation_uniform(rng);
    const RotationMatrix y = demr::sample_rotation_uniform(rng);
    const double s = std::sin(demr::dist_geodesic(x, y) / 2);
    EXPECT_NEAR(9.0 * demr::dist_extrinsic(demr::embed(x), demr::embed(y)), 8.0 * s * s, 1e-12);
  }
}

TEST(Distances, Se3) {
  demr::Rng rng(19);
  const demr::RigidTransform a = demr::exp_se3({random_vec(rng, 1.0), random_vec(rng, 1.0)});
  EXPECT_NEAR(demr::dist_geodesic(a, a), 0.0, 1e-12);
  const demr::Se3Tangent xi{{0.1, -0.2, 0.3}, {1, 0, -1}};
  const demr::RigidTransform b = a * demr::exp_se3(xi);
  const double expected = std::sqrt(0.01 + 0.04 + 0.09 + 1 + 1);
  EXPECT_NEAR(demr::dist_geodesic(a, b), expected, 1e-12);
}

TEST(ConcentratedGaussian, DegenerateNoiseReturnsMean) {
  demr::Rng rng(20);
  const RotationMatrix mu = demr::sample_rotation_uniform(rng);
  const auto g = demr::ConcentratedGaussianSO3::isotropic(mu, 1e-12);
  for (int i = 0; i < 100; ++i)
    EXPECT_LE(max_diff(demr::sample_concentrated(g, rng).matrix(), mu.matrix()), 1e-9);
}

TEST(ConcentratedGaussian, TangentMeanIsZero) {
  demr::Rng rng(21);
  const double sigma = 0.05;
  const int n = 100000;
  const auto g = demr::ConcentratedGaussianSO3::isotropic(RotationMatrix::identity(), sigma);
  Vec3 sum{};
  for (int i = 0; i < n; ++i) sum = sum + demr::log_so3(demr::sample_concentrated(g, rng)).omega;
  for (int k = 0; k < 3; ++k) EXPECT_LE(std::abs(sum[k] / n), 3 * sigma / std::sqrt(n));
}

TEST(ConcentratedGaussian, AngleFollowsChiThree) {
  // ||eps|| for eps ~ N(0, sigma^2 I3) is chi-distributed with 3 degrees of
  // freedom: mean 2 sigma sqrt(2/pi), variance sigma^2 (3 - 8/pi).
  demr::Rng rng(22);
  const double sigma = 0.02;
  const int n = 10000;
  const auto g =
      demr::ConcentratedGaussianSO3::isotropic(demr::sample_rotation_uniform(rng), sigma);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += demr::dist_geodesic(g.mean, demr::sample_concentrated(g, rng));
  const double mean = 2 * sigma * std::sqrt(2 / kPi);
  const double se = sigma * std::sqrt(3 - 8 / kPi) / std::sqrt(n);
  EXPECT_NEAR(sum / n, mean, 3 * se);
}

TEST(ConcentratedGaussian, SeededStreamsMatch) {
  const auto g = demr::ConcentratedGaussianSO3::isotropic(RotationMatrix::identity(), 0.3);
  demr::Rng a(5), b(5);
  for (int i = 0; i < 100; ++i)
    EXPECT_EQ(demr::sample_concentrated(g, a).matrix(), demr::sample_concentrated(g, b).matrix());
  demr::Matrix cov = demr::Matrix::identity(6);
  cov *= 0.01;
  const demr::ConcentratedGaussianSE3 g6(demr::RigidTransform::identity(), cov);
  for (int i = 0; i < 100; ++i) expect_rotation(demr::sample_concentrated(g6, a).rot);
  EXPECT_DEMR_ERROR(
      demr::ConcentratedGaussianSO3(RotationMatrix::identity(), demr::Matrix(3, 3)),
      ErrorCode::kDegenerateInput);
}

TEST(Means, SymmetricPairsAndConstantSamples) {
  demr::Rng rng(23);
  const RotationMatrix r = demr::sample_rotation_uniform(rng);
  const std::vector<RotationMatrix> same(5, r);
  EXPECT_LE(max_diff(demr::frechet_mean(same).matrix(), r.matrix()), 1e-12);
  EXPECT_LE(max_diff(demr::chordal_mean_project(same).matrix(), r.matrix()), 1e-12);
  const std::vector<RotationMatrix> pair{RotationMatrix::from_matrix(rz(0.3)),
                                         RotationMatrix::from_matrix(rz(-0.3))};
  EXPECT_LE(max_diff(demr::frechet_mean(pair).matrix(), Mat3::identity()), 1e-12);
  EXPECT_LE(max_diff(demr::chordal_mean_project(pair).matrix(), Mat3::identity()), 1e-12);
}

TEST(Means, FrechetIsStationaryAndClose) {
  demr::Rng rng(24);
  const double sigma = 0.05;
  const RotationMatrix mu = demr::sample_rotation_uniform(rng);
  const auto g = demr::ConcentratedGaussianSO3::isotropic(mu, sigma);
  std::vector<RotationMatrix> xs(10000);
  for (auto& x : xs) x = demr::sample_concentrated(g, rng);
  demr::FrechetDiagnostics diag;
  const RotationMatrix m = demr::frechet_mean(xs, &diag);
  EXPECT_LE(diag.last_update, 1e-10);
  Vec3 grad{};
  for (const auto& x : xs) grad = grad + demr::log_so3(m.inverse() * x).omega;
  EXPECT_LE(demr::norm((1.0 / xs.size()) * grad), 1e-9);
  EXPECT_LE(demr::dist_geodesic(m, mu), 3 * sigma / std::sqrt(1e4) * std::sqrt(3.0));
  EXPECT_LE(demr::dist_geodesic(demr::chordal_mean_project(xs), m), 5e-3);
}

TEST(Means, DispersedSamplesRejected) {
  const std::vector<RotationMatrix> far{RotationMatrix::identity(),
                                        RotationMatrix::from_matrix(rz(2.0))};
  EXPECT_DEMR_ERROR(demr::frechet_mean(far), ErrorCode::kDispersedSamples);
}

TEST(SampleTransform, RangesPerMode) {
  demr::Rng rng(25);
  for (double f : {1.0, 0.8, 0.2}) {
    for (int i = 0; i < 1000; ++i) {
      const auto t = demr::sample_transform_uniform(demr::SampleMode::kEuler, f, rng);
      expect_rotation(t.rot);
      const auto e = demr::encode_rotation(ReprTag::kEuler3, t.rot);
      // Pitch is folded into [-pi/2, pi/2], so only bound the magnitude here.
      if (f <= 0.5) {
        for (double a : e.data) EXPECT_LE(std::abs(a), kPi * f + 1e-9);
      }
      const auto s = demr::sample_transform_uniform(demr::SampleMode::kSo3, f, rng);
      EXPECT_LE(demr::norm(demr::log_so3(s.rot).omega), std::min(kPi, std::sqrt(3.0) * kPi * f) + 1e-9);
    }
  }
}

TEST(SampleTransform, EulerAnglesReproduceDraws) {
  // Replays the three uniform draws to recover the exact angles.
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    demr::Rng a(seed), b(seed);
    const double f = 0.2;
    const auto t = demr::sample_transform_uniform(demr::SampleMode::kEuler, f, a);
    double ang[3];
    for (double& x : ang) {
      x = b.uniform(-kPi * f, kPi * f);
      EXPECT_GE(x, -kPi * f);
      EXPECT_LE(x, kPi * f);
    }
    EXPECT_LE(max_diff(t.rot.matrix(), rz(ang[0]) * ry(ang[1]) * rx(ang[2])), 1e-14);
  }
}

TEST(SampleTransform, LimitsAndDeterminism) {
  demr::Rng rng(26);
  const auto t = demr::sample_transform_uniform(demr::SampleMode::kAxis, 1e-9, rng);
  EXPECT_LE(max_diff(t.rot.matrix(), Mat3::identity()), 1e-8);
  demr::Rng a(3), b(3);
  for (int i = 0; i < 50; ++i)
    EXPECT_EQ(demr::sample_transform_uniform(demr::SampleMode::kSo3, 0.6, a),
              demr::sample_transform_uniform(demr::SampleMode::kSo3, 0.6, b));
  EXPECT_DEMR_ERROR(demr::sample_transform_uniform(demr::SampleMode::kSo3, 0.0, rng),
                    ErrorCode::kBadFraction);
  EXPECT_DEMR_ERROR(demr::sample_transform_uniform(demr::SampleMode::kSo3, 1.5, rng),
                    ErrorCode::kBadFraction);
}

TEST(RotationMatrix, Validation) {
  Mat3 bad = Mat3::identity();
  bad(0, 0) = 1.1;
  EXPECT_DEMR_ERROR(RotationMatrix::from_matrix(bad), ErrorCode::kInvalidPoint);
  const Mat3 reflect{{1, 0, 0, 0, 1, 0, 0, 0, -1}};
  EXPECT_DEMR_ERROR(RotationMatrix::from_matrix(reflect), ErrorCode::kInvalidPoint);
}

TEST(SampleRotation, UniformTraceMoments) {
  // Haar measure on SO(3): E[tr R] = 0 and E[tr(R)^2] = 1.
  demr::Rng rng(27);
  const int n = 50000;
  double s1 = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double t = demr::sample_rotation_uniform(rng).matrix().trace();
    s1 += t;
    s2 += t * t;
  }
  EXPECT_NEAR(s1 / n, 0.0, 0.03);
  EXPECT_NEAR(s2 / n, 1.0, 0.03);
}

}  // namespace
