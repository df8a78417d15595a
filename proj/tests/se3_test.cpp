#include "twinlift/se3.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

namespace twinlift {
namespace {

constexpr double kPi = std::numbers::pi;

// Elementary rotations written out independently of the library.
Mat3 Rx(double a) {
  Mat3 r;
  r << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return r;
}
Mat3 Ry(double a) {
  Mat3 r;
  r << std::cos(a), 0, std::sin(a), 0, 1, 0, -std::sin(a), 0, std::cos(a);
  return r;
}
Mat3 Rz(double a) {
  Mat3 r;
  r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return r;
}

// Polar factor via SVD: U V^T.
Mat3 svd_polar(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().transpose();
}

TEST(Hat, ZeroVectorGivesZeroMatrix) { EXPECT_TRUE(hat(Vec3::Zero()).isZero(0.0)); }

TEST(Hat, MatchesDisplayedDefinition) {
  Mat3 expected;
  expected << 0, -3, 2, 3, 0, -1, -2, 1, 0;
  EXPECT_EQ(hat(Vec3(1, 2, 3)), expected);
}

TEST(Hat, ActsAsCrossProduct) {
  EXPECT_EQ(hat(Vec3(1, 0, 0)) * Vec3(0, 1, 0), Vec3(0, 0, 1));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 v{u(rng), u(rng), u(rng)};
    const Vec3 w{u(rng), u(rng), u(rng)};
    EXPECT_LT((hat(v) * w - v.cross(w)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Vee, InvertsHatExactly) {
  EXPECT_EQ(vee(hat(Vec3(1, 2, 3))), Vec3(1, 2, 3));
  EXPECT_EQ(vee(Mat3::Zero()), Vec3::Zero());

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  for (int i = 0; i < 1000; ++i) {
    const Vec3 v{u(rng), u(rng), u(rng)};
    EXPECT_EQ(vee(hat(v)), v);
  }
}

TEST(Vee, ReadsOffEntries) {
  Mat3 m;
  m << 0, -1, 0, 1, 0, 0, 0, 0, 0;
  EXPECT_EQ(vee(m), Vec3(0, 0, 1));
}

TEST(Vee, RejectsNonSkewInput) {
  Mat3 m = hat(Vec3(1, 2, 3));
  m(0, 1) += 1e-6;
  EXPECT_THROW(vee(m), NotSkewSymmetricError);
  EXPECT_THROW(vee(Mat3::Identity()), NotSkewSymmetricError);
  m = hat(Vec3(1, 2, 3));
  m(0, 1) += 1e-10;  // inside tolerance
  EXPECT_NO_THROW(vee(m));
}

TEST(RotationFromEuler, ZeroIsIdentity) {
  EXPECT_TRUE(rotation_from_euler({0, 0, 0}).isApprox(Mat3::Identity(), 0.0));
}

TEST(RotationFromEuler, PureYawQuarterTurn) {
  Mat3 expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  EXPECT_LT((rotation_from_euler({0, 0, kPi / 2}) - expected).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(RotationFromEuler, MatchesFactoredElementaryProduct) {
  const EulerAngles e{kPi / 6, -kPi / 4, kPi / 3};
  const Mat3 oracle = Rz(e.psi) * Ry(e.theta) * Rx(e.phi);
  EXPECT_LT((rotation_from_euler(e) - oracle).cwiseAbs().maxCoeff(), 1e-15);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> roll(-kPi, kPi), pitch(-kPi / 2, kPi / 2);
  for (int i = 0; i < 500; ++i) {
    const EulerAngles a{roll(rng), pitch(rng), roll(rng)};
    EXPECT_LT((rotation_from_euler(a) - Rz(a.psi) * Ry(a.theta) * Rx(a.phi)).cwiseAbs().maxCoeff(),
              1e-14);
  }
}

TEST(RotationFromEuler, IsOrthonormalWithUnitDeterminant) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> roll(-kPi, kPi), pitch(-kPi / 2, kPi / 2);
  for (int i = 0; i < 1000; ++i) {
    const Mat3 r = rotation_from_euler({roll(rng), pitch(rng), roll(rng)});
    EXPECT_LT((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
  }
}

TEST(EulerFromRotation, IdentityAndRoundTrip) {
  const auto id = euler_from_rotation(Mat3::Identity());
  EXPECT_EQ(id.angles, (EulerAngles{0, 0, 0}));
  EXPECT_FALSE(id.gimbal_lock);

  const auto rt = euler_from_rotation(rotation_from_euler({0.1, 0.2, 0.3}));
  EXPECT_NEAR(rt.angles.phi, 0.1, 1e-9);
  EXPECT_NEAR(rt.angles.theta, 0.2, 1e-9);
  EXPECT_NEAR(rt.angles.psi, 0.3, 1e-9);
}

TEST(EulerFromRotation, RoundTripAwayFromGimbalLock) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> roll(-kPi + 1e-9, kPi);
  std::uniform_real_distribution<double> pitch(-kPi / 2 + 0.01, kPi / 2 - 0.01);
  for (int i = 0; i < 2000; ++i) {
    const EulerAngles e{roll(rng), pitch(rng), roll(rng)};
    const Mat3 r = rotation_from_euler(e);
    const auto back = euler_from_rotation(r);
    EXPECT_FALSE(back.gimbal_lock);
    EXPECT_NEAR(back.angles.phi, e.phi, 1e-9);
    EXPECT_NEAR(back.angles.theta, e.theta, 1e-9);
    EXPECT_NEAR(back.angles.psi, e.psi, 1e-9);
    EXPECT_LT((rotation_from_euler(back.angles) - r).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(EulerFromRotation, GimbalLockPinsRoll) {
  // theta = +pi/2 gives R31 = -1.
  const Mat3 r = rotation_from_euler({0.4, kPi / 2, 0.3});
  ASSERT_NEAR(r(2, 0), -1.0, 1e-15);
  const auto d = euler_from_rotation(r);
  EXPECT_TRUE(d.gimbal_lock);
  EXPECT_DOUBLE_EQ(d.angles.theta, kPi / 2);
  EXPECT_EQ(d.angles.phi, 0.0);
  // The reconstructed matrix is still the same rotation.
  EXPECT_LT((rotation_from_euler(d.angles) - r).cwiseAbs().maxCoeff(), 1e-9);

  const Mat3 down = rotation_from_euler({-0.2, -kPi / 2, 1.0});
  const auto d2 = euler_from_rotation(down);
  EXPECT_TRUE(d2.gimbal_lock);
  EXPECT_DOUBLE_EQ(d2.angles.theta, -kPi / 2);
  EXPECT_LT((rotation_from_euler(d2.angles) - down).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ReprojectSo3, ExactRotationIsFixedPoint) {
  const Mat3 r = rotation_from_euler({0.3, -0.7, 2.1});
  EXPECT_LT((reproject_so3(r) - r).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ReprojectSo3, ScaledIdentityMapsToIdentity) {
  EXPECT_LT((reproject_so3(1.001 * Mat3::Identity()) - Mat3::Identity()).cwiseAbs().maxCoeff(),
            1e-15);
}

TEST(ReprojectSo3, MatchesSvdPolarFactorAndDoesNotMoveAway) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Mat3 r = rotation_from_euler({3 * u(rng), 1.5 * u(rng), 3 * u(rng)});
    Mat3 noise;
    for (int k = 0; k < 9; ++k) noise.data()[k] = 1e-4 * u(rng);
    const Mat3 perturbed = r + noise;
    const Mat3 out = reproject_so3(perturbed);

    EXPECT_LT((out - svd_polar(perturbed)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(orthonormality_defect(out), 1e-12);
    EXPECT_LE((out - r).norm(), (perturbed - r).norm() + 1e-6);
  }
}

TEST(ReprojectSo3, IsIdempotent) {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-0.1, 0.1);
  for (int i = 0; i < 200; ++i) {
    Mat3 m = rotation_from_euler({10 * u(rng), 10 * u(rng), 10 * u(rng)});
    for (int k = 0; k < 9; ++k) m.data()[k] += u(rng);
    const Mat3 once = reproject_so3(m);
    EXPECT_LT((reproject_so3(once) - once).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ReprojectSo3, RejectsReflections) {
  Mat3 reflection = Mat3::Identity();
  reflection(2, 2) = -1.0;
  EXPECT_THROW(reproject_so3(reflection), ReprojectionError);
  EXPECT_THROW(reproject_so3(Mat3::Zero()), ReprojectionError);
}

TEST(ExpLog, RoundTrip) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    Vec3 w{u(rng), u(rng), u(rng)};
    w *= 3.0 * std::abs(u(rng)) / std::max(w.norm(), 1e-12);  // |w| < 3 < pi
    const Mat3 r = exp_so3(w);
    EXPECT_LT(orthonormality_defect(r), 1e-12);
    EXPECT_LT((log_so3(r) - w).norm(), 1e-9);
  }
  EXPECT_LT((exp_so3(Vec3(0, 0, kPi / 2)) - Rz(kPi / 2)).cwiseAbs().maxCoeff(), 1e-15);
  // Near a half turn the axis is recovered from the symmetric part.
  const Vec3 half = (kPi - 1e-6) * Vec3(1, 2, 2).normalized();
  EXPECT_LT((exp_so3(log_so3(exp_so3(half))) - exp_so3(half)).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(WrapAngle, HalfOpenInterval) {
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
  EXPECT_NEAR(wrap_angle(3 * kPi / 2), -kPi / 2, 1e-15);
  EXPECT_NEAR(wrap_angle(-5 * kPi / 2), -kPi / 2, 1e-14);
  EXPECT_EQ(wrap_angle(0.25), 0.25);
}

}  // namespace
}  // namespace twinlift
