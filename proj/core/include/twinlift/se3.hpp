#pragma once

// SO(3) primitives: hat/vee, ZYX Euler conversion, projection back onto the
// rotation group. Everything here is a pure function.

#include <stdexcept>

#include <Eigen/Core>

namespace twinlift {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Roll (phi), pitch (theta), yaw (psi) in radians, ZYX convention.
struct EulerAngles {
  double phi{0.0};
  double theta{0.0};
  double psi{0.0};

  bool operator==(const EulerAngles&) const = default;
};

struct EulerDecomposition {
  EulerAngles angles;
  // Set when |R31| is within 1e-9 of one. Roll is then pinned to zero and the
  // remaining rotation about the vertical is reported as yaw.
  bool gimbal_lock{false};
};

class NotSkewSymmetricError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ReprojectionError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

inline constexpr double kSkewTolerance = 1e-9;
inline constexpr double kGimbalLockTolerance = 1e-9;

inline Vec3 e3() { return Vec3::UnitZ(); }

/// Skew-symmetric matrix with hat(v) * w == v.cross(w).
Mat3 hat(const Vec3& v);

/// Inverse of hat. Reads (M32, M13, M21); throws NotSkewSymmetricError when
/// any entry of M + M^T exceeds `tolerance` in magnitude.
Vec3 vee(const Mat3& m, double tolerance = kSkewTolerance);

/// R = Rz(psi) * Ry(theta) * Rx(phi), body to world.
Mat3 rotation_from_euler(const EulerAngles& e);

EulerDecomposition euler_from_rotation(const Mat3& r);

/// Orthonormal polar factor of `m` (nearest rotation in Frobenius norm),
/// computed with the iteration M <- (M + M^-T) / 2. Throws ReprojectionError
/// when `m` is singular or has a non-positive determinant.
Mat3 reproject_so3(const Mat3& m);

/// Rodrigues exponential of hat(omega).
Mat3 exp_so3(const Vec3& omega);

/// Rotation vector of `r`, angle in [0, pi].
Vec3 log_so3(const Mat3& r);

/// max |R^T R - I| entry plus |det R - 1|.
double orthonormality_defect(const Mat3& r);

/// Wraps to (-pi, pi].
double wrap_angle(double angle);

}  // namespace twinlift
