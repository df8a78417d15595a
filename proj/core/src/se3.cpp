#include "twinlift/se3.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

namespace twinlift {

Mat3 hat(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Vec3 vee(const Mat3& m, double tolerance) {
  const Mat3 symmetric = m + m.transpose();
  if (!m.allFinite() || symmetric.cwiseAbs().maxCoeff() > tolerance) {
    throw NotSkewSymmetricError("vee: matrix is not skew-symmetric");
  }
  return {m(2, 1), m(0, 2), m(1, 0)};
}

Mat3 rotation_from_euler(const EulerAngles& e) {
  const double cphi = std::cos(e.phi), sphi = std::sin(e.phi);
  const double cth = std::cos(e.theta), sth = std::sin(e.theta);
  const double cpsi = std::cos(e.psi), spsi = std::sin(e.psi);

  Mat3 r;
  r << cth * cpsi, sphi * sth * cpsi - cphi * spsi, cphi * sth * cpsi + sphi * spsi,
       cth * spsi, sphi * sth * spsi + cphi * cpsi, cphi * sth * spsi - sphi * cpsi,
       -sth,       sphi * cth,                      cphi * cth;
  return r;
}

EulerDecomposition euler_from_rotation(const Mat3& r) {
  EulerDecomposition out;
  const double r31 = std::clamp(r(2, 0), -1.0, 1.0);
  out.angles.theta = -std::asin(r31);

  if (std::abs(r31) > 1.0 - kGimbalLockTolerance) {
    // With phi = 0 both (R12, R22) reduce to (-sin psi, cos psi) for either sign of theta.
    out.gimbal_lock = true;
    out.angles.phi = 0.0;
    out.angles.psi = std::atan2(-r(0, 1), r(1, 1));
    return out;
  }
  out.angles.phi = std::atan2(r(2, 1), r(2, 2));
  out.angles.psi = std::atan2(r(1, 0), r(0, 0));
  return out;
}

Mat3 reproject_so3(const Mat3& m) {
  if (!m.allFinite()) throw ReprojectionError("reproject_so3: non-finite input");
  const double det = m.determinant();
  if (!(det > 1e-12)) {
    throw ReprojectionError("reproject_so3: determinant is not positive");
  }

  Mat3 current = m;
  for (int iter = 0; iter < 64; ++iter) {
    const Mat3 next = 0.5 * (current + current.inverse().transpose());
    const double change = (next - current).cwiseAbs().maxCoeff();
    current = next;
    if (change < 1e-15) break;
  }
  if (!(current.determinant() > 0.0)) {
    throw ReprojectionError("reproject_so3: converged to an improper rotation");
  }
  return current;
}

Mat3 exp_so3(const Vec3& omega) {
  const double angle = omega.norm();
  const Mat3 k = hat(omega);
  if (angle < 1e-8) {
    // second-order Taylor expansion; the truncation is below 1e-24
    return Mat3::Identity() + k + 0.5 * k * k;
  }
  const double a = std::sin(angle) / angle;
  const double b = (1.0 - std::cos(angle)) / (angle * angle);
  return Mat3::Identity() + a * k + b * k * k;
}

Vec3 log_so3(const Mat3& r) {
  const Vec3 skew{r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1)};
  const double cos_angle = std::clamp(0.5 * (r.trace() - 1.0), -1.0, 1.0);
  const double angle = std::atan2(0.5 * skew.norm(), cos_angle);

  if (angle < 1e-8) return 0.5 * skew;

  if (std::numbers::pi - angle < 1e-3) {
    // Near pi the skew part vanishes; use (R + R^T)/2 - cos(a) I = (1 - cos a) n n^T.
    const Mat3 outer = 0.5 * (r + r.transpose()) - cos_angle * Mat3::Identity();
    int col = 0;
    outer.diagonal().maxCoeff(&col);
    Vec3 axis = outer.col(col) / std::sqrt(std::max(outer(col, col) * (1.0 - cos_angle), 1e-300));
    axis.normalize();
    if (axis.dot(skew) < 0.0) axis = -axis;
    return angle * axis;
  }
  return angle / (2.0 * std::sin(angle)) * skew;
}

double orthonormality_defect(const Mat3& r) {
  const double ortho = (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho + std::abs(r.determinant() - 1.0);
}

double wrap_angle(double angle) {
  constexpr double kPi = std::numbers::pi;
  if (angle > -kPi && angle <= kPi) return angle;
  double wrapped = std::fmod(angle + kPi, 2.0 * kPi);
  if (wrapped <= 0.0) wrapped += 2.0 * kPi;
  return wrapped - kPi;
}

}  // namespace twinlift
