#include "twinlift/controller.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>
#include <gtest/gtest.h>

namespace twinlift {
namespace {

constexpr double kPi = std::numbers::pi;

VehicleParams default_params() { return VehicleParams{}; }

Mat3 rot_z(double a) {
  Mat3 r;
  r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return r;
}

TEST(PositionErrors, DifferencesAndAntisymmetry) {
  VehicleState s;
  ControlSetpoint sp;
  s.position = {1, 2, 3};
  sp.position_d = {1, 2, 3};
  EXPECT_EQ(position_errors(s, sp).e_p, Vec3::Zero());
  EXPECT_EQ(position_errors(s, sp).e_v, Vec3::Zero());

  sp.position_d = {0, 2, 3};
  EXPECT_EQ(position_errors(s, sp).e_p, Vec3(1, 0, 0));

  s.velocity = {0.5, -1, 2};
  sp.velocity_d = {0.1, 0.2, 0.3};
  const PositionErrors fwd = position_errors(s, sp);
  VehicleState swapped_state;
  swapped_state.position = sp.position_d;
  swapped_state.velocity = sp.velocity_d;
  ControlSetpoint swapped_sp;
  swapped_sp.position_d = s.position;
  swapped_sp.velocity_d = s.velocity;
  const PositionErrors back = position_errors(swapped_state, swapped_sp);
  EXPECT_EQ(back.e_p, -fwd.e_p);
  EXPECT_EQ(back.e_v, -fwd.e_v);
}

TEST(ForceVector, HoverPointsAlongGravity) {
  const ForceCommand f = force_vector({}, Vec3::Zero(), default_params(), {});
  EXPECT_EQ(f.force, Vec3(0, 0, 9.81));
  EXPECT_FALSE(f.degenerate);
}

TEST(ForceVector, PositionGainScalesError) {
  ControlGains g;
  g.k_p = {2, 2, 2};
  const ForceCommand f = force_vector({{1, 0, 0}, {0, 0, 0}}, Vec3::Zero(), default_params(), g);
  EXPECT_EQ(f.force, Vec3(2, 0, 9.81));
}

TEST(ForceVector, FreeFallCommandIsDegenerate) {
  const ForceCommand f = force_vector({}, Vec3(0, 0, 9.81), default_params(), {});
  EXPECT_EQ(f.force, Vec3::Zero());
  EXPECT_TRUE(f.degenerate);
}

TEST(ThrustMagnitude, ScalesByTotalMass) {
  const VehicleParams p = default_params();
  EXPECT_NEAR(thrust_magnitude({0, 0, 9.81}, p, false), 1.65 * 9.81, 1e-12);
  EXPECT_NEAR(thrust_magnitude({0, 0, 9.81}, p, false), 16.1865, 1e-12);
  EXPECT_NEAR(thrust_magnitude({0, 0, 9.81}, p, true), 17.7561, 1e-12);
  EXPECT_EQ(thrust_magnitude(Vec3::Zero(), p, false), 0.0);
}

TEST(ThrustMagnitude, ClampedAtConfiguredLimit) {
  const VehicleParams p = default_params();
  const ControlGains g;
  EXPECT_DOUBLE_EQ(thrust_magnitude({0, 0, 1000}, p, false, g), 4.0 * 1.65 * 9.81);
}

TEST(DesiredAttitude, LevelHoverIsIdentity) {
  EXPECT_LT((desired_attitude({0, 0, 9.81}, 0.0) - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(DesiredAttitude, PureYawMatchesEulerMatrix) {
  const Mat3 r = desired_attitude({0, 0, 9.81}, kPi / 2);
  EXPECT_LT((r - rotation_from_euler({0, 0, kPi / 2})).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(DesiredAttitude, ConstructionProperties) {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-10, 10), yaw(-kPi, kPi);
  for (int i = 0; i < 2000; ++i) {
    const Vec3 f{u(rng), u(rng), u(rng) + 12.0};
    const Mat3 r = desired_attitude(f, yaw(rng));
    EXPECT_LT((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_NEAR(r.determinant(), 1.0, 1e-9);
    EXPECT_LT((r.col(2) - f.normalized()).norm(), 1e-9);
  }
}

TEST(DesiredAttitude, RejectsDegenerateInput) {
  EXPECT_THROW(desired_attitude(Vec3::Zero(), 0.0), DegenerateAttitudeError);
  EXPECT_THROW(desired_attitude({1, 0, 0}, 0.0), DegenerateAttitudeError);
}

TEST(AttitudeErrors, ZeroAtTarget) {
  const Mat3 r = rotation_from_euler({0.2, 0.1, -1});
  const AttitudeErrors e = attitude_errors(r, {1, 2, 3}, r, {1, 2, 3});
  EXPECT_LT(e.e_r.norm(), 1e-15);
  EXPECT_LT(e.e_omega.norm(), 1e-15);
}

TEST(AttitudeErrors, YawOffsetGivesSine) {
  const double theta = 0.3;
  const AttitudeErrors e = attitude_errors(rot_z(theta), Vec3::Zero(), Mat3::Identity(), Vec3::Zero());
  EXPECT_NEAR(e.e_r.x(), 0.0, 1e-15);
  EXPECT_NEAR(e.e_r.y(), 0.0, 1e-15);
  EXPECT_NEAR(e.e_r.z(), std::sin(theta), 1e-9);
  EXPECT_NEAR(e.e_r.z(), 0.29552, 5e-6);
}

TEST(AttitudeErrors, SwappingNegates) {
  const Mat3 a = rotation_from_euler({0.3, -0.2, 0.9});
  const Mat3 b = rotation_from_euler({-0.5, 0.4, 2.0});
  const Vec3 ab = attitude_errors(a, Vec3::Zero(), b, Vec3::Zero()).e_r;
  const Vec3 ba = attitude_errors(b, Vec3::Zero(), a, Vec3::Zero()).e_r;
  EXPECT_LT((ab + ba).norm(), 1e-15);
}

TEST(AttitudeErrors, RateErrorTransportsDesiredRate) {
  const Mat3 r = rotation_from_euler({0.1, 0.2, 0.3});
  const Mat3 r_d = rotation_from_euler({-0.1, 0.0, 0.5});
  const Vec3 w{0.4, -0.3, 0.2}, w_d{1, 2, 3};
  const AttitudeErrors e = attitude_errors(r, w, r_d, w_d);
  EXPECT_LT((e.e_omega - (w - r.transpose() * r_d * w_d)).norm(), 1e-15);
}

TEST(AttitudeErrors, BoundedByOneAndZeroOnlyAtTarget) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(-kPi, kPi);
  for (int i = 0; i < 2000; ++i) {
    const Mat3 r = rotation_from_euler({u(rng), u(rng) / 2, u(rng)});
    const Mat3 r_d = rotation_from_euler({u(rng), u(rng) / 2, u(rng)});
    const Vec3 e = attitude_errors(r, Vec3::Zero(), r_d, Vec3::Zero()).e_r;
    EXPECT_LE(e.norm(), 1.0 + 1e-12);

    // Within geodesic distance pi/2 the error vanishes only at the target.
    const double angle = log_so3(r_d.transpose() * r).norm();
    if (angle > 1e-3 && angle < kPi / 2) EXPECT_GT(e.norm(), 1e-4);
  }
}

TEST(AttitudeTorque, ProportionalDerivativeLaw) {
  ControlGains g;
  g.k_r = {2, 2, 2};
  EXPECT_EQ(attitude_torque({}, g), Vec3::Zero());
  EXPECT_EQ(attitude_torque({{0, 0, 0.5}, {0, 0, 0}}, g), Vec3(0, 0, -1));

  const AttitudeErrors e{{0.1, -0.2, 0.3}, {0, 0, 0}};
  ControlGains doubled = g;
  doubled.k_r *= 2.0;
  EXPECT_EQ(attitude_torque(e, doubled), 2.0 * attitude_torque(e, g));

  const AttitudeErrors scaled{3.5 * e.e_r, {0, 0, 0}};
  EXPECT_LT((attitude_torque(scaled, g) - 3.5 * attitude_torque(e, g)).norm(), 1e-15);

  const AttitudeErrors rate_only{{0, 0, 0}, {1, 1, 1}};
  EXPECT_EQ(attitude_torque(rate_only, g), -g.k_omega);
}

TEST(ControlStep, HoverAtSetpointIsEquilibrium) {
  const VehicleParams p = default_params();
  VehicleState s;
  s.position = {3, 4, -5};
  ControlSetpoint sp;
  sp.position_d = s.position;
  const ControlStepResult out = control_step(s, sp, p, {});
  EXPECT_NEAR(out.inputs.thrust, total_mass(p, false) * p.gravity, 1e-12);
  EXPECT_LT(out.inputs.torque.norm(), 1e-15);
  EXPECT_FALSE(out.held_attitude);
}

TEST(ControlStep, BelowSetpointIncreasesThrust) {
  const VehicleParams p = default_params();
  ControlGains g;
  g.k_p = {2, 2, 2};
  VehicleState s;
  s.position = {0, 0, 1};  // 1 m below the origin in NED
  const ControlStepResult out = control_step(s, ControlSetpoint{}, p, g);
  EXPECT_NEAR(out.inputs.thrust, total_mass(p, false) * 11.81, 1e-12);
  EXPECT_GT(out.inputs.thrust, total_mass(p, false) * p.gravity);

  s.position = {1, 0, 1};
  const ControlStepResult tilted = control_step(s, ControlSetpoint{}, p, g);
  // Desired body z leans toward +x so that -R e3 pulls the vehicle back.
  EXPECT_GT(tilted.attitude_d.col(2).x(), 0.0);
}

TEST(ControlStep, ArmCommandsPassThroughBitIdentically) {
  ControlSetpoint sp;
  sp.arm_commands = {0.1234567890123, -2.5, std::nextafter(1.0, 2.0)};
  const ControlStepResult out = control_step(VehicleState{}, sp, default_params(), {});
  EXPECT_EQ(out.inputs.arm_commands, sp.arm_commands);
}

TEST(ControlStep, DegenerateForceHoldsPreviousDesiredAttitude) {
  const VehicleParams p = default_params();
  VehicleState s;
  ControlSetpoint sp;
  sp.yaw_d = 0.7;
  const ControlStepResult first = control_step(s, sp, p, {});
  ASSERT_TRUE(first.next.last_attitude_d.has_value());

  sp.accel_d = {0, 0, p.gravity};  // commands free fall
  const ControlStepResult second = control_step(s, sp, p, {}, first.next);
  EXPECT_TRUE(second.held_attitude);
  EXPECT_EQ(second.attitude_d, first.attitude_d);
  EXPECT_EQ(second.inputs.thrust, 0.0);

  // Without memory the current attitude is held.
  s.attitude = rotation_from_euler({0.1, 0.0, 0.0});
  const ControlStepResult fresh = control_step(s, sp, p, {});
  EXPECT_TRUE(fresh.held_attitude);
  EXPECT_EQ(fresh.attitude_d, s.attitude);
}

TEST(ControlGains, ValidateRejectsNonPositive) {
  ControlGains g;
  EXPECT_NO_THROW(g.validate());
  g.k_v.y() = 0.0;
  EXPECT_THROW(g.validate(), std::invalid_argument);
}

}  // namespace
}  // namespace twinlift
