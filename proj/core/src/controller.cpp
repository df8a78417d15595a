#include "twinlift/controller.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

namespace twinlift {

void ControlGains::validate() const {
  const auto positive = [](const Vec3& v) { return v.allFinite() && (v.array() > 0.0).all(); };
  if (!positive(k_p) || !positive(k_v) || !positive(k_r) || !positive(k_omega)) {
    throw std::invalid_argument("ControlGains: all gains must be strictly positive");
  }
  if (!(std::isfinite(thrust_limit_ratio) && thrust_limit_ratio > 0.0)) {
    throw std::invalid_argument("ControlGains: thrust_limit_ratio must be > 0");
  }
}

PositionErrors position_errors(const VehicleState& state, const ControlSetpoint& setpoint) {
  return {state.position - setpoint.position_d, state.velocity - setpoint.velocity_d};
}

ForceCommand force_vector(const PositionErrors& errors, const Vec3& accel_d,
                          const VehicleParams& params, const ControlGains& gains) {
  ForceCommand cmd;
  cmd.force = params.gravity * e3() + gains.k_v.cwiseProduct(errors.e_v) +
              gains.k_p.cwiseProduct(errors.e_p) - accel_d;
  cmd.degenerate = cmd.force.norm() < kDegenerateForce;
  return cmd;
}

double thrust_limit(const VehicleParams& params, bool payload_attached, const ControlGains& gains) {
  return gains.thrust_limit_ratio * total_mass(params, payload_attached) * params.gravity;
}

double thrust_magnitude(const Vec3& force, const VehicleParams& params, bool payload_attached,
                        const ControlGains& gains) {
  const double f = total_mass(params, payload_attached) * force.norm();
  return std::clamp(f, 0.0, thrust_limit(params, payload_attached, gains));
}

Mat3 desired_attitude(const Vec3& force, double yaw_d) {
  const double norm = force.norm();
  if (!(norm >= kDegenerateForce)) {
    throw DegenerateAttitudeError("desired_attitude: force vector too small");
  }
  const Vec3 b3 = force / norm;
  const Vec3 heading{std::cos(yaw_d), std::sin(yaw_d), 0.0};
  const Vec3 b2_raw = b3.cross(heading);
  const double b2_norm = b2_raw.norm();
  if (b2_norm < 1e-9) {
    throw DegenerateAttitudeError("desired_attitude: thrust direction parallel to heading");
  }
  const Vec3 b2 = b2_raw / b2_norm;
  const Vec3 b1 = b2.cross(b3);

  Mat3 r_d;
  r_d.col(0) = b1;
  r_d.col(1) = b2;
  r_d.col(2) = b3;
  return r_d;
}

AttitudeErrors attitude_errors(const Mat3& r, const Vec3& omega, const Mat3& r_d,
                               const Vec3& omega_d) {
  const Mat3 bracket = r_d.transpose() * r - r.transpose() * r_d;
  return {0.5 * vee(bracket), omega - r.transpose() * r_d * omega_d};
}

Vec3 attitude_torque(const AttitudeErrors& errors, const ControlGains& gains) {
  return -gains.k_r.cwiseProduct(errors.e_r) - gains.k_omega.cwiseProduct(errors.e_omega);
}

ControlStepResult control_step(const VehicleState& state, const ControlSetpoint& setpoint,
                               const VehicleParams& params, const ControlGains& gains,
                               const ControllerState& memory) {
  ControlStepResult out;
  out.position_errors = position_errors(state, setpoint);
  const ForceCommand cmd = force_vector(out.position_errors, setpoint.accel_d, params, gains);
  out.force = cmd.force;
  out.inputs.thrust = thrust_magnitude(cmd.force, params, state.payload_attached, gains);

  std::optional<Mat3> r_d;
  if (!cmd.degenerate) {
    try {
      r_d = desired_attitude(cmd.force, setpoint.yaw_d);
    } catch (const DegenerateAttitudeError&) {
      r_d.reset();
    }
  }
  if (!r_d) {
    // Hold the last good desired attitude; before any exists, hold the current one.
    r_d = memory.last_attitude_d.value_or(state.attitude);
    out.held_attitude = true;
  }
  out.attitude_d = *r_d;
  out.next.last_attitude_d = *r_d;

  out.attitude_errors = attitude_errors(state.attitude, state.body_rates, *r_d, setpoint.rates_d);
  out.inputs.torque = attitude_torque(out.attitude_errors, gains);
  out.inputs.arm_commands = setpoint.arm_commands;
  return out;
}

}  // namespace twinlift
