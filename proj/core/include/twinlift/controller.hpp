#pragma once

// Geometric tracking controller: thrust from the norm of the commanded force
// vector, attitude torque from the SO(3) error between R and R_d.

#include <optional>
#include <stdexcept>

#include "twinlift/dynamics.hpp"

namespace twinlift {

struct ControlSetpoint {
  Vec3 position_d{Vec3::Zero()};
  Vec3 velocity_d{Vec3::Zero()};
  Vec3 accel_d{Vec3::Zero()};
  double yaw_d{0.0};
  Vec3 rates_d{Vec3::Zero()};
  JointVec arm_commands{JointVec::Zero()};
};

struct ControlGains {
  Vec3 k_p{2.0, 2.0, 4.0};
  Vec3 k_v{2.5, 2.5, 4.0};
  // Attitude gain; a scalar configuration is broadcast to all three axes.
  Vec3 k_r{6.0, 6.0, 6.0};
  Vec3 k_omega{0.6, 0.6, 0.8};
  // thrust_max = thrust_limit_ratio * m_total * g
  double thrust_limit_ratio{4.0};

  void validate() const;
};

struct PositionErrors {
  Vec3 e_p{Vec3::Zero()};
  Vec3 e_v{Vec3::Zero()};
};

struct AttitudeErrors {
  Vec3 e_r{Vec3::Zero()};
  Vec3 e_omega{Vec3::Zero()};
};

struct ForceCommand {
  Vec3 force{Vec3::Zero()};
  // |force| < kDegenerateForce: the setpoint asks for free fall and the
  // thrust direction is undefined.
  bool degenerate{false};
};

inline constexpr double kDegenerateForce = 1e-6;

class DegenerateAttitudeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Memory carried between control steps. Only used when the force vector
/// degenerates and the previous desired attitude has to be held.
struct ControllerState {
  std::optional<Mat3> last_attitude_d;
};

struct ControlStepResult {
  ControlInputs inputs;
  PositionErrors position_errors;
  AttitudeErrors attitude_errors;
  Mat3 attitude_d{Mat3::Identity()};
  Vec3 force{Vec3::Zero()};
  bool held_attitude{false};
  ControllerState next;
};

PositionErrors position_errors(const VehicleState& state, const ControlSetpoint& setpoint);

/// F = g e3 + K_v e_v + K_p e_p - accel_d (elementwise gains).
ForceCommand force_vector(const PositionErrors& errors, const Vec3& accel_d,
                          const VehicleParams& params, const ControlGains& gains);

double thrust_limit(const VehicleParams& params, bool payload_attached, const ControlGains& gains);

/// f = m_total |F|, clamped to [0, thrust_limit].
double thrust_magnitude(const Vec3& force, const VehicleParams& params, bool payload_attached,
                        const ControlGains& gains = {});

/// Body z follows F, body x is the projection of the yaw heading. Throws
/// DegenerateAttitudeError if |F| is too small or F is parallel to the
/// heading.
Mat3 desired_attitude(const Vec3& force, double yaw_d);

AttitudeErrors attitude_errors(const Mat3& r, const Vec3& omega, const Mat3& r_d,
                               const Vec3& omega_d);

/// tau = -k_R e_R - K_Omega e_Omega
Vec3 attitude_torque(const AttitudeErrors& errors, const ControlGains& gains);

ControlStepResult control_step(const VehicleState& state, const ControlSetpoint& setpoint,
                               const VehicleParams& params, const ControlGains& gains,
                               const ControllerState& memory = {});

}  // namespace twinlift
