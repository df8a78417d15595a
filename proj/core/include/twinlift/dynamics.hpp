#pragma once

// Continuous-time model of the aerial manipulator. World frame is NED: e3
// points down, gravity acts along +e3 and thrust along -R e3. The arm is a
// three-joint PD-servoed chain whose motion reaches the base only through a
// bounded disturbance wrench.

#include <array>
#include <optional>
#include <stdexcept>

#include "twinlift/se3.hpp"

namespace twinlift {

using JointVec = Eigen::Vector3d;

struct JointGains {
  double kp{16.0};
  double kd{8.0};
};

struct VehicleState {
  Vec3 position{Vec3::Zero()};
  Vec3 velocity{Vec3::Zero()};
  Mat3 attitude{Mat3::Identity()};
  Vec3 body_rates{Vec3::Zero()};
  JointVec arm_angles{JointVec::Zero()};
  JointVec arm_rates{JointVec::Zero()};
  bool payload_attached{false};
};

struct VehicleParams {
  double mass_base{1.5};
  Mat3 inertia{Vec3(0.03, 0.03, 0.06).asDiagonal()};
  double gravity{9.81};
  JointVec arm_link_masses{0.05, 0.05, 0.05};
  JointVec arm_link_lengths{0.10, 0.10, 0.10};
  Vec3 arm_mount_offset{0.0, 0.0, 0.05};
  double payload_mass{0.160};
  std::array<JointGains, 3> joint_pd_gains{};
  // Bounds on the coupling wrench: specific force (m/s^2) and angular
  // acceleration (rad/s^2).
  double force_limit{2.0};
  double moment_limit{5.0};

  /// Throws std::invalid_argument describing the first violated invariant.
  void validate() const;
};

struct ControlInputs {
  double thrust{0.0};
  Vec3 torque{Vec3::Zero()};
  JointVec arm_commands{JointVec::Zero()};
};

/// Disturbance the arm exerts on the base: `force` is a world-frame specific
/// force added to the translational acceleration, `moment` a body-frame
/// angular acceleration added after J^-1 tau.
struct CouplingWrench {
  Vec3 force{Vec3::Zero()};
  Vec3 moment{Vec3::Zero()};
};

struct StateDerivative {
  Vec3 velocity{Vec3::Zero()};
  Vec3 acceleration{Vec3::Zero()};
  Mat3 attitude_rate{Mat3::Zero()};
  Vec3 angular_acceleration{Vec3::Zero()};
  JointVec joint_rates{JointVec::Zero()};
  JointVec joint_accelerations{JointVec::Zero()};
};

struct DynamicsContext {
  // Replaces the quasi-static arm model when set (seeded random disturbance).
  std::optional<CouplingWrench> coupling_override;
  // Added on top of the coupling wrench (scripted disturbance pulses).
  CouplingWrench external;
  // Step used to finite-difference the arm centre of mass.
  double fd_step{0.002};
};

class NonFiniteStateError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

double arm_mass(const VehicleParams& params);

double total_mass(const VehicleParams& params, bool payload_attached);

/// Per-joint PD servo on a double integrator: kp (cmd - q) - kd qdot.
JointVec arm_joint_accel(const JointVec& q, const JointVec& qdot, const JointVec& q_cmd,
                         const std::array<JointGains, 3>& gains);

/// Body-frame position of the arm's composite centre of mass. Joint 1 turns
/// about body z, joints 2 and 3 about the y axes of the preceding links; at
/// q = 0 the chain extends along body -z from the mount point.
Vec3 arm_com_body(const JointVec& q, const VehicleParams& params);

/// Quasi-static coupling: the moment is gravity acting on the offset arm
/// centre of mass, the force is the reaction to the arm CoM acceleration
/// (second difference along the joint trajectory). Both are norm-clamped to
/// the configured limits.
CouplingWrench coupling_wrench(const VehicleState& state, const JointVec& joint_accel,
                               const VehicleParams& params, double fd_step = 0.002);

/// Scales `wrench` so that |force| <= force_limit and |moment| <= moment_limit.
CouplingWrench clamp_wrench(CouplingWrench wrench, double force_limit, double moment_limit);

StateDerivative derivatives(const VehicleState& state, const ControlInputs& inputs,
                            const VehicleParams& params, const DynamicsContext& context = {});

bool is_finite(const VehicleState& state);

}  // namespace twinlift
