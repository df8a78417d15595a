#include "twinlift/dynamics.hpp"

#include <cmath>
#include <string>

#include <Eigen/Dense>

namespace twinlift {

namespace {

Mat3 rot_z(double a) {
  Mat3 r;
  r << std::cos(a), -std::sin(a), 0.0,
       std::sin(a), std::cos(a), 0.0,
       0.0, 0.0, 1.0;
  return r;
}

Mat3 rot_y(double a) {
  Mat3 r;
  r << std::cos(a), 0.0, std::sin(a),
       0.0, 1.0, 0.0,
       -std::sin(a), 0.0, std::cos(a);
  return r;
}

Vec3 clamp_norm(const Vec3& v, double limit) {
  const double n = v.norm();
  if (n <= limit || n == 0.0) return v;
  return v * (limit / n);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("VehicleParams: " + what);
}

}  // namespace

void VehicleParams::validate() const {
  require(std::isfinite(mass_base) && mass_base > 0.0, "mass_base must be > 0");
  require(inertia.allFinite(), "inertia must be finite");
  for (int i = 0; i < 3; ++i) {
    require(inertia(i, i) > 0.0, "inertia diagonal entries must be > 0");
    for (int j = 0; j < 3; ++j) {
      if (i != j) require(inertia(i, j) == 0.0, "inertia must be diagonal");
    }
  }
  require(std::isfinite(gravity) && gravity > 0.0, "gravity must be > 0");
  require(std::isfinite(payload_mass) && payload_mass >= 0.0, "payload_mass must be >= 0");
  require(arm_link_masses.allFinite() && (arm_link_masses.array() >= 0.0).all(),
          "arm_link_masses must be >= 0");
  require(arm_link_lengths.allFinite() && (arm_link_lengths.array() >= 0.0).all(),
          "arm_link_lengths must be >= 0");
  require(arm_mount_offset.allFinite(), "arm_mount_offset must be finite");
  for (const auto& g : joint_pd_gains) {
    require(std::isfinite(g.kp) && std::isfinite(g.kd) && g.kp >= 0.0 && g.kd >= 0.0,
            "joint gains must be >= 0");
  }
  require(std::isfinite(force_limit) && force_limit >= 0.0, "force_limit must be >= 0");
  require(std::isfinite(moment_limit) && moment_limit >= 0.0, "moment_limit must be >= 0");
}

double arm_mass(const VehicleParams& params) { return params.arm_link_masses.sum(); }

double total_mass(const VehicleParams& params, bool payload_attached) {
  return params.mass_base + arm_mass(params) + (payload_attached ? params.payload_mass : 0.0);
}

JointVec arm_joint_accel(const JointVec& q, const JointVec& qdot, const JointVec& q_cmd,
                         const std::array<JointGains, 3>& gains) {
  JointVec out;
  for (int i = 0; i < 3; ++i) {
    out[i] = gains[i].kp * (q_cmd[i] - q[i]) - gains[i].kd * qdot[i];
  }
  return out;
}

Vec3 arm_com_body(const JointVec& q, const VehicleParams& params) {
  const double m_arm = arm_mass(params);
  if (m_arm <= 0.0) return params.arm_mount_offset;

  const Vec3 stowed{0.0, 0.0, -1.0};
  const Mat3 frame1 = rot_z(q[0]);
  const Mat3 frame2 = frame1 * rot_y(q[1]);
  const Mat3 frame3 = frame2 * rot_y(q[2]);
  const std::array<Vec3, 3> dirs{frame1 * stowed, frame2 * stowed, frame3 * stowed};

  Vec3 joint = Vec3::Zero();
  Vec3 weighted = Vec3::Zero();
  for (int i = 0; i < 3; ++i) {
    const double len = params.arm_link_lengths[i];
    weighted += params.arm_link_masses[i] * (joint + 0.5 * len * dirs[i]);
    joint += len * dirs[i];
  }
  return params.arm_mount_offset + weighted / m_arm;
}

CouplingWrench clamp_wrench(CouplingWrench wrench, double force_limit, double moment_limit) {
  wrench.force = clamp_norm(wrench.force, force_limit);
  wrench.moment = clamp_norm(wrench.moment, moment_limit);
  return wrench;
}

CouplingWrench coupling_wrench(const VehicleState& state, const JointVec& joint_accel,
                               const VehicleParams& params, double fd_step) {
  const double m_arm = arm_mass(params);
  if (m_arm <= 0.0) return {};

  const JointVec& q = state.arm_angles;
  const Vec3 r_com = arm_com_body(q, params);

  CouplingWrench w;
  const Vec3 arm_weight_body = m_arm * state.attitude.transpose() * (params.gravity * e3());
  w.moment = params.inertia.inverse() * r_com.cross(arm_weight_body);

  // Second difference of r_com along q(t +- h) = q +- qdot h + qddot h^2 / 2.
  const double h = fd_step;
  const JointVec drift = 0.5 * h * h * joint_accel;
  const JointVec ahead = q + h * state.arm_rates + drift;
  const JointVec behind = q - h * state.arm_rates + drift;
  const Vec3 com_accel =
      (arm_com_body(ahead, params) - 2.0 * r_com + arm_com_body(behind, params)) / (h * h);
  const double m_total = total_mass(params, state.payload_attached);
  w.force = -(m_arm / m_total) * (state.attitude * com_accel);

  return clamp_wrench(w, params.force_limit, params.moment_limit);
}

bool is_finite(const VehicleState& s) {
  return s.position.allFinite() && s.velocity.allFinite() && s.attitude.allFinite() &&
         s.body_rates.allFinite() && s.arm_angles.allFinite() && s.arm_rates.allFinite();
}

StateDerivative derivatives(const VehicleState& state, const ControlInputs& inputs,
                            const VehicleParams& params, const DynamicsContext& context) {
  if (!is_finite(state) || !std::isfinite(inputs.thrust) || !inputs.torque.allFinite() ||
      !inputs.arm_commands.allFinite()) {
    throw NonFiniteStateError("derivatives: non-finite state or input");
  }
  if (inputs.thrust < 0.0) throw std::invalid_argument("derivatives: thrust must be >= 0");

  StateDerivative d;
  d.joint_rates = state.arm_rates;
  d.joint_accelerations = arm_joint_accel(state.arm_angles, state.arm_rates,
                                          inputs.arm_commands, params.joint_pd_gains);

  CouplingWrench coupling = context.coupling_override
                                ? *context.coupling_override
                                : coupling_wrench(state, d.joint_accelerations, params,
                                                  context.fd_step);
  coupling.force += context.external.force;
  coupling.moment += context.external.moment;

  const double m_total = total_mass(params, state.payload_attached);
  const Vec3 thrust_axis = state.attitude * e3();
  d.velocity = state.velocity;
  d.acceleration = params.gravity * e3() - (inputs.thrust / m_total) * thrust_axis + coupling.force;

  d.attitude_rate = state.attitude * hat(state.body_rates);

  const Mat3& j = params.inertia;
  const Vec3 j_inv_diag = j.diagonal().cwiseInverse();
  const Vec3& omega = state.body_rates;
  d.angular_acceleration = j_inv_diag.cwiseProduct(-omega.cross(j * omega) + inputs.torque) +
                           coupling.moment;
  return d;
}

}  // namespace twinlift
