#pragma once

// Fixed-step closed-loop simulation: controller and physics run in lockstep
// at `dt`, scripted events are applied atomically between steps.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "twinlift/controller.hpp"

namespace twinlift {

struct SetpointChange {
  std::optional<Vec3> position;
  std::optional<Vec3> velocity;
  std::optional<Vec3> accel;
  std::optional<double> yaw;
  std::optional<Vec3> rates;
};

struct ArmCommand {
  JointVec joints{JointVec::Zero()};
};

struct PayloadAttach {};
struct PayloadRelease {};

/// Additive wrench for `duration` seconds (same units as CouplingWrench).
struct DisturbancePulse {
  Vec3 force{Vec3::Zero()};
  Vec3 moment{Vec3::Zero()};
  double duration{0.0};
};

using EventAction =
    std::variant<SetpointChange, ArmCommand, PayloadAttach, PayloadRelease, DisturbancePulse>;

struct Event {
  double time{0.0};
  EventAction action;
};

enum class CouplingModel {
  kQuasiStatic,   // gravity-offset arm moment plus CoM reaction force
  kSeededRandom,  // bounded piecewise-constant random wrench
  kNone,
};

struct DisturbanceSettings {
  CouplingModel model{CouplingModel::kQuasiStatic};
  // Amplitudes of the random wrench; both are further capped by the
  // VehicleParams force/moment limits.
  double force_amplitude{0.5};
  double moment_amplitude{2.0};
  // Each random sample is held for this long.
  double hold_time{0.1};
};

enum class AttitudeStepping {
  kReproject,       // RK4 on the raw matrix, polar reprojection afterwards
  kExponentialMap,  // R <- R exp(h * weighted stage rate)
};

struct SimConfig {
  double dt{0.002};
  double duration{10.0};
  std::uint64_t seed{0};
  VehicleParams params;
  ControlGains gains;
  VehicleState initial_state;
  ControlSetpoint initial_setpoint;
  std::vector<Event> events;
  DisturbanceSettings disturbance;
  AttitudeStepping stepping{AttitudeStepping::kReproject};
  int log_decimation{10};

  /// Throws std::invalid_argument on the first violated invariant.
  void validate() const;
};

struct SimRecord {
  double t{0.0};
  VehicleState state;
  ControlInputs inputs;
  PositionErrors position_errors;
  AttitudeErrors attitude_errors;
  Vec3 position_d{Vec3::Zero()};
  double mass{0.0};
};

struct SimLog {
  double dt{0.0};
  int decimation{1};
  std::vector<SimRecord> records;
};

class SimulationDivergedError : public std::runtime_error {
 public:
  SimulationDivergedError(double time, const std::string& what);
  double time() const noexcept { return time_; }

 private:
  double time_;
};

/// Classical RK4 over the full state. The attitude is brought back onto
/// SO(3) and arm angles are wrapped to [-pi, pi] after the step. Throws
/// std::invalid_argument for dt outside (0, 0.05] and NonFiniteStateError
/// when a stage goes non-finite.
VehicleState rk4_step(const VehicleState& state, const ControlInputs& inputs,
                      const VehicleParams& params, double dt, const DynamicsContext& context = {},
                      AttitudeStepping stepping = AttitudeStepping::kReproject);

/// Steppable closed loop, used directly by the real-time server and through
/// run_scenario for headless runs.
class Simulation {
 public:
  explicit Simulation(SimConfig config);

  /// Applies due events, runs the controller, records (every
  /// log_decimation steps) and integrates one dt.
  void step();

  /// Applies an action immediately, between steps.
  void apply(const EventAction& action);

  bool finished() const { return step_index_ > total_steps_; }
  std::int64_t step_index() const { return step_index_; }
  double time() const { return static_cast<double>(step_index_) * config_.dt; }
  const VehicleState& state() const { return state_; }
  const ControlSetpoint& setpoint() const { return setpoint_; }
  const SimConfig& config() const { return config_; }
  const SimRecord& last_record() const { return last_; }
  SimLog& log() { return log_; }
  SimLog take_log() { return std::move(log_); }

 private:
  void apply_due_events();
  void refresh_random_disturbance();
  DynamicsContext context_for_step() const;

  SimConfig config_;
  VehicleState state_;
  ControlSetpoint setpoint_;
  ControllerState controller_;
  std::int64_t step_index_{0};
  std::int64_t total_steps_{0};
  std::size_t next_event_{0};
  std::vector<std::pair<double, DisturbancePulse>> active_pulses_;  // (end time, pulse)
  std::mt19937_64 rng_;
  CouplingWrench random_wrench_;
  std::int64_t hold_steps_{1};
  SimRecord last_;
  SimLog log_;
};

/// Runs config.duration seconds headless. Throws SimulationDivergedError
/// carrying the simulation time of the failing step.
SimLog run_scenario(const SimConfig& config);

/// Canned grasp-transport-release tape with a 0.160 kg payload.
SimConfig pick_and_place_scenario();

inline constexpr const char* kSimLogCsvHeader =
    "t,x,y,z,vx,vy,vz,phi,theta,psi,p,q,r,q1,q2,q3,f,taux,tauy,tauz,ep_norm,eR_norm,mass";

void write_csv(const SimLog& log, std::ostream& out);
std::string to_csv(const SimLog& log);

struct SimSummary {
  double final_position_error{0.0};
  double peak_position_error{0.0};
  double peak_attitude_error{0.0};
  // First time after which |e_p| stays below the threshold; empty if never.
  std::optional<double> convergence_time;
};

SimSummary summarize(const SimLog& log, double threshold = 0.05);

}  // namespace twinlift
