#include "twinlift/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

namespace twinlift {

namespace {

VehicleState offset_state(const VehicleState& s, const StateDerivative& d, double h) {
  VehicleState out = s;
  out.position += h * d.velocity;
  out.velocity += h * d.acceleration;
  out.attitude += h * d.attitude_rate;
  out.body_rates += h * d.angular_acceleration;
  out.arm_angles += h * d.joint_rates;
  out.arm_rates += h * d.joint_accelerations;
  return out;
}

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

// Uniform sample from the ball of the given radius (rejection from the cube).
Vec3 sample_ball(std::mt19937_64& rng, double radius) {
  for (;;) {
    const Vec3 v{2.0 * unit_uniform(rng) - 1.0, 2.0 * unit_uniform(rng) - 1.0,
                 2.0 * unit_uniform(rng) - 1.0};
    if (v.squaredNorm() <= 1.0) return radius * v;
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument("SimConfig: " + what);
}

}  // namespace

SimulationDivergedError::SimulationDivergedError(double time, const std::string& what)
    : std::runtime_error(fmt::format("simulation diverged at t={:.6f}s: {}", time, what)),
      time_(time) {}

void SimConfig::validate() const {
  require(std::isfinite(dt) && dt > 0.0 && dt <= 0.05, "dt must be in (0, 0.05]");
  require(std::isfinite(duration) && duration >= 0.0, "duration must be >= 0");
  require(log_decimation >= 1, "log_decimation must be >= 1");
  params.validate();
  gains.validate();
  require(is_finite(initial_state), "initial state must be finite");
  require(orthonormality_defect(initial_state.attitude) < 1e-6,
          "initial attitude must be a rotation");
  require(std::isfinite(disturbance.force_amplitude) && disturbance.force_amplitude >= 0.0 &&
              std::isfinite(disturbance.moment_amplitude) && disturbance.moment_amplitude >= 0.0,
          "disturbance amplitudes must be >= 0");
  require(std::isfinite(disturbance.hold_time) && disturbance.hold_time > 0.0,
          "disturbance hold_time must be > 0");
  double previous = 0.0;
  for (const Event& e : events) {
    require(std::isfinite(e.time) && e.time >= 0.0 && e.time <= duration,
            "event times must lie within [0, duration]");
    require(e.time >= previous, "events must be sorted by time");
    previous = e.time;
  }
}

VehicleState rk4_step(const VehicleState& state, const ControlInputs& inputs,
                      const VehicleParams& params, double dt, const DynamicsContext& context,
                      AttitudeStepping stepping) {
  if (!(dt > 0.0 && dt <= 0.05)) throw std::invalid_argument("rk4_step: dt must be in (0, 0.05]");

  const auto stage = [&](const VehicleState& s) {
    StateDerivative d = derivatives(s, inputs, params, context);
    if (!d.acceleration.allFinite() || !d.angular_acceleration.allFinite() ||
        !d.attitude_rate.allFinite() || !d.joint_accelerations.allFinite()) {
      throw NonFiniteStateError("rk4_step: non-finite stage derivative");
    }
    return d;
  };

  VehicleState next;
  if (stepping == AttitudeStepping::kReproject) {
    const StateDerivative k1 = stage(state);
    const StateDerivative k2 = stage(offset_state(state, k1, 0.5 * dt));
    const StateDerivative k3 = stage(offset_state(state, k2, 0.5 * dt));
    const StateDerivative k4 = stage(offset_state(state, k3, dt));

    next = state;
    const double w = dt / 6.0;
    next.position += w * (k1.velocity + 2.0 * k2.velocity + 2.0 * k3.velocity + k4.velocity);
    next.velocity +=
        w * (k1.acceleration + 2.0 * k2.acceleration + 2.0 * k3.acceleration + k4.acceleration);
    next.attitude += w * (k1.attitude_rate + 2.0 * k2.attitude_rate + 2.0 * k3.attitude_rate +
                          k4.attitude_rate);
    next.body_rates += w * (k1.angular_acceleration + 2.0 * k2.angular_acceleration +
                            2.0 * k3.angular_acceleration + k4.angular_acceleration);
    next.arm_angles +=
        w * (k1.joint_rates + 2.0 * k2.joint_rates + 2.0 * k3.joint_rates + k4.joint_rates);
    next.arm_rates += w * (k1.joint_accelerations + 2.0 * k2.joint_accelerations +
                           2.0 * k3.joint_accelerations + k4.joint_accelerations);
    if (!next.attitude.allFinite()) throw NonFiniteStateError("rk4_step: non-finite attitude");
    next.attitude = reproject_so3(next.attitude);
  } else {
    // Vector states follow RK4; the attitude stages are moved along the group
    // with the body rate of the preceding stage.
    const auto along = [&](const VehicleState& base, const StateDerivative& d, double h,
                           const Vec3& rate) {
      VehicleState s = offset_state(base, d, h);
      s.attitude = base.attitude * exp_so3(h * rate);
      return s;
    };
    const StateDerivative k1 = stage(state);
    const VehicleState s2 = along(state, k1, 0.5 * dt, state.body_rates);
    const StateDerivative k2 = stage(s2);
    const VehicleState s3 = along(state, k2, 0.5 * dt, s2.body_rates);
    const StateDerivative k3 = stage(s3);
    const VehicleState s4 = along(state, k3, dt, s3.body_rates);
    const StateDerivative k4 = stage(s4);

    next = state;
    const double w = dt / 6.0;
    next.position += w * (k1.velocity + 2.0 * k2.velocity + 2.0 * k3.velocity + k4.velocity);
    next.velocity +=
        w * (k1.acceleration + 2.0 * k2.acceleration + 2.0 * k3.acceleration + k4.acceleration);
    next.body_rates += w * (k1.angular_acceleration + 2.0 * k2.angular_acceleration +
                            2.0 * k3.angular_acceleration + k4.angular_acceleration);
    next.arm_angles +=
        w * (k1.joint_rates + 2.0 * k2.joint_rates + 2.0 * k3.joint_rates + k4.joint_rates);
    next.arm_rates += w * (k1.joint_accelerations + 2.0 * k2.joint_accelerations +
                           2.0 * k3.joint_accelerations + k4.joint_accelerations);
    const Vec3 mean_rate =
        (state.body_rates + 2.0 * s2.body_rates + 2.0 * s3.body_rates + s4.body_rates) / 6.0;
    next.attitude = state.attitude * exp_so3(dt * mean_rate);
  }

  for (int i = 0; i < 3; ++i) next.arm_angles[i] = wrap_angle(next.arm_angles[i]);
  if (!is_finite(next)) throw NonFiniteStateError("rk4_step: non-finite state after step");
  return next;
}

Simulation::Simulation(SimConfig config)
    : config_(std::move(config)), rng_(config_.seed) {
  config_.validate();
  state_ = config_.initial_state;
  setpoint_ = config_.initial_setpoint;
  total_steps_ = static_cast<std::int64_t>(std::llround(config_.duration / config_.dt));
  hold_steps_ = std::max<std::int64_t>(
      1, static_cast<std::int64_t>(std::llround(config_.disturbance.hold_time / config_.dt)));
  log_.dt = config_.dt;
  log_.decimation = config_.log_decimation;
}

void Simulation::apply(const EventAction& action) {
  std::visit(
      [this](const auto& a) {
        using T = std::decay_t<decltype(a)>;
        if constexpr (std::is_same_v<T, SetpointChange>) {
          if (a.position) setpoint_.position_d = *a.position;
          if (a.velocity) setpoint_.velocity_d = *a.velocity;
          if (a.accel) setpoint_.accel_d = *a.accel;
          if (a.yaw) setpoint_.yaw_d = wrap_angle(*a.yaw);
          if (a.rates) setpoint_.rates_d = *a.rates;
        } else if constexpr (std::is_same_v<T, ArmCommand>) {
          setpoint_.arm_commands = a.joints;
        } else if constexpr (std::is_same_v<T, PayloadAttach>) {
          state_.payload_attached = true;
        } else if constexpr (std::is_same_v<T, PayloadRelease>) {
          state_.payload_attached = false;
        } else if constexpr (std::is_same_v<T, DisturbancePulse>) {
          active_pulses_.emplace_back(time() + a.duration, a);
        }
      },
      action);
}

void Simulation::apply_due_events() {
  const double now = time() + 1e-9 * config_.dt;
  while (next_event_ < config_.events.size() && config_.events[next_event_].time <= now) {
    apply(config_.events[next_event_].action);
    ++next_event_;
  }
  std::erase_if(active_pulses_, [&](const auto& p) { return p.first <= now; });
}

void Simulation::refresh_random_disturbance() {
  if (config_.disturbance.model != CouplingModel::kSeededRandom) return;
  if (step_index_ % hold_steps_ != 0) return;
  const double f = std::min(config_.disturbance.force_amplitude, config_.params.force_limit);
  const double m = std::min(config_.disturbance.moment_amplitude, config_.params.moment_limit);
  random_wrench_.force = sample_ball(rng_, f);
  random_wrench_.moment = sample_ball(rng_, m);
}

DynamicsContext Simulation::context_for_step() const {
  DynamicsContext ctx;
  ctx.fd_step = config_.dt;
  switch (config_.disturbance.model) {
    case CouplingModel::kQuasiStatic:
      break;
    case CouplingModel::kSeededRandom:
      ctx.coupling_override = random_wrench_;
      break;
    case CouplingModel::kNone:
      ctx.coupling_override = CouplingWrench{};
      break;
  }
  for (const auto& [end, pulse] : active_pulses_) {
    ctx.external.force += pulse.force;
    ctx.external.moment += pulse.moment;
  }
  return ctx;
}

void Simulation::step() {
  if (finished()) return;
  apply_due_events();
  refresh_random_disturbance();

  const ControlStepResult control =
      control_step(state_, setpoint_, config_.params, config_.gains, controller_);
  controller_ = control.next;

  last_.t = time();
  last_.state = state_;
  last_.inputs = control.inputs;
  last_.position_errors = control.position_errors;
  last_.attitude_errors = control.attitude_errors;
  last_.position_d = setpoint_.position_d;
  last_.mass = total_mass(config_.params, state_.payload_attached);
  if (step_index_ % config_.log_decimation == 0) log_.records.push_back(last_);

  if (step_index_ < total_steps_) {
    try {
      state_ = rk4_step(state_, control.inputs, config_.params, config_.dt, context_for_step(),
                        config_.stepping);
    } catch (const NonFiniteStateError& e) {
      throw SimulationDivergedError(time(), e.what());
    } catch (const ReprojectionError& e) {
      throw SimulationDivergedError(time(), e.what());
    }
  }
  ++step_index_;
}

SimLog run_scenario(const SimConfig& config) {
  Simulation sim(config);
  while (!sim.finished()) sim.step();
  return sim.take_log();
}

SimConfig pick_and_place_scenario() {
  SimConfig c;
  c.duration = 42.0;
  c.params.payload_mass = 0.160;
  const Vec3 start{0.0, 0.0, -1.0};
  c.initial_state.position = start;
  c.initial_setpoint.position_d = start;

  const JointVec stow = JointVec::Zero();
  const JointVec reach{0.0, -1.1, -0.8};
  const Vec3 pickup{2.0, 0.0, -0.6};
  const Vec3 dropoff{-1.0, 1.5, -0.6};

  const auto go = [](const Vec3& p) {
    SetpointChange s;
    s.position = p;
    return s;
  };
  c.events = {
      {1.0, go({2.0, 0.0, -1.0})},   // approach above the object
      {7.0, go(pickup)},             // descend
      {7.0, ArmCommand{reach}},      // reach
      {13.0, PayloadAttach{}},       // grasp
      {19.0, ArmCommand{stow}},
      {19.0, go({2.0, 0.0, -1.5})},  // climb
      {24.0, go({-1.0, 1.5, -1.5})}, // traverse
      {31.0, go(dropoff)},           // descend
      {36.0, PayloadRelease{}},      // release
      {37.0, go({-1.0, 1.5, -1.5})}, // retreat
  };
  return c;
}

void write_csv(const SimLog& log, std::ostream& out) {
  out << kSimLogCsvHeader << '\n';
  fmt::memory_buffer buf;
  for (const SimRecord& r : log.records) {
    buf.clear();
    const EulerAngles e = euler_from_rotation(r.state.attitude).angles;
    const VehicleState& s = r.state;
    fmt::format_to(std::back_inserter(buf),
                   "{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},"
                   "{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},"
                   "{:.10g},{:.10g},{:.10g},{:.10g},{:.10g}\n",
                   r.t, s.position.x(), s.position.y(), s.position.z(), s.velocity.x(),
                   s.velocity.y(), s.velocity.z(), e.phi, e.theta, e.psi, s.body_rates.x(),
                   s.body_rates.y(), s.body_rates.z(), s.arm_angles[0], s.arm_angles[1],
                   s.arm_angles[2], r.inputs.thrust, r.inputs.torque.x(), r.inputs.torque.y(),
                   r.inputs.torque.z(), r.position_errors.e_p.norm(),
                   r.attitude_errors.e_r.norm(), r.mass);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  }
}

std::string to_csv(const SimLog& log) {
  std::ostringstream out;
  write_csv(log, out);
  return out.str();
}

SimSummary summarize(const SimLog& log, double threshold) {
  SimSummary s;
  if (log.records.empty()) return s;
  for (const SimRecord& r : log.records) {
    s.peak_position_error = std::max(s.peak_position_error, r.position_errors.e_p.norm());
    s.peak_attitude_error = std::max(s.peak_attitude_error, r.attitude_errors.e_r.norm());
  }
  s.final_position_error = log.records.back().position_errors.e_p.norm();

  std::size_t settled = log.records.size();
  while (settled > 0 && log.records[settled - 1].position_errors.e_p.norm() < threshold) {
    --settled;
  }
  if (settled < log.records.size()) s.convergence_time = log.records[settled].t;
  return s;
}

}  // namespace twinlift
