#include "twinlift/teleop/serve.hpp"

#include <chrono>

#include <boost/asio/ip/address.hpp>
#include <spdlog/spdlog.h>

namespace twinlift::teleop {

namespace {

bridge::Triple triple(const Vec3& v) { return {v.x(), v.y(), v.z()}; }
Vec3 vec(const bridge::Triple& t) { return {t[0], t[1], t[2]}; }

bool is_loopback(const std::string& host) {
  boost::system::error_code ec;
  const auto address = boost::asio::ip::make_address(host, ec);
  return !ec && address.is_loopback();
}

}  // namespace

EventAction event_from_command(const bridge::CommandMessage& command,
                               const ControlSetpoint& current) {
  return std::visit(
      [&](const auto& c) -> EventAction {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, bridge::NudgeCommand>) {
          SetpointChange s;
          s.position = current.position_d + vec(c.delta);
          s.yaw = wrap_angle(current.yaw_d + c.yaw_delta);
          return s;
        } else if constexpr (std::is_same_v<T, bridge::SetpointCommand>) {
          SetpointChange s;
          s.position = vec(c.position);
          s.yaw = wrap_angle(c.yaw);
          return s;
        } else if constexpr (std::is_same_v<T, bridge::ArmTargetCommand>) {
          return ArmCommand{vec(c.joints)};
        } else if constexpr (std::is_same_v<T, bridge::GraspCommand>) {
          return PayloadAttach{};
        } else {
          return PayloadRelease{};
        }
      },
      command);
}

ServeSession::ServeSession(ServeOptions options)
    : options_(std::move(options)),
      server_(broker_, clock_,
              bridge::ServerOptions{options_.scenario.bridge.host, options_.scenario.bridge.port}),
      snapshots_(options_.scenario.bridge.queue_capacity) {
  options_.scenario.bridge.validate();
  options_.scenario.sim.validate();
}

ServeSession::~ServeSession() { stop(); }

void ServeSession::start() {
  if (running_.exchange(true)) return;
  server_.start();  // port conflicts surface here, before the sim runs

  if (options_.capture_dir) {
    std::filesystem::create_directories(*options_.capture_dir);
    capture_ = std::make_unique<bridge::CaptureWriter>(*options_.capture_dir /
                                                       "robot_capture.jsonl");
  }

  robot_id_ = broker_.connect([this](const std::string& bytes) {
    // runs under the broker lock: only queue the command here
    try {
      const auto frame = bridge::decode_frame(bytes);
      if (const auto* cmd = std::get_if<bridge::CommandMessage>(&frame.msg)) {
        std::lock_guard lock(inbox_mutex_);
        inbox_.push_back(*cmd);
      }
    } catch (const bridge::FrameError&) {
    }
    return true;
  });
  broker_.dispatch(robot_id_, {bridge::Op::kSubscribe, std::string(bridge::kTeleopTopic), 0,
                               clock_.now(), std::monostate{}});
  broker_.dispatch(robot_id_, {bridge::Op::kAdvertise, std::string(bridge::kServoTopic), 0,
                               clock_.now(), std::monostate{}});
  broker_.dispatch(robot_id_, {bridge::Op::kAdvertise, std::string(bridge::kDataTopic), 0,
                               clock_.now(), std::monostate{}});

  const auto& b = options_.scenario.bridge;
  delay_ = std::make_unique<bridge::DelayChannel<bridge::BridgeFrame>>(
      bridge::DelaySettings{b.delay, b.jitter, b.delay_seed, 0}, clock_,
      [this](bridge::BridgeFrame frame, double released) {
        one_way_.add(released - frame.stamp_tx);
        broker_.dispatch(robot_id_, frame);
      });

  spdlog::info("bridge listening on {}:{} (delay {} s, jitter {} s)", b.host, server_.port(),
               b.delay, b.jitter);
  publish_thread_ = std::thread([this] { publish_loop(); });
  sim_thread_ = std::thread([this] { sim_loop(); });
}

void ServeSession::stop() {
  if (!running_.exchange(false)) return;
  if (sim_thread_.joinable()) sim_thread_.join();
  snapshots_.close();
  if (publish_thread_.joinable()) publish_thread_.join();
  // frames still in flight are delivered so the capture and the clients agree
  if (delay_) delay_->stop(true);
  server_.stop();
  if (capture_) capture_->flush();
  spdlog::info("serve stopped after {} steps", steps_.load());
}

void ServeSession::wait(const std::atomic<bool>& stop_flag) {
  while (!stop_flag.load() && !finished_.load()) {
    std::this_thread::sleep_for(std::chrono::milliseconds(20));
  }
}

void ServeSession::sim_loop() {
  SimConfig config = options_.scenario.sim;
  const double dt = config.dt;
  config.duration = options_.duration.value_or(1e9);
  config.log_decimation = 1000000;
  Simulation sim(config);

  const double publish_period = 1.0 / options_.scenario.bridge.publish_rate;
  const auto publish_every =
      std::max<std::int64_t>(1, static_cast<std::int64_t>(std::llround(publish_period / dt)));

  // sim time t is due at wall time origin + t; lag beyond one publish period
  // is counted and the origin slides forward instead of bursting to catch up
  double origin = clock_.now();
  try {
    while (running_.load() && !sim.finished()) {
      {
        std::vector<bridge::CommandMessage> commands;
        {
          std::lock_guard lock(inbox_mutex_);
          commands.swap(inbox_);
        }
        for (const auto& c : commands) {
          sim.apply(event_from_command(c, sim.setpoint()));
          ++commands_applied_;
        }
      }

      if (sim.step_index() % publish_every == 0) {
        if (options_.realtime) {
          const double due = origin + sim.time();
          const double now = clock_.now();
          if (due > now) {
            std::this_thread::sleep_until(clock_.to_steady(due));
          } else if (now - due > publish_period) {
            ++overruns_;
            origin += now - due;
          }
        }
        snapshots_.push({sim.time(), clock_.now(), sim.state()});
        ++snapshots_pushed_;
        std::lock_guard lock(state_mutex_);
        latest_state_ = sim.state();
        latest_setpoint_ = sim.setpoint();
      }

      sim.step();
      ++steps_;
      if (sim.log().records.size() > 16) sim.log().records.clear();
    }
  } catch (const std::exception& e) {
    spdlog::error("simulation stopped: {}", e.what());
    std::lock_guard lock(state_mutex_);
    failure_ = e.what();
  }
  finished_.store(true);
}

void ServeSession::publish_loop() {
  const double metrics_period = options_.scenario.bridge.metrics_period;
  double next_metrics = clock_.now() + metrics_period;
  for (;;) {
    auto snap = snapshots_.pop(std::chrono::milliseconds(50));
    if (snap) publish_snapshot(*snap);
    if (clock_.now() >= next_metrics) {
      publish_metrics();
      next_metrics += metrics_period;
    }
    if (!snap && !running_.load() && snapshots_.size() == 0) break;
  }
}

void ServeSession::publish_snapshot(const Snapshot& snap) {
  const VehicleState& s = snap.state;
  const EulerAngles e = euler_from_rotation(s.attitude).angles;
  const bridge::BridgeFrame servo{
      bridge::Op::kPublish, std::string(bridge::kServoTopic), servo_seq_++, snap.stamp,
      bridge::PoseMessage{triple(s.position), {e.phi, e.theta, e.psi}, triple(s.velocity)}};
  const bridge::BridgeFrame data{
      bridge::Op::kPublish, std::string(bridge::kDataTopic), data_seq_++, snap.stamp,
      bridge::ArmMessage{triple(s.arm_angles), s.payload_attached}};
  for (const auto* f : {&servo, &data}) {
    if (capture_) capture_->write(*f);
    delay_->push(*f);
    ++frames_published_;
  }
}

void ServeSession::publish_metrics() {
  const bridge::BridgeFrame frame{bridge::Op::kPublish, std::string(bridge::kMetricsTopic),
                                  metrics_seq_++, clock_.now(), metrics()};
  broker_.dispatch(robot_id_, frame);
}

bridge::MetricsMessage ServeSession::metrics() const {
  const auto c = broker_.counters();
  const auto& b = options_.scenario.bridge;
  bridge::MetricsMessage m;
  m.clients = c.clients > 0 ? c.clients - 1 : 0;  // the robot endpoint is not a client
  m.delivered = c.delivered;
  m.dropped = snapshots_.dropped() + c.rejected + c.dead_clients;
  m.injected_delay = b.delay;
  m.injected_jitter = b.jitter;
  m.one_way_mean = one_way_.mean();
  m.one_way_p95 = one_way_.p95();
  m.transport_mean = server_.transport().mean();
  m.transport_p95 = server_.transport().p95();
  m.clock_sync_limited = !is_loopback(b.host);
  return m;
}

std::uint16_t ServeSession::port() const { return server_.port(); }

ServeStats ServeSession::stats() const {
  return {steps_.load(),          snapshots_pushed_.load(), snapshots_.dropped(),
          frames_published_.load(), commands_applied_.load(), overruns_.load()};
}

VehicleState ServeSession::latest_state() const {
  std::lock_guard lock(state_mutex_);
  return latest_state_;
}

ControlSetpoint ServeSession::latest_setpoint() const {
  std::lock_guard lock(state_mutex_);
  return latest_setpoint_;
}

std::optional<std::string> ServeSession::failure() const {
  std::lock_guard lock(state_mutex_);
  return failure_;
}

}  // namespace twinlift::teleop
