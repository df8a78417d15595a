#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>

#include "twinlift/bridge/broker.hpp"
#include "twinlift/bridge/capture.hpp"
#include "twinlift/bridge/clock.hpp"
#include "twinlift/bridge/delay_channel.hpp"
#include "twinlift/bridge/ws_server.hpp"
#include "twinlift/teleop/scenario.hpp"

namespace twinlift::teleop {

/// Bounded FIFO that discards its oldest entry when full.
template <typename T>
class DropOldestQueue {
 public:
  explicit DropOldestQueue(std::size_t capacity) : capacity_(capacity) {}

  void push(T item) {
    {
      std::lock_guard lock(mutex_);
      items_.push_back(std::move(item));
      if (items_.size() > capacity_) {
        items_.pop_front();
        ++dropped_;
      }
    }
    cv_.notify_one();
  }

  /// Waits up to `timeout`; empty result on timeout or close.
  template <typename Duration>
  std::optional<T> pop(Duration timeout) {
    std::unique_lock lock(mutex_);
    cv_.wait_for(lock, timeout, [this] { return !items_.empty() || closed_; });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    return item;
  }

  void close() {
    {
      std::lock_guard lock(mutex_);
      closed_ = true;
    }
    cv_.notify_all();
  }

  std::uint64_t dropped() const {
    std::lock_guard lock(mutex_);
    return dropped_;
  }
  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return items_.size();
  }

 private:
  std::size_t capacity_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<T> items_;
  std::uint64_t dropped_{0};
  bool closed_{false};
};

/// Operator command to simulator event, relative to the current setpoint.
EventAction event_from_command(const bridge::CommandMessage& command,
                               const ControlSetpoint& current);

struct ServeOptions {
  Scenario scenario;
  bool realtime{true};
  /// Stop after this much simulated time; runs until stop() otherwise.
  std::optional<double> duration;
  /// Writes robot_capture.jsonl here when set.
  std::optional<std::filesystem::path> capture_dir;
};

struct ServeStats {
  std::uint64_t steps{0};
  std::uint64_t snapshots{0};
  std::uint64_t snapshot_drops{0};
  std::uint64_t frames_published{0};
  std::uint64_t commands_applied{0};
  std::uint64_t overruns{0};  // real-time deadlines missed by more than one publish period
};

/// Simulator, bridge server and robot-side publisher in one process. The sim
/// thread hands state snapshots to the publisher thread, which encodes them,
/// records the robot capture and pushes them through the delay channel into
/// the broker.
class ServeSession {
 public:
  explicit ServeSession(ServeOptions options);
  ~ServeSession();
  ServeSession(const ServeSession&) = delete;
  ServeSession& operator=(const ServeSession&) = delete;

  /// Binds the port first (PortInUseError), then starts the simulation.
  void start();
  /// Stops all threads and flushes the capture. Idempotent.
  void stop();
  /// True once the configured duration has been simulated.
  bool finished() const { return finished_.load(); }
  /// Blocks until finished or `stop_flag` is raised.
  void wait(const std::atomic<bool>& stop_flag);

  std::uint16_t port() const;
  const std::string& host() const { return options_.scenario.bridge.host; }
  const bridge::SessionClock& clock() const { return clock_; }
  bridge::Broker& broker() { return broker_; }
  ServeStats stats() const;
  bridge::MetricsMessage metrics() const;
  /// Thread-safe copy of the latest simulated state.
  VehicleState latest_state() const;
  ControlSetpoint latest_setpoint() const;
  /// Error that ended the sim thread early, if any.
  std::optional<std::string> failure() const;

 private:
  struct Snapshot {
    double sim_time;
    double stamp;
    VehicleState state;
  };

  void sim_loop();
  void publish_loop();
  void publish_snapshot(const Snapshot& snap);
  void publish_metrics();

  ServeOptions options_;
  bridge::SessionClock clock_;
  bridge::Broker broker_;
  bridge::WsServer server_;
  bridge::ClientId robot_id_{0};
  std::unique_ptr<bridge::CaptureWriter> capture_;
  std::unique_ptr<bridge::DelayChannel<bridge::BridgeFrame>> delay_;
  DropOldestQueue<Snapshot> snapshots_;
  bridge::LatencyStats one_way_;

  std::mutex inbox_mutex_;
  std::vector<bridge::CommandMessage> inbox_;

  mutable std::mutex state_mutex_;
  VehicleState latest_state_;
  ControlSetpoint latest_setpoint_;
  std::optional<std::string> failure_;

  std::atomic<bool> running_{false};
  std::atomic<bool> finished_{false};
  std::atomic<std::uint64_t> steps_{0}, snapshots_pushed_{0}, frames_published_{0},
      commands_applied_{0}, overruns_{0};
  std::uint64_t servo_seq_{0}, data_seq_{0}, metrics_seq_{0};
  std::thread sim_thread_;
  std::thread publish_thread_;
};

}  // namespace twinlift::teleop
