#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "twinlift/avatar/twin.hpp"
#include "twinlift/bridge/capture.hpp"
#include "twinlift/bridge/ws_client.hpp"

namespace twinlift::avatar {

/// Headless avatar: subscribes to /servo, /data and /metrics, mirrors the
/// robot in an AvatarTwin and can send operator commands on /teleop.
class AvatarClient {
 public:
  /// With a capture path, every received telemetry frame is written with
  /// stamp_tx replaced by its receive time on the session clock.
  explicit AvatarClient(std::optional<std::filesystem::path> capture = std::nullopt);
  ~AvatarClient();

  void connect(const std::string& host, std::uint16_t port,
               std::chrono::milliseconds timeout = std::chrono::seconds(5));
  void close();
  bool connected() const { return client_.connected(); }

  std::uint64_t send_command(const bridge::CommandMessage& command);

  const AvatarTwin& twin() const { return twin_; }
  std::optional<bridge::MetricsMessage> last_metrics() const;
  double session_now() const { return client_.session_now(); }
  double clock_offset() const { return client_.clock_offset(); }

 private:
  void on_frame(const bridge::BridgeFrame& frame, double rx);

  bridge::WsClient client_;
  AvatarTwin twin_;
  std::unique_ptr<bridge::CaptureWriter> capture_;
  mutable std::mutex metrics_mutex_;
  std::optional<bridge::MetricsMessage> metrics_;
};

}  // namespace twinlift::avatar
