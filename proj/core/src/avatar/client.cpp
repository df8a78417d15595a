#include "twinlift/avatar/client.hpp"

namespace twinlift::avatar {

AvatarClient::AvatarClient(std::optional<std::filesystem::path> capture) {
  if (capture) capture_ = std::make_unique<bridge::CaptureWriter>(*capture);
  client_.on_frame([this](const bridge::BridgeFrame& f, double rx) { on_frame(f, rx); });
}

AvatarClient::~AvatarClient() { close(); }

void AvatarClient::connect(const std::string& host, std::uint16_t port,
                           std::chrono::milliseconds timeout) {
  client_.connect(host, port, timeout);
  client_.subscribe(bridge::kServoTopic);
  client_.subscribe(bridge::kDataTopic);
  client_.subscribe(bridge::kMetricsTopic);
  client_.advertise(bridge::kTeleopTopic);
}

void AvatarClient::close() {
  client_.close();
  if (capture_) capture_->flush();
}

std::uint64_t AvatarClient::send_command(const bridge::CommandMessage& command) {
  return client_.publish(bridge::kTeleopTopic, command);
}

std::optional<bridge::MetricsMessage> AvatarClient::last_metrics() const {
  std::lock_guard lock(metrics_mutex_);
  return metrics_;
}

void AvatarClient::on_frame(const bridge::BridgeFrame& frame, double rx) {
  if (frame.op != bridge::Op::kPublish) return;
  if (frame.topic == bridge::kMetricsTopic) {
    if (const auto* m = std::get_if<bridge::MetricsMessage>(&frame.msg)) {
      std::lock_guard lock(metrics_mutex_);
      metrics_ = *m;
    }
    return;
  }
  twin_.apply_telemetry(frame, rx);
  if (capture_) {
    bridge::BridgeFrame restamped = frame;
    restamped.stamp_tx = rx;
    capture_->write(restamped);
  }
}

}  // namespace twinlift::avatar
