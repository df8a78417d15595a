#pragma once

// Wire frames of the telemetry bridge. Every frame is a JSON text message
// with keys in the fixed order op, topic, seq, stamp_tx, msg. The canonical
// encoding prints doubles with 17 significant digits so that decoding and
// re-encoding is byte-stable.

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace twinlift::bridge {

enum class Op { kAdvertise, kSubscribe, kPublish, kUnsubscribe, kPing, kPong };

std::string_view to_string(Op op);
std::optional<Op> op_from_string(std::string_view s);

using Triple = std::array<double, 3>;

// Topic names.
inline constexpr std::string_view kServoTopic = "/servo";
inline constexpr std::string_view kDataTopic = "/data";
inline constexpr std::string_view kTeleopTopic = "/teleop";
inline constexpr std::string_view kMetricsTopic = "/metrics";

/// /servo: robot pose for the avatar. Euler angles are ZYX (phi, theta, psi).
struct PoseMessage {
  Triple position{};
  Triple euler{};
  Triple velocity{};
  bool operator==(const PoseMessage&) const = default;
};

/// /data: arm joint angles and gripper state.
struct ArmMessage {
  Triple joints{};
  bool payload_attached{false};
  bool operator==(const ArmMessage&) const = default;
};

struct NudgeCommand {
  Triple delta{};
  double yaw_delta{0.0};
  bool operator==(const NudgeCommand&) const = default;
};
struct SetpointCommand {
  Triple position{};
  double yaw{0.0};
  bool operator==(const SetpointCommand&) const = default;
};
struct ArmTargetCommand {
  Triple joints{};
  bool operator==(const ArmTargetCommand&) const = default;
};
struct GraspCommand {
  bool operator==(const GraspCommand&) const = default;
};
struct ReleaseCommand {
  bool operator==(const ReleaseCommand&) const = default;
};

/// /teleop: operator to robot.
using CommandMessage =
    std::variant<NudgeCommand, SetpointCommand, ArmTargetCommand, GraspCommand, ReleaseCommand>;

/// /metrics: periodic bridge statistics. Latencies in seconds.
struct MetricsMessage {
  std::uint64_t clients{0};
  std::uint64_t delivered{0};
  std::uint64_t dropped{0};
  double injected_delay{0.0};
  double injected_jitter{0.0};
  double one_way_mean{0.0};
  double one_way_p95{0.0};
  double transport_mean{0.0};
  double transport_p95{0.0};
  bool clock_sync_limited{false};
  bool operator==(const MetricsMessage&) const = default;
};

/// Body of the pong the server sends right after a client connects; stamp_tx
/// of that frame is the server's session time.
struct SessionInfo {
  double session_epoch{0.0};  // unix seconds at which session time was zero
  bool operator==(const SessionInfo&) const = default;
};

using Payload = std::variant<std::monostate, PoseMessage, ArmMessage, CommandMessage,
                             MetricsMessage, SessionInfo>;

struct BridgeFrame {
  Op op{Op::kPing};
  std::string topic;
  std::uint64_t seq{0};
  double stamp_tx{0.0};
  Payload msg;

  bool operator==(const BridgeFrame&) const = default;
};

enum class PayloadKind { kNone, kPose, kArm, kCommand, kMetrics };

/// Fixed topic table: /servo, /data, /teleop, /metrics.
class TopicRegistry {
 public:
  struct Entry {
    std::string name;
    PayloadKind kind;
  };

  static const TopicRegistry& standard();

  explicit TopicRegistry(std::vector<Entry> entries);

  const Entry* find(std::string_view topic) const;
  const std::vector<Entry>& entries() const { return entries_; }

 private:
  std::vector<Entry> entries_;
};

class FrameError : public std::runtime_error {
 public:
  FrameError(const std::string& what, std::optional<std::size_t> offset = std::nullopt)
      : std::runtime_error(what), offset_(offset) {}
  std::optional<std::size_t> offset() const { return offset_; }

 private:
  std::optional<std::size_t> offset_;
};

class MalformedFrameError : public FrameError {
 public:
  using FrameError::FrameError;
};
class UnknownOpError : public FrameError {
 public:
  using FrameError::FrameError;
};
class UnknownTopicError : public FrameError {
 public:
  using FrameError::FrameError;
};
class SchemaMismatchError : public FrameError {
 public:
  using FrameError::FrameError;
};
class EncodeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Canonical bytes. Throws EncodeError on non-finite numbers.
std::string encode_frame(const BridgeFrame& frame);

/// Accepts any key order. Throws one of the FrameError subclasses.
BridgeFrame decode_frame(std::string_view bytes,
                         const TopicRegistry& registry = TopicRegistry::standard());

/// 17-significant-digit rendering used by the canonical encoder.
std::string format_number(double value);

}  // namespace twinlift::bridge
