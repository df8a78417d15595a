#pragma once

#include <array>
#include <cstdint>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string_view>

#include "twinlift/bridge/frame.hpp"
#include "twinlift/se3.hpp"

namespace twinlift::avatar {

/// Extrapolation horizon past the newest sample; older data is flagged stale.
inline constexpr double kMaxExtrapolation = 0.2;

struct PoseSample {
  std::uint64_t seq{0};
  double t_rx{0.0};
  bridge::PoseMessage pose;
};

struct ArmSample {
  std::uint64_t seq{0};
  double t_rx{0.0};
  bridge::ArmMessage arm;
};

struct TwinCounters {
  std::uint64_t received{0};
  std::uint64_t applied{0};
  std::uint64_t dropped{0};   // stale seq plus rejected; applied + dropped == received
  std::uint64_t rejected{0};  // wrong topic, op or payload
};

struct TwinState {
  std::optional<PoseSample> pose_prev, pose_last;
  std::optional<ArmSample> arm_prev, arm_last;
  TwinCounters counters;
};

struct RenderState {
  Vec3 position{Vec3::Zero()};
  Vec3 velocity{Vec3::Zero()};
  EulerAngles euler;
  Mat3 attitude{Mat3::Identity()};
  std::array<double, 3> joints{};
  bool payload_attached{false};
  bool stale{false};
  double age{0.0};  // query time minus the older slot's latest receive time
};

class NoDataError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class ApplyResult { kApplied, kStale, kRejected };

/// Mirrored robot state fed by /servo and /data frames. Thread-safe; readers
/// always see a whole update.
class AvatarTwin {
 public:
  ApplyResult apply_telemetry(const bridge::BridgeFrame& frame, double t_rx);
  /// Decodes first; undecodable bytes count as rejected.
  ApplyResult apply_text(std::string_view bytes, double t_rx);

  /// Throws NoDataError before the first applied frame.
  RenderState render_state(double t_query) const;

  TwinState snapshot() const;
  TwinCounters counters() const;

 private:
  mutable std::mutex mutex_;
  TwinState state_;
};

/// Interpolation between two samples; u = 0 and u = 1 reproduce them exactly.
Vec3 lerp(const Vec3& a, const Vec3& b, double u);
Mat3 slerp(const Mat3& a, const Mat3& b, double u);

}  // namespace twinlift::avatar
