#include "twinlift/avatar/twin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

namespace twinlift::avatar {

namespace {

Vec3 to_vec(const bridge::Triple& t) { return {t[0], t[1], t[2]}; }

EulerAngles to_euler(const bridge::Triple& t) { return {t[0], t[1], t[2]}; }

// Interpolation parameter for a query between two receive times, limited to
// the extrapolation horizon past the newer one.
double blend(double t0, double t1, double t) {
  if (t1 <= t0) return 1.0;
  if (t <= t0) return 0.0;
  if (t >= t1) {
    t = std::min(t, t1 + kMaxExtrapolation);
    if (t == t1) return 1.0;
  }
  return (t - t0) / (t1 - t0);
}

}  // namespace

Vec3 lerp(const Vec3& a, const Vec3& b, double u) { return (1.0 - u) * a + u * b; }

Mat3 slerp(const Mat3& a, const Mat3& b, double u) {
  if (u == 0.0) return a;
  if (u == 1.0) return b;
  return a * exp_so3(u * log_so3(a.transpose() * b));
}

ApplyResult AvatarTwin::apply_telemetry(const bridge::BridgeFrame& frame, double t_rx) {
  std::lock_guard lock(mutex_);
  auto& c = state_.counters;
  ++c.received;

  const auto reject = [&c] {
    ++c.rejected;
    ++c.dropped;
    return ApplyResult::kRejected;
  };
  if (frame.op != bridge::Op::kPublish || !std::isfinite(t_rx)) return reject();

  if (frame.topic == bridge::kServoTopic) {
    const auto* pose = std::get_if<bridge::PoseMessage>(&frame.msg);
    if (!pose) return reject();
    if (state_.pose_last && frame.seq <= state_.pose_last->seq) {
      ++c.dropped;
      return ApplyResult::kStale;
    }
    state_.pose_prev = state_.pose_last;
    state_.pose_last = PoseSample{frame.seq, t_rx, *pose};
  } else if (frame.topic == bridge::kDataTopic) {
    const auto* arm = std::get_if<bridge::ArmMessage>(&frame.msg);
    if (!arm) return reject();
    if (state_.arm_last && frame.seq <= state_.arm_last->seq) {
      ++c.dropped;
      return ApplyResult::kStale;
    }
    state_.arm_prev = state_.arm_last;
    state_.arm_last = ArmSample{frame.seq, t_rx, *arm};
  } else {
    return reject();
  }
  ++c.applied;
  return ApplyResult::kApplied;
}

ApplyResult AvatarTwin::apply_text(std::string_view bytes, double t_rx) {
  bridge::BridgeFrame frame;
  try {
    frame = bridge::decode_frame(bytes);
  } catch (const bridge::FrameError&) {
    std::lock_guard lock(mutex_);
    ++state_.counters.received;
    ++state_.counters.rejected;
    ++state_.counters.dropped;
    return ApplyResult::kRejected;
  }
  return apply_telemetry(frame, t_rx);
}

RenderState AvatarTwin::render_state(double t_query) const {
  TwinState s;
  {
    std::lock_guard lock(mutex_);
    s = state_;
  }
  if (!s.pose_last && !s.arm_last) throw NoDataError("render_state: no telemetry received yet");

  RenderState out;
  // age is measured against the older of the two slots
  double oldest_last = std::numeric_limits<double>::infinity();

  if (s.pose_last) {
    const auto& last = *s.pose_last;
    oldest_last = std::min(oldest_last, last.t_rx);
    const bool stale = t_query - last.t_rx > kMaxExtrapolation;
    if (!s.pose_prev || stale) {
      out.position = to_vec(last.pose.position);
      out.velocity = to_vec(last.pose.velocity);
      out.euler = to_euler(last.pose.euler);
      out.attitude = rotation_from_euler(out.euler);
    } else {
      const auto& prev = *s.pose_prev;
      const double u = blend(prev.t_rx, last.t_rx, t_query);
      out.position = lerp(to_vec(prev.pose.position), to_vec(last.pose.position), u);
      out.velocity = lerp(to_vec(prev.pose.velocity), to_vec(last.pose.velocity), u);
      if (u == 1.0) {
        out.euler = to_euler(last.pose.euler);
        out.attitude = rotation_from_euler(out.euler);
      } else if (u == 0.0) {
        out.euler = to_euler(prev.pose.euler);
        out.attitude = rotation_from_euler(out.euler);
      } else {
        out.attitude = slerp(rotation_from_euler(to_euler(prev.pose.euler)),
                             rotation_from_euler(to_euler(last.pose.euler)), u);
        out.euler = euler_from_rotation(out.attitude).angles;
      }
    }
  }

  if (s.arm_last) {
    const auto& last = *s.arm_last;
    oldest_last = std::min(oldest_last, last.t_rx);
    out.payload_attached = last.arm.payload_attached;
    const bool stale = t_query - last.t_rx > kMaxExtrapolation;
    if (!s.arm_prev || stale) {
      out.joints = last.arm.joints;
    } else {
      const auto& prev = *s.arm_prev;
      const double u = blend(prev.t_rx, last.t_rx, t_query);
      for (int j = 0; j < 3; ++j) {
        out.joints[j] = (1.0 - u) * prev.arm.joints[j] + u * last.arm.joints[j];
      }
    }
  }

  out.age = t_query - oldest_last;
  out.stale = out.age > kMaxExtrapolation;
  return out;
}

TwinState AvatarTwin::snapshot() const {
  std::lock_guard lock(mutex_);
  return state_;
}

TwinCounters AvatarTwin::counters() const {
  std::lock_guard lock(mutex_);
  return state_.counters;
}

}  // namespace twinlift::avatar
