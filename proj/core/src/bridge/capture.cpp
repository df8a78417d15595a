#include "twinlift/bridge/capture.hpp"

#include <fmt/format.h>

namespace twinlift::bridge {

CaptureWriter::CaptureWriter(const std::filesystem::path& path) : out_(path, std::ios::trunc) {
  if (!out_) throw CaptureError(fmt::format("cannot open capture file '{}'", path.string()));
}

void CaptureWriter::write(const BridgeFrame& frame) { write_encoded(encode_frame(frame)); }

void CaptureWriter::write_encoded(std::string_view canonical) {
  std::lock_guard lock(mutex_);
  out_ << canonical << '\n';
  ++lines_;
}

void CaptureWriter::flush() {
  std::lock_guard lock(mutex_);
  out_.flush();
}

std::size_t CaptureWriter::lines() const {
  std::lock_guard lock(mutex_);
  return lines_;
}

std::vector<BridgeFrame> read_capture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CaptureError(fmt::format("cannot open capture file '{}'", path.string()));
  std::vector<BridgeFrame> frames;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      frames.push_back(decode_frame(line));
    } catch (const FrameError& e) {
      throw CaptureError(fmt::format("{}:{}: {}", path.string(), number, e.what()));
    }
  }
  return frames;
}

std::vector<TraceSample> pose_trace(const std::vector<BridgeFrame>& frames) {
  std::vector<TraceSample> out;
  for (const auto& f : frames) {
    if (f.op != Op::kPublish || f.topic != kServoTopic) continue;
    if (const auto* pose = std::get_if<PoseMessage>(&f.msg)) {
      out.push_back({f.seq, f.stamp_tx, pose->position});
    }
  }
  return out;
}

}  // namespace twinlift::bridge
