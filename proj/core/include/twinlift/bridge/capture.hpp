#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "twinlift/bridge/delay_estimator.hpp"
#include "twinlift/bridge/frame.hpp"

namespace twinlift::bridge {

class CaptureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Appends one canonical frame per line. Thread-safe.
class CaptureWriter {
 public:
  explicit CaptureWriter(const std::filesystem::path& path);

  void write(const BridgeFrame& frame);
  void write_encoded(std::string_view canonical);
  void flush();
  std::size_t lines() const;

 private:
  mutable std::mutex mutex_;
  std::ofstream out_;
  std::size_t lines_{0};
};

/// Reads a capture file. Blank lines are skipped; a bad line raises
/// CaptureError naming its line number.
std::vector<BridgeFrame> read_capture(const std::filesystem::path& path);

/// Position samples from /servo publishes, using each frame's seq and stamp_tx.
std::vector<TraceSample> pose_trace(const std::vector<BridgeFrame>& frames);

}  // namespace twinlift::bridge
