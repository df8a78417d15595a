#pragma once

#include <chrono>
#include <cstddef>
#include <deque>
#include <mutex>

namespace twinlift::bridge {

/// Monotonic seconds since construction, anchored to the wall-clock epoch
/// captured at the same instant.
class SessionClock {
 public:
  SessionClock();

  double now() const;
  double epoch() const { return epoch_; }  // unix seconds at now() == 0

  std::chrono::steady_clock::time_point to_steady(double session_time) const;

 private:
  std::chrono::steady_clock::time_point start_;
  double epoch_;
};

/// Sliding window of latency samples.
class LatencyStats {
 public:
  explicit LatencyStats(std::size_t window = 2000) : window_(window) {}

  void add(double seconds);
  std::size_t count() const;
  double mean() const;
  double p95() const;

 private:
  std::size_t window_;
  mutable std::mutex mutex_;
  std::deque<double> samples_;
};

/// Mean and nearest-rank 95th percentile of a sample set; 0 when empty.
double mean_of(const std::deque<double>& xs);
double percentile95(std::deque<double> xs);

}  // namespace twinlift::bridge
