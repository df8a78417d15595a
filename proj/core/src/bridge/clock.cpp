#include "twinlift/bridge/clock.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace twinlift::bridge {

SessionClock::SessionClock()
    : start_(std::chrono::steady_clock::now()),
      epoch_(std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch())
                 .count()) {}

double SessionClock::now() const {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
}

std::chrono::steady_clock::time_point SessionClock::to_steady(double session_time) const {
  return start_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                      std::chrono::duration<double>(session_time));
}

void LatencyStats::add(double seconds) {
  std::lock_guard lock(mutex_);
  samples_.push_back(seconds);
  while (samples_.size() > window_) samples_.pop_front();
}

std::size_t LatencyStats::count() const {
  std::lock_guard lock(mutex_);
  return samples_.size();
}

double LatencyStats::mean() const {
  std::lock_guard lock(mutex_);
  return mean_of(samples_);
}

double LatencyStats::p95() const {
  std::lock_guard lock(mutex_);
  return percentile95(samples_);
}

double mean_of(const std::deque<double>& xs) {
  if (xs.empty()) return 0.0;
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double percentile95(std::deque<double> xs) {
  if (xs.empty()) return 0.0;
  std::sort(xs.begin(), xs.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(xs.size())));
  return xs[std::clamp<std::size_t>(rank, 1, xs.size()) - 1];
}

}  // namespace twinlift::bridge
