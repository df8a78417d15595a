#pragma once

#include <algorithm>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <thread>

#include "twinlift/bridge/clock.hpp"

namespace twinlift::bridge {

struct DelaySettings {
  double delay{0.0};   // s, >= 0
  double jitter{0.0};  // s, >= 0; each release is offset by jitter*u, u ~ U[-1, 1]
  std::uint64_t seed{0};
  std::size_t capacity{0};  // 0 = unbounded; otherwise oldest entries are dropped

  void validate() const;
};

/// Release-time bookkeeping without threads. Release times are monotonized so
/// output order always equals input order.
template <typename T>
class DelayLine {
 public:
  explicit DelayLine(DelaySettings settings)
      : settings_(settings), rng_(settings.seed), unit_(-1.0, 1.0) {
    settings_.validate();
  }

  /// Returns the release time assigned to the item.
  double push(double now, T item) {
    double release = now + settings_.delay;
    if (settings_.jitter > 0.0) release += settings_.jitter * unit_(rng_);
    release = std::max({release, last_release_, now});
    last_release_ = release;
    queue_.push_back({release, now, std::move(item)});
    if (settings_.capacity > 0 && queue_.size() > settings_.capacity) {
      queue_.pop_front();
      ++dropped_;
    }
    return release;
  }

  struct Entry {
    double release;
    double enqueued;
    T item;
  };

  /// Removes and returns the head if it is due.
  std::optional<Entry> pop_ready(double now) {
    if (queue_.empty() || queue_.front().release > now) return std::nullopt;
    Entry e = std::move(queue_.front());
    queue_.pop_front();
    return e;
  }

  std::optional<double> next_release() const {
    if (queue_.empty()) return std::nullopt;
    return queue_.front().release;
  }

  std::size_t size() const { return queue_.size(); }
  std::uint64_t dropped() const { return dropped_; }
  const DelaySettings& settings() const { return settings_; }

 private:
  DelaySettings settings_;
  std::mt19937_64 rng_;
  std::uniform_real_distribution<double> unit_;
  std::deque<Entry> queue_;
  double last_release_{-std::numeric_limits<double>::infinity()};
  std::uint64_t dropped_{0};
};

/// Threaded wrapper: items pushed are handed to the consumer callback on a
/// timer thread once their release time passes on the shared session clock.
template <typename T>
class DelayChannel {
 public:
  using Consumer = std::function<void(T item, double released_at)>;

  DelayChannel(DelaySettings settings, const SessionClock& clock, Consumer consumer)
      : line_(settings), clock_(clock), consumer_(std::move(consumer)) {
    worker_ = std::thread([this] { run(); });
  }

  ~DelayChannel() { stop(); }
  DelayChannel(const DelayChannel&) = delete;
  DelayChannel& operator=(const DelayChannel&) = delete;

  void push(T item) {
    {
      std::lock_guard lock(mutex_);
      line_.push(clock_.now(), std::move(item));
    }
    cv_.notify_one();
  }

  /// Releases everything still queued immediately if `flush`, else discards it.
  void stop(bool flush = false) {
    {
      std::lock_guard lock(mutex_);
      if (stopping_) return;
      stopping_ = true;
      flush_ = flush;
    }
    cv_.notify_one();
    if (worker_.joinable()) worker_.join();
  }

  std::size_t pending() const {
    std::lock_guard lock(mutex_);
    return line_.size();
  }
  std::uint64_t dropped() const {
    std::lock_guard lock(mutex_);
    return line_.dropped();
  }

 private:
  void run() {
    std::unique_lock lock(mutex_);
    for (;;) {
      if (stopping_) {
        if (flush_) {
          while (line_.size() > 0) {
            auto e = line_.pop_ready(std::numeric_limits<double>::infinity());
            lock.unlock();
            consumer_(std::move(e->item), clock_.now());
            lock.lock();
          }
        }
        return;
      }
      const auto next = line_.next_release();
      if (!next) {
        cv_.wait(lock);
        continue;
      }
      if (auto e = line_.pop_ready(clock_.now())) {
        lock.unlock();
        consumer_(std::move(e->item), clock_.now());
        lock.lock();
        continue;
      }
      cv_.wait_until(lock, clock_.to_steady(*next));
    }
  }

  DelayLine<T> line_;
  const SessionClock& clock_;
  Consumer consumer_;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  bool stopping_{false};
  bool flush_{false};
  std::thread worker_;
};

}  // namespace twinlift::bridge
