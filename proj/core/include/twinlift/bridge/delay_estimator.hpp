#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "twinlift/bridge/frame.hpp"

namespace twinlift::bridge {

/// One position sample. For the robot side `t` is the publish stamp, for the
/// twin side it is the receive time on the same session clock.
struct TraceSample {
  std::uint64_t seq{0};
  double t{0.0};
  Triple position{};
};

struct DelayEstimatorOptions {
  double grid{0.01};          // resample interval, s
  double max_lag{2.5};        // search window, s
  double min_variance{1e-6};  // per-axis excitation threshold, m^2
  double min_overlap{1.0};    // s of paired data required at every lag
};

struct DelayEstimate {
  double xcorr_delay{0.0};                             // s, twin lags robot by this much
  double xcorr_peak{0.0};                              // mean Pearson correlation at the peak
  std::array<std::optional<double>, 3> axis_delay{};   // excited axes only
  std::optional<double> stamp_mean;                    // s
  std::optional<double> stamp_p95;                     // s
  std::size_t stamp_samples{0};
  std::optional<double> disagreement;                  // |xcorr_delay - stamp_mean|
};

class InsufficientExcitationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Cross-correlation lag of twin against robot positions plus stamp latency
/// over seq-matched samples. Inputs need not be sorted.
DelayEstimate estimate_delay(std::vector<TraceSample> robot, std::vector<TraceSample> twin,
                             const DelayEstimatorOptions& options = {});

/// Linear interpolation of a time-sorted trace; clamps outside its span.
Triple sample_trace(const std::vector<TraceSample>& sorted, double t);

}  // namespace twinlift::bridge
