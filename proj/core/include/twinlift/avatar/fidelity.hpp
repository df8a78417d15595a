#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "twinlift/bridge/delay_estimator.hpp"
#include "twinlift/bridge/frame.hpp"

namespace twinlift::avatar {

struct FidelityReport {
  double mean_error{0.0};  // m, after delay alignment
  double max_error{0.0};   // m
  double delay{0.0};       // s, cross-correlation estimate
  std::optional<double> stamp_mean;
  std::optional<double> stamp_p95;
  std::optional<double> disagreement;
  std::uint64_t lost{0};  // publisher seq gaps seen by the twin, /servo and /data
  double staleness_fraction{0.0};
  std::size_t robot_samples{0};
  std::size_t twin_samples{0};
};

struct PairedSample {
  double t{0.0};  // robot time
  bridge::Triple robot{};
  bridge::Triple twin{};  // twin position at t + delay
};

struct FidelityResult {
  FidelityReport report;
  std::vector<PairedSample> paired;
};

struct FidelityOptions {
  bridge::DelayEstimatorOptions estimator;
  double pair_interval{0.02};       // s between paired samples
  double staleness_grid{0.01};      // s
};

/// Robot capture carries publish stamps; the twin capture carries receive
/// times in stamp_tx. Propagates InsufficientExcitationError.
FidelityResult fidelity_report(const std::vector<bridge::BridgeFrame>& robot_capture,
                               const std::vector<bridge::BridgeFrame>& twin_capture,
                               const FidelityOptions& options = {});

/// Seq gaps per topic between the first and last seq seen.
std::uint64_t count_seq_gaps(const std::vector<bridge::BridgeFrame>& capture);

/// Fraction of grid instants in [start, end] whose newest sample is older
/// than the extrapolation horizon.
double staleness_fraction(const std::vector<double>& receive_times, double start, double end,
                          double grid);

inline constexpr const char* kPairedCsvHeader = "t,robot_x,robot_y,robot_z,twin_x,twin_y,twin_z";

void write_paired_csv(std::ostream& out, const std::vector<PairedSample>& paired);

/// Canonical JSON, fixed key order, 17 significant digits.
std::string to_json(const FidelityReport& report);

}  // namespace twinlift::avatar
