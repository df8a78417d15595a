#include "twinlift/avatar/fidelity.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <map>
#include <set>

#include <fmt/format.h>

#include "twinlift/avatar/twin.hpp"
#include "twinlift/bridge/capture.hpp"

namespace twinlift::avatar {

namespace {

double distance(const bridge::Triple& a, const bridge::Triple& b) {
  return std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                   (a[2] - b[2]) * (a[2] - b[2]));
}

std::string optional_number(const std::optional<double>& v) {
  return v ? bridge::format_number(*v) : "null";
}

}  // namespace

std::uint64_t count_seq_gaps(const std::vector<bridge::BridgeFrame>& capture) {
  std::map<std::string, std::set<std::uint64_t>> seen;
  for (const auto& f : capture) {
    if (f.op != bridge::Op::kPublish) continue;
    if (f.topic != bridge::kServoTopic && f.topic != bridge::kDataTopic) continue;
    seen[f.topic].insert(f.seq);
  }
  std::uint64_t gaps = 0;
  for (const auto& [_, seqs] : seen) {
    const std::uint64_t span = *seqs.rbegin() - *seqs.begin() + 1;
    gaps += span - seqs.size();
  }
  return gaps;
}

double staleness_fraction(const std::vector<double>& receive_times, double start, double end,
                          double grid) {
  if (!(end > start) || receive_times.empty()) return 0.0;
  std::vector<double> sorted = receive_times;
  std::sort(sorted.begin(), sorted.end());
  std::size_t stale = 0, total = 0;
  const auto steps = static_cast<std::size_t>(std::floor((end - start) / grid + 1e-9));
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = start + static_cast<double>(k) * grid;
    ++total;
    auto it = std::upper_bound(sorted.begin(), sorted.end(), t);
    if (it == sorted.begin() || t - *std::prev(it) > kMaxExtrapolation) ++stale;
  }
  return static_cast<double>(stale) / static_cast<double>(total);
}

FidelityResult fidelity_report(const std::vector<bridge::BridgeFrame>& robot_capture,
                               const std::vector<bridge::BridgeFrame>& twin_capture,
                               const FidelityOptions& options) {
  auto robot = bridge::pose_trace(robot_capture);
  auto twin = bridge::pose_trace(twin_capture);
  const auto estimate = bridge::estimate_delay(robot, twin, options.estimator);

  const auto by_time = [](const auto& a, const auto& b) { return a.t < b.t; };
  std::stable_sort(robot.begin(), robot.end(), by_time);
  std::stable_sort(twin.begin(), twin.end(), by_time);

  FidelityResult out;
  auto& r = out.report;
  r.delay = estimate.xcorr_delay;
  r.stamp_mean = estimate.stamp_mean;
  r.stamp_p95 = estimate.stamp_p95;
  r.disagreement = estimate.disagreement;
  r.lost = count_seq_gaps(twin_capture);
  r.robot_samples = robot.size();
  r.twin_samples = twin.size();

  const double d = r.delay;
  const double start = std::max(robot.front().t, twin.front().t - d);
  const double end = std::min(robot.back().t, twin.back().t - d);
  double sum = 0.0;
  const auto steps = end >= start ? static_cast<std::size_t>(
                                        std::floor((end - start) / options.pair_interval + 1e-9))
                                  : 0;
  for (std::size_t k = 0; end >= start && k <= steps; ++k) {
    const double t = start + static_cast<double>(k) * options.pair_interval;
    PairedSample p{t, bridge::sample_trace(robot, t), bridge::sample_trace(twin, t + d)};
    const double e = distance(p.robot, p.twin);
    sum += e;
    r.max_error = std::max(r.max_error, e);
    out.paired.push_back(p);
  }
  if (!out.paired.empty()) r.mean_error = sum / static_cast<double>(out.paired.size());

  // twin is expected to track until the last robot publish arrives
  std::vector<double> rx;
  rx.reserve(twin_capture.size());
  for (const auto& f : twin_capture) {
    if (f.op == bridge::Op::kPublish &&
        (f.topic == bridge::kServoTopic || f.topic == bridge::kDataTopic)) {
      rx.push_back(f.stamp_tx);
    }
  }
  r.staleness_fraction = staleness_fraction(rx, twin.front().t,
                                            std::max(twin.back().t, robot.back().t + d),
                                            options.staleness_grid);
  return out;
}

void write_paired_csv(std::ostream& out, const std::vector<PairedSample>& paired) {
  out << kPairedCsvHeader << '\n';
  for (const auto& p : paired) {
    out << fmt::format("{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g}\n", p.t,
                       p.robot[0], p.robot[1], p.robot[2], p.twin[0], p.twin[1], p.twin[2]);
  }
}

std::string to_json(const FidelityReport& r) {
  using bridge::format_number;
  return fmt::format(
      R"({{"mean_error":{},"max_error":{},"delay":{},"stamp_mean":{},"stamp_p95":{},)"
      R"("disagreement":{},"lost":{},"staleness_fraction":{},"robot_samples":{},"twin_samples":{}}})",
      format_number(r.mean_error), format_number(r.max_error), format_number(r.delay),
      optional_number(r.stamp_mean), optional_number(r.stamp_p95),
      optional_number(r.disagreement), r.lost, format_number(r.staleness_fraction),
      r.robot_samples, r.twin_samples);
}

}  // namespace twinlift::avatar
