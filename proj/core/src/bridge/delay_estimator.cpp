#include "twinlift/bridge/delay_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_map>

#include <fmt/format.h>

#include "twinlift/bridge/clock.hpp"

namespace twinlift::bridge {

namespace {

struct Grid {
  std::array<std::vector<double>, 3> axis;
  std::ptrdiff_t offset{0};  // index of the first sample on the shared grid
};

Grid resample(const std::vector<TraceSample>& sorted, double origin, double h) {
  Grid g;
  const double t0 = sorted.front().t;
  const double t1 = sorted.back().t;
  const auto first = static_cast<std::ptrdiff_t>(std::ceil((t0 - origin) / h - 1e-9));
  const auto last = static_cast<std::ptrdiff_t>(std::floor((t1 - origin) / h + 1e-9));
  g.offset = first;
  for (std::ptrdiff_t k = first; k <= last; ++k) {
    const Triple p = sample_trace(sorted, origin + static_cast<double>(k) * h);
    for (int a = 0; a < 3; ++a) g.axis[a].push_back(p[a]);
  }
  return g;
}

double variance(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double s = 0.0;
  for (double x : xs) s += (x - mean) * (x - mean);
  return s / static_cast<double>(xs.size());
}

// Pearson correlation of robot[k] against twin[k + lag] on the shared grid.
std::optional<double> pearson_at(const std::vector<double>& r, std::ptrdiff_t r_off,
                                 const std::vector<double>& w, std::ptrdiff_t w_off,
                                 std::ptrdiff_t lag, std::size_t min_pairs) {
  const std::ptrdiff_t r_end = r_off + static_cast<std::ptrdiff_t>(r.size());
  const std::ptrdiff_t w_end = w_off + static_cast<std::ptrdiff_t>(w.size());
  const std::ptrdiff_t lo = std::max(r_off, w_off - lag);
  const std::ptrdiff_t hi = std::min(r_end, w_end - lag);
  if (hi - lo < static_cast<std::ptrdiff_t>(min_pairs)) return std::nullopt;

  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::ptrdiff_t k = lo; k < hi; ++k) {
    const double x = r[static_cast<std::size_t>(k - r_off)];
    const double y = w[static_cast<std::size_t>(k + lag - w_off)];
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  const auto n = static_cast<double>(hi - lo);
  const double cov = sxy - sx * sy / n;
  const double vx = sxx - sx * sx / n;
  const double vy = syy - sy * sy / n;
  if (vx <= 0.0 || vy <= 0.0) return 0.0;
  return cov / std::sqrt(vx * vy);
}

struct Peak {
  double lag;   // in grid steps, refined
  double value;
};

std::optional<Peak> find_peak(const std::vector<std::optional<double>>& curve,
                              std::ptrdiff_t max_lag) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < curve.size(); ++i) {
    if (curve[i] && (!best || *curve[i] > *curve[*best])) best = i;
  }
  if (!best) return std::nullopt;
  double refined = static_cast<double>(*best);
  const std::size_t i = *best;
  if (i > 0 && i + 1 < curve.size() && curve[i - 1] && curve[i + 1]) {
    const double a = *curve[i - 1], b = *curve[i], c = *curve[i + 1];
    const double denom = a - 2.0 * b + c;
    if (denom < 0.0) refined += std::clamp(0.5 * (a - c) / denom, -0.5, 0.5);
  }
  return Peak{refined - static_cast<double>(max_lag), *curve[i]};
}

}  // namespace

Triple sample_trace(const std::vector<TraceSample>& sorted, double t) {
  if (t <= sorted.front().t) return sorted.front().position;
  if (t >= sorted.back().t) return sorted.back().position;
  auto hi = std::upper_bound(sorted.begin(), sorted.end(), t,
                             [](double v, const TraceSample& s) { return v < s.t; });
  auto lo = std::prev(hi);
  const double span = hi->t - lo->t;
  const double u = span > 0.0 ? (t - lo->t) / span : 1.0;
  Triple out{};
  for (int a = 0; a < 3; ++a) out[a] = lo->position[a] + u * (hi->position[a] - lo->position[a]);
  return out;
}

DelayEstimate estimate_delay(std::vector<TraceSample> robot, std::vector<TraceSample> twin,
                             const DelayEstimatorOptions& options) {
  if (robot.size() < 2 || twin.size() < 2) {
    throw InsufficientExcitationError("estimate_delay: need at least two samples per trace");
  }
  const auto by_time = [](const TraceSample& a, const TraceSample& b) { return a.t < b.t; };
  std::stable_sort(robot.begin(), robot.end(), by_time);
  std::stable_sort(twin.begin(), twin.end(), by_time);

  const double h = options.grid;
  const double origin = std::min(robot.front().t, twin.front().t);
  const Grid r = resample(robot, origin, h);
  const Grid w = resample(twin, origin, h);

  const auto max_lag = static_cast<std::ptrdiff_t>(std::llround(options.max_lag / h));
  const auto min_pairs = static_cast<std::size_t>(std::ceil(options.min_overlap / h));

  DelayEstimate out;
  std::vector<std::optional<double>> combined(static_cast<std::size_t>(2 * max_lag + 1));
  std::vector<int> contributors(combined.size(), 0);
  int excited = 0;

  for (int a = 0; a < 3; ++a) {
    if (variance(r.axis[a]) < options.min_variance || variance(w.axis[a]) < options.min_variance) {
      continue;
    }
    ++excited;
    std::vector<std::optional<double>> curve(combined.size());
    for (std::ptrdiff_t lag = -max_lag; lag <= max_lag; ++lag) {
      const auto idx = static_cast<std::size_t>(lag + max_lag);
      curve[idx] = pearson_at(r.axis[a], r.offset, w.axis[a], w.offset, lag, min_pairs);
      if (curve[idx]) {
        combined[idx] = combined[idx].value_or(0.0) + *curve[idx];
        ++contributors[idx];
      }
    }
    if (auto peak = find_peak(curve, max_lag)) out.axis_delay[a] = peak->lag * h;
  }

  if (excited == 0) {
    throw InsufficientExcitationError(fmt::format(
        "estimate_delay: position variance below {} m^2 on every axis", options.min_variance));
  }
  for (std::size_t i = 0; i < combined.size(); ++i) {
    // lags where some excited axis lacks overlap are not comparable
    if (contributors[i] != excited) {
      combined[i].reset();
    } else {
      *combined[i] /= excited;
    }
  }
  const auto peak = find_peak(combined, max_lag);
  if (!peak) {
    throw InsufficientExcitationError("estimate_delay: traces do not overlap long enough");
  }
  out.xcorr_delay = peak->lag * h;
  out.xcorr_peak = peak->value;

  std::unordered_map<std::uint64_t, double> sent;
  for (const auto& s : robot) sent.emplace(s.seq, s.t);
  std::deque<double> latencies;
  for (const auto& s : twin) {
    if (auto it = sent.find(s.seq); it != sent.end()) latencies.push_back(s.t - it->second);
  }
  out.stamp_samples = latencies.size();
  if (!latencies.empty()) {
    out.stamp_mean = mean_of(latencies);
    out.stamp_p95 = percentile95(latencies);
    out.disagreement = std::abs(out.xcorr_delay - *out.stamp_mean);
  }
  return out;
}

}  // namespace twinlift::bridge
