#include <cmath>
#include <string>

#include <benchmark/benchmark.h>

#include "twinlift/bridge/broker.hpp"
#include "twinlift/bridge/delay_estimator.hpp"
#include "twinlift/bridge/frame.hpp"

namespace {

using namespace twinlift::bridge;

BridgeFrame servo_frame(std::uint64_t seq) {
  return {Op::kPublish, std::string(kServoTopic), seq, 12.345678,
          PoseMessage{{1.25, -0.5, -1.0}, {0.01, -0.02, 0.3}, {0.1, 0.0, -0.05}}};
}

void BM_EncodeServo(benchmark::State& state) {
  const BridgeFrame f = servo_frame(42);
  for (auto _ : state) benchmark::DoNotOptimize(encode_frame(f));
}
BENCHMARK(BM_EncodeServo);

void BM_DecodeServo(benchmark::State& state) {
  const std::string bytes = encode_frame(servo_frame(42));
  for (auto _ : state) benchmark::DoNotOptimize(decode_frame(bytes));
}
BENCHMARK(BM_DecodeServo);

void BM_BrokerFanOut(benchmark::State& state) {
  Broker broker;
  const auto subscribers = static_cast<int>(state.range(0));
  const ClientId robot = broker.connect([](const std::string&) { return true; });
  broker.dispatch(robot, {Op::kAdvertise, std::string(kServoTopic), 0, 0.0, std::monostate{}});
  for (int i = 0; i < subscribers; ++i) {
    const ClientId c = broker.connect([](const std::string& s) {
      benchmark::DoNotOptimize(s.data());
      return true;
    });
    broker.dispatch(c, {Op::kSubscribe, std::string(kServoTopic), 0, 0.0, std::monostate{}});
  }
  std::uint64_t seq = 0;
  for (auto _ : state) broker.dispatch(robot, servo_frame(seq++));
  state.SetItemsProcessed(state.iterations() * subscribers);
}
BENCHMARK(BM_BrokerFanOut)->Arg(1)->Arg(4)->Arg(16);

void BM_EstimateDelay(benchmark::State& state) {
  std::vector<TraceSample> robot, twin;
  for (int i = 0; i < 1500; ++i) {
    const double t = 0.02 * i;
    const auto at = [](double s) {
      return Triple{std::sin(0.9 * s), std::cos(0.6 * s), -1.0 + 0.3 * std::sin(1.7 * s)};
    };
    robot.push_back({static_cast<std::uint64_t>(i), t, at(t)});
    twin.push_back({static_cast<std::uint64_t>(i), t + 0.5, at(t)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(estimate_delay(robot, twin));
}
BENCHMARK(BM_EstimateDelay)->Unit(benchmark::kMillisecond);

}  // namespace
