#include <benchmark/benchmark.h>

#include "twinlift/controller.hpp"
#include "twinlift/simulator.hpp"

namespace {

using namespace twinlift;

VehicleState moving_state() {
  VehicleState s;
  s.position = {0.3, -0.2, -1.0};
  s.velocity = {0.1, 0.2, -0.1};
  s.attitude = rotation_from_euler({0.05, -0.04, 0.3});
  s.body_rates = {0.2, -0.1, 0.05};
  s.arm_angles = {0.1, -0.5, 0.3};
  return s;
}

void BM_Rk4Step(benchmark::State& state) {
  const VehicleParams p;
  const VehicleState s = moving_state();
  ControlInputs in;
  in.thrust = total_mass(p, false) * p.gravity;
  in.arm_commands = {0.2, -0.6, 0.2};
  for (auto _ : state) benchmark::DoNotOptimize(rk4_step(s, in, p, 0.001));
}
BENCHMARK(BM_Rk4Step);

void BM_ControlStep(benchmark::State& state) {
  const VehicleParams p;
  const ControlGains g;
  const VehicleState s = moving_state();
  ControlSetpoint sp;
  sp.position_d = {0.0, 0.0, -1.0};
  for (auto _ : state) benchmark::DoNotOptimize(control_step(s, sp, p, g));
}
BENCHMARK(BM_ControlStep);

void BM_HoverScenarioSecond(benchmark::State& state) {
  SimConfig c;
  c.duration = 1.0;
  c.initial_state.position = {1.0, 1.0, 0.0};
  c.initial_setpoint.position_d = {0.0, 0.0, -1.0};
  for (auto _ : state) benchmark::DoNotOptimize(run_scenario(c));
}
BENCHMARK(BM_HoverScenarioSecond)->Unit(benchmark::kMillisecond);

}  // namespace
