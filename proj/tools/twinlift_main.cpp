#include <csignal>
#include <cstdlib>
#include <iostream>
#include <string>

#ifdef TWINLIFT_CLI11_PACKAGE
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif
#include <spdlog/spdlog.h>

#include "twinlift/teleop/commands.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

void configure_logging() {
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("TWINLIFT_LOG")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

const auto kOnOff = CLI::IsMember({"on", "off"});

std::optional<bool> on_off(const std::string& value) {
  if (value.empty()) return std::nullopt;
  return value == "on";
}

}  // namespace

int main(int argc, char** argv) {
  using namespace twinlift::teleop;
  configure_logging();
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);

  CLI::App app{"twinlift: aerial manipulator simulator, telemetry bridge and avatar twin"};
  app.require_subcommand(1);

  SimulateArgs simulate;
  auto* sim_cmd = app.add_subcommand("simulate", "Run a scenario headless and write the log");
  sim_cmd->add_option("--scenario", simulate.scenario, "Scenario JSON (hover preset if omitted)")
      ->check(CLI::ExistingFile);
  sim_cmd->add_option("--out", simulate.out, "Output directory")->capture_default_str();
  sim_cmd->add_option("--seed", simulate.seed, "Override the scenario seed");

  SimulateArgs pick;
  pick.pick_and_place = true;
  auto* pick_cmd =
      app.add_subcommand("pick-and-place", "Run the built-in pick-and-place tape headless");
  pick_cmd->add_option("--out", pick.out, "Output directory")->capture_default_str();
  pick_cmd->add_option("--seed", pick.seed, "Override the scenario seed");

  ServeArgs serve;
  std::string serve_realtime = "on";
  std::string serve_capture;
  auto* serve_cmd = app.add_subcommand("serve", "Run simulator and bridge server together");
  serve_cmd->add_option("--scenario", serve.scenario, "Scenario JSON (hover preset if omitted)")
      ->check(CLI::ExistingFile);
  serve_cmd->add_option("--out", serve.out, "Capture directory (default: out)");
  serve_cmd->add_option("--port", serve.port, "Listen port, 0 for any free port");
  serve_cmd->add_option("--delay", serve.delay, "Injected one-way delay in seconds")
      ->check(CLI::NonNegativeNumber);
  serve_cmd->add_option("--jitter", serve.jitter, "Injected delay jitter in seconds")
      ->check(CLI::NonNegativeNumber);
  serve_cmd->add_option("--seed", serve.seed, "Seed for the simulation and the delay line");
  serve_cmd->add_option("--duration", serve.duration, "Stop after this many simulated seconds")
      ->check(CLI::PositiveNumber);
  serve_cmd->add_option("--realtime", serve_realtime, "Pace the simulation to the wall clock")
      ->check(kOnOff)
      ->capture_default_str();
  serve_cmd->add_option("--capture", serve_capture, "Record robot_capture.jsonl")->check(kOnOff);

  LatencyReportArgs latency;
  auto* latency_cmd =
      app.add_subcommand("latency-report", "Estimate delay and twin fidelity from two captures");
  latency_cmd->add_option("robot_capture", latency.robot_capture, "Robot-side capture")
      ->required()
      ->check(CLI::ExistingFile);
  latency_cmd->add_option("avatar_capture", latency.avatar_capture, "Avatar-side capture")
      ->required()
      ->check(CLI::ExistingFile);
  latency_cmd->add_option("--out", latency.out, "Write paired_trace.csv and fidelity.json here");

  AvatarArgs avatar;
  auto* avatar_cmd = app.add_subcommand("avatar", "Connect an avatar twin to a running bridge");
  avatar_cmd->add_option("--host", avatar.host, "Bridge host")->capture_default_str();
  avatar_cmd->add_option("--port", avatar.port, "Bridge port")->capture_default_str();
  avatar_cmd->add_option("--duration", avatar.duration, "Disconnect after this many seconds")
      ->check(CLI::PositiveNumber);
  avatar_cmd->add_option("--capture", avatar.capture, "Record received frames to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (*sim_cmd) return cmd_simulate(simulate, std::cout, std::cerr);
  if (*pick_cmd) return cmd_simulate(pick, std::cout, std::cerr);
  if (*serve_cmd) {
    serve.realtime = serve_realtime == "on";
    serve.capture = on_off(serve_capture);
    return cmd_serve(serve, g_stop, std::cout, std::cerr);
  }
  if (*latency_cmd) return cmd_latency_report(latency, std::cout, std::cerr);
  if (*avatar_cmd) return cmd_avatar(avatar, g_stop, std::cout, std::cerr);
  return kExitUsage;
}
