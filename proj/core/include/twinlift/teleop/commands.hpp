#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace twinlift::teleop {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitConfig = 2,
  kExitRuntime = 3,
  kExitEstimator = 4,
};

struct SimulateArgs {
  std::optional<std::filesystem::path> scenario;  // hover preset when empty
  std::filesystem::path out{"out"};
  std::optional<std::uint64_t> seed;
  bool pick_and_place{false};  // use the built-in pick-and-place tape
  bool csv{true};
};

struct ServeArgs {
  std::optional<std::filesystem::path> scenario;
  std::optional<std::filesystem::path> out;  // capture directory
  std::optional<std::uint16_t> port;
  std::optional<double> delay;
  std::optional<double> jitter;
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
  bool realtime{true};
  std::optional<bool> capture;
};

struct LatencyReportArgs {
  std::filesystem::path robot_capture;
  std::filesystem::path avatar_capture;
  std::optional<std::filesystem::path> out;
};

struct AvatarArgs {
  std::string host{"127.0.0.1"};
  std::uint16_t port{9870};
  std::optional<double> duration;
  std::optional<std::filesystem::path> capture;
};

// Human-readable output goes to `out`; failures print one JSON object
// {"error": class, "key"?: path, "message": text} to `err`.
int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err);
int cmd_serve(const ServeArgs& args, const std::atomic<bool>& stop, std::ostream& out,
              std::ostream& err);
int cmd_latency_report(const LatencyReportArgs& args, std::ostream& out, std::ostream& err);
int cmd_avatar(const AvatarArgs& args, const std::atomic<bool>& stop, std::ostream& out,
               std::ostream& err);

}  // namespace twinlift::teleop
