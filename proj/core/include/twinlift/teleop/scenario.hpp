#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "twinlift/simulator.hpp"

namespace twinlift::teleop {

struct BridgeSettings {
  std::string host{"127.0.0.1"};
  std::uint16_t port{9870};
  double publish_rate{50.0};  // Hz
  double delay{0.0};          // s, injected on /servo and /data
  double jitter{0.0};         // s
  std::uint64_t delay_seed{0};
  std::size_t queue_capacity{256};  // snapshots between sim and publisher
  double metrics_period{1.0};       // s

  void validate() const;
};

struct LoggingSettings {
  bool csv{true};
  bool capture{true};
};

struct Scenario {
  SimConfig sim;
  BridgeSettings bridge;
  LoggingSettings logging;
};

/// Invalid scenario content. `path` is the offending key, e.g.
/// "events[2].setpoint.position".
class ScenarioError : public std::runtime_error {
 public:
  ScenarioError(std::string path, const std::string& message);
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Strict JSON reader: every section is optional, unknown keys are errors.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

/// Built-in presets used when no scenario file is given.
Scenario hover_scenario();
Scenario pick_and_place_preset();

}  // namespace twinlift::teleop
