#include "twinlift/teleop/commands.hpp"

#include <chrono>
#include <fstream>
#include <ostream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <nlohmann/json.hpp>

#include "twinlift/avatar/client.hpp"
#include "twinlift/avatar/fidelity.hpp"
#include "twinlift/teleop/scenario.hpp"
#include "twinlift/teleop/serve.hpp"

namespace twinlift::teleop {

namespace {

using nlohmann::json;

int report(std::ostream& err, int code, std::string_view kind, const std::string& message,
           const std::string& key = {}) {
  json j;
  j["error"] = kind;
  if (!key.empty()) j["key"] = key;
  j["message"] = message;
  err << j.dump() << '\n';
  return code;
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

Scenario resolve_scenario(const std::optional<std::filesystem::path>& path, Scenario fallback) {
  return path ? load_scenario(*path) : std::move(fallback);
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error(fmt::format("cannot write '{}'", path.string()));
  f << text;
}

}  // namespace

int cmd_simulate(const SimulateArgs& args, std::ostream& out, std::ostream& err) {
  Scenario scenario;
  try {
    scenario = resolve_scenario(args.scenario,
                                args.pick_and_place ? pick_and_place_preset() : hover_scenario());
    if (args.seed) scenario.sim.seed = *args.seed;
    scenario.sim.validate();
  } catch (const ScenarioError& e) {
    return report(err, kExitConfig, "config", e.what(), e.path());
  } catch (const std::invalid_argument& e) {
    return report(err, kExitConfig, "config", e.what());
  }

  SimLog log;
  try {
    log = run_scenario(scenario.sim);
  } catch (const SimulationDivergedError& e) {
    return report(err, kExitRuntime, "diverged", e.what());
  }

  const SimSummary summary = summarize(log);
  json j;
  j["duration"] = scenario.sim.duration;
  j["dt"] = scenario.sim.dt;
  j["records"] = log.records.size();
  j["final_position_error"] = summary.final_position_error;
  j["peak_position_error"] = summary.peak_position_error;
  j["peak_attitude_error"] = summary.peak_attitude_error;
  j["convergence_time"] = optional_json(summary.convergence_time);
  if (!log.records.empty()) {
    j["initial_mass"] = log.records.front().mass;
    j["final_mass"] = log.records.back().mass;
  }

  try {
    std::filesystem::create_directories(args.out);
    if (args.csv && scenario.logging.csv) write_file(args.out / "simlog.csv", to_csv(log));
    write_file(args.out / "summary.json", j.dump(2) + "\n");
  } catch (const std::exception& e) {
    return report(err, kExitRuntime, "io", e.what());
  }

  fmt::print(out, "simulated {:.3f} s ({} records)\n", scenario.sim.duration, log.records.size());
  fmt::print(out, "final |e_p| {:.6f} m, peak |e_p| {:.4f} m, peak |e_R| {:.4f}\n",
             summary.final_position_error, summary.peak_position_error,
             summary.peak_attitude_error);
  if (summary.convergence_time) {
    fmt::print(out, "converged (|e_p| < 0.05 m) at t = {:.3f} s\n", *summary.convergence_time);
  } else {
    fmt::print(out, "did not converge below 0.05 m\n");
  }
  fmt::print(out, "wrote {}\n", args.out.string());
  return kExitOk;
}

int cmd_serve(const ServeArgs& args, const std::atomic<bool>& stop, std::ostream& out,
              std::ostream& err) {
  ServeOptions options;
  try {
    options.scenario = resolve_scenario(args.scenario, hover_scenario());
    auto& b = options.scenario.bridge;
    if (args.port) b.port = *args.port;
    if (args.delay) b.delay = *args.delay;
    if (args.jitter) b.jitter = *args.jitter;
    if (args.seed) {
      options.scenario.sim.seed = *args.seed;
      b.delay_seed = *args.seed;
    }
    if (args.capture) options.scenario.logging.capture = *args.capture;
    b.validate();
    options.scenario.sim.validate();
  } catch (const ScenarioError& e) {
    return report(err, kExitConfig, "config", e.what(), e.path());
  } catch (const std::invalid_argument& e) {
    return report(err, kExitConfig, "config", e.what());
  }
  options.realtime = args.realtime;
  options.duration = args.duration;
  if (options.scenario.logging.capture) options.capture_dir = args.out.value_or("out");

  try {
    ServeSession session(std::move(options));
    session.start();
    fmt::print(out, "serving on ws://{}:{}\n", session.host(), session.port());
    out.flush();
    session.wait(stop);
    session.stop();
    const auto stats = session.stats();
    fmt::print(out, "steps {}, frames {}, commands {}, snapshot drops {}, overruns {}\n",
               stats.steps, stats.frames_published, stats.commands_applied, stats.snapshot_drops,
               stats.overruns);
    if (auto failure = session.failure()) return report(err, kExitRuntime, "diverged", *failure);
  } catch (const bridge::PortInUseError& e) {
    return report(err, kExitRuntime, "port_in_use", e.what());
  } catch (const std::exception& e) {
    return report(err, kExitRuntime, "runtime", e.what());
  }
  return kExitOk;
}

int cmd_latency_report(const LatencyReportArgs& args, std::ostream& out, std::ostream& err) {
  std::vector<bridge::BridgeFrame> robot, twin;
  try {
    robot = bridge::read_capture(args.robot_capture);
    twin = bridge::read_capture(args.avatar_capture);
  } catch (const bridge::CaptureError& e) {
    return report(err, kExitConfig, "capture", e.what());
  }

  avatar::FidelityResult result;
  try {
    result = avatar::fidelity_report(robot, twin);
  } catch (const bridge::InsufficientExcitationError& e) {
    return report(err, kExitEstimator, "insufficient_excitation", e.what());
  }
  const auto& r = result.report;

  fmt::print(out, "cross-correlation delay  {:.4f} s\n", r.delay);
  if (r.stamp_mean) {
    fmt::print(out, "stamp latency mean/p95   {:.4f} / {:.4f} s\n", *r.stamp_mean, *r.stamp_p95);
    fmt::print(out, "estimator disagreement   {:.4f} s\n", *r.disagreement);
  }
  fmt::print(out, "tracking error mean/max  {:.4f} / {:.4f} m\n", r.mean_error, r.max_error);
  fmt::print(out, "lost frames              {}\n", r.lost);
  fmt::print(out, "staleness                {:.2f} %\n", 100.0 * r.staleness_fraction);

  if (args.out) {
    try {
      std::filesystem::create_directories(*args.out);
      std::ofstream csv(*args.out / "paired_trace.csv");
      avatar::write_paired_csv(csv, result.paired);
      write_file(*args.out / "fidelity.json", avatar::to_json(r) + "\n");
    } catch (const std::exception& e) {
      return report(err, kExitRuntime, "io", e.what());
    }
    fmt::print(out, "wrote {}\n", args.out->string());
  }
  return kExitOk;
}

int cmd_avatar(const AvatarArgs& args, const std::atomic<bool>& stop, std::ostream& out,
               std::ostream& err) {
  try {
    avatar::AvatarClient client(args.capture);
    client.connect(args.host, args.port);
    fmt::print(out, "connected to ws://{}:{} (clock offset {:.6f} s)\n", args.host, args.port,
               client.clock_offset());
    out.flush();
    const auto start = std::chrono::steady_clock::now();
    while (!stop.load() && client.connected()) {
      if (args.duration && std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                                   .count() >= *args.duration) {
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    }
    client.close();
    const auto c = client.twin().counters();
    fmt::print(out, "received {}, applied {}, dropped {}, rejected {}\n", c.received, c.applied,
               c.dropped, c.rejected);
  } catch (const bridge::ConnectError& e) {
    return report(err, kExitRuntime, "connect", e.what());
  } catch (const std::exception& e) {
    return report(err, kExitRuntime, "runtime", e.what());
  }
  return kExitOk;
}

}  // namespace twinlift::teleop
