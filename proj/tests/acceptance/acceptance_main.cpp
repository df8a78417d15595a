// One PASS/FAIL line per acceptance criterion. Exit status is the number of
// failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>

#include "random_frames.hpp"
#include "tumbling_oracle.hpp"
#include "twinlift/avatar/client.hpp"
#include "twinlift/avatar/fidelity.hpp"
#include "twinlift/bridge/broker.hpp"
#include "twinlift/bridge/capture.hpp"
#include "twinlift/bridge/frame.hpp"
#include "twinlift/bridge/ws_client.hpp"
#include "twinlift/bridge/ws_server.hpp"
#include "twinlift/controller.hpp"
#include "twinlift/dynamics.hpp"
#include "twinlift/se3.hpp"
#include "twinlift/simulator.hpp"
#include "twinlift/teleop/scenario.hpp"
#include "twinlift/teleop/serve.hpp"

namespace {

using namespace twinlift;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

struct Outcome {
  bool pass{true};
  std::vector<std::string> notes;

  void require(bool ok, const std::string& note) {
    pass = pass && ok;
    notes.push_back(fmt::format("{}{}", ok ? "" : "FAILED ", note));
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------------------

Outcome hover_equilibrium() {
  Outcome o;
  VehicleParams p;
  VehicleState s;
  s.position = {0.5, -1.0, -2.0};
  ControlInputs in;
  in.thrust = total_mass(p, false) * p.gravity;
  in.arm_commands = s.arm_angles;
  const StateDerivative d = derivatives(s, in, p);
  const double worst = std::max({d.velocity.norm(), d.acceleration.norm(), d.attitude_rate.norm(),
                                 d.angular_acceleration.norm(), d.joint_rates.norm(),
                                 d.joint_accelerations.norm()});
  o.require(worst <= 1e-12, fmt::format("max |derivative| {:.3g} (limit 1e-12)", worst));
  return o;
}

Outcome integrator_order() {
  Outcome o;
  const testing_oracle::Tumble tumble;
  std::vector<double> errors;
  for (double dt : {0.008, 0.004, 0.002, 0.001}) {
    errors.push_back(testing_oracle::free_fall_error(tumble, dt, AttitudeStepping::kReproject));
  }
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
    const double ratio = errors[i] / errors[i + 1];
    o.require(std::abs(ratio - 16.0) <= 0.2 * 16.0,
              fmt::format("error ratio {:.2f} (16 +/- 20%)", ratio));
  }
  return o;
}

SimConfig offset_hover(double duration) {
  SimConfig c;
  c.duration = duration;
  c.initial_setpoint.position_d = Vec3(0.0, 0.0, -1.0);
  c.initial_state.position = Vec3(1.0, 1.0, 0.0);
  return c;
}

Outcome controller_convergence() {
  Outcome o;
  const auto start = Clock::now();

  const SimLog log = run_scenario(offset_hover(12.0));
  const SimSummary summary = summarize(log);
  o.require(summary.convergence_time && *summary.convergence_time <= 10.0,
            summary.convergence_time
                ? fmt::format("|e_p| < 0.05 m from t = {:.2f} s", *summary.convergence_time)
                : std::string("|e_p| never settles below 0.05 m"));
  const double final_er = log.records.back().attitude_errors.e_r.norm();
  o.require(final_er < 0.01, fmt::format("final |e_R| {:.2e}", final_er));

  SimConfig disturbed = offset_hover(20.0);
  disturbed.initial_state.position = disturbed.initial_setpoint.position_d;
  disturbed.disturbance.model = CouplingModel::kSeededRandom;
  disturbed.seed = 11;
  double peak = 0.0;
  for (const SimRecord& r : run_scenario(disturbed).records) {
    peak = std::max(peak, r.position_errors.e_p.norm());
  }
  o.require(peak < 0.15, fmt::format("peak |e_p| under seeded arm disturbance {:.4f} m", peak));

  const double runtime = seconds_since(start);
  o.require(runtime < 5.0, fmt::format("runtime {:.2f} s", runtime));
  return o;
}

Outcome pick_and_place() {
  Outcome o;
  const auto start = Clock::now();
  SimConfig c = pick_and_place_scenario();
  c.log_decimation = 1;
  const SimLog log = run_scenario(c);

  double attach = -1.0, release = -1.0;
  for (const Event& e : c.events) {
    if (std::holds_alternative<PayloadAttach>(e.action)) attach = e.time;
    if (std::holds_alternative<PayloadRelease>(e.action)) release = e.time;
  }
  double mass_before = 0.0, mass_after = 0.0, mass_end = 0.0;
  bool attached_seen = false, released_seen = false;
  double last_violation = attach;
  double peak_dz = 0.0;
  for (const SimRecord& r : log.records) {
    if (r.t < attach) mass_before = r.mass;
    if (r.t > attach && mass_after == 0.0) mass_after = r.mass;
    if (r.t >= attach && r.t < attach + 5.0) {
      peak_dz = std::max(peak_dz, std::abs(r.position_errors.e_p.z()));
    }
    if (r.t >= attach && r.t < attach + 5.0 && std::abs(r.position_errors.e_p.z()) >= 0.05) {
      last_violation = r.t;
    }
    attached_seen = attached_seen || r.state.payload_attached;
    released_seen = released_seen || (attached_seen && r.t > release && !r.state.payload_attached);
    mass_end = r.mass;
  }
  const double step = mass_after - mass_before;
  o.require(std::abs(step - 0.160) < 1e-12,
            fmt::format("mass {:.3f} -> {:.3f} kg at attach", mass_before, mass_after));
  const double settle = last_violation - attach;
  o.require(settle < 5.0, fmt::format("peak altitude deviation {:.4f} m, < 0.05 m from {:.2f} s after attach",
                        peak_dz, settle));
  o.require(attached_seen && released_seen && std::abs(mass_end - mass_before) < 1e-12,
            "attach, transport, release completed");
  const SimSummary summary = summarize(log);
  o.require(summary.final_position_error < 0.05,
            fmt::format("final |e_p| {:.4f} m", summary.final_position_error));
  const double runtime = seconds_since(start);
  o.require(runtime < 10.0, fmt::format("runtime {:.2f} s", runtime));
  return o;
}

// ---------------------------------------------------------------------------

Outcome delay_reproduction(const fs::path& work) {
  Outcome o;
  const auto start = Clock::now();
  fs::remove_all(work);
  fs::create_directories(work);

  teleop::ServeOptions options;
  options.scenario =
      teleop::load_scenario(fs::path(TWINLIFT_SOURCE_DIR) / "scenarios" / "teleop_demo.json");
  options.scenario.bridge.port = 0;
  options.scenario.bridge.delay = 0.5;
  options.scenario.bridge.jitter = 0.0;
  options.duration = 30.0;
  options.capture_dir = work;

  {
    teleop::ServeSession session(std::move(options));
    session.start();
    avatar::AvatarClient client(work / "avatar_capture.jsonl");
    client.connect("127.0.0.1", session.port());
    while (!session.finished()) std::this_thread::sleep_for(50ms);
    session.stop();
    client.close();
  }

  const auto robot = bridge::read_capture(work / "robot_capture.jsonl");
  const auto twin = bridge::read_capture(work / "avatar_capture.jsonl");
  const auto result = avatar::fidelity_report(robot, twin);
  const auto& r = result.report;
  o.require(std::abs(r.delay - 0.5) <= 0.05, fmt::format("cross-correlation delay {:.4f} s", r.delay));
  if (r.stamp_mean) {
    o.require(std::abs(*r.stamp_mean - 0.5) <= 0.05,
              fmt::format("stamp latency mean {:.4f} s", *r.stamp_mean));
  } else {
    o.require(false, "no stamp latency samples");
  }
  o.require(r.lost == 0, fmt::format("{} frames lost", r.lost));
  o.require(r.mean_error < 0.02, fmt::format("aligned mean residual {:.5f} m", r.mean_error));
  o.notes.push_back(fmt::format("session {:.1f} s", seconds_since(start)));
  return o;
}

// ---------------------------------------------------------------------------

Outcome protocol() {
  Outcome o;
  const auto start = Clock::now();

  testing_support::RandomFrames gen(20240611);
  int failures = 0;
  const int round_trips = 20000;
  for (int i = 0; i < round_trips; ++i) {
    const bridge::BridgeFrame f = gen.frame();
    const std::string bytes = bridge::encode_frame(f);
    const bridge::BridgeFrame back = bridge::decode_frame(bytes);
    if (!(back == f) || bridge::encode_frame(back) != bytes) ++failures;
  }
  o.require(failures == 0, fmt::format("{} randomized round trips, {} failures", round_trips, failures));

  std::ifstream golden(fs::path(TWINLIFT_GOLDEN_DIR) / "ping_frame.json");
  std::string expected;
  std::getline(golden, expected);
  const std::string ping = bridge::encode_frame(
      {bridge::Op::kPing, "", 0, 1.5, std::monostate{}});
  o.require(ping == expected, "golden ping frame byte-equal");

  // 4 clients, each publishing 10^4 frames on its own topic and subscribed to
  // all four topics.
  const int kClients = 4;
  const std::uint64_t kFrames = 10000;
  const std::vector<std::string> topics{std::string(bridge::kServoTopic),
                                        std::string(bridge::kDataTopic),
                                        std::string(bridge::kTeleopTopic),
                                        std::string(bridge::kMetricsTopic)};
  const auto payload_for = [](int topic, std::uint64_t i) -> bridge::Payload {
    const double x = static_cast<double>(i);
    switch (topic) {
      case 0: return bridge::PoseMessage{{x, 0, 0}, {0, 0, 0}, {0, 0, 0}};
      case 1: return bridge::ArmMessage{{x, 0, 0}, false};
      case 2: return bridge::CommandMessage{bridge::NudgeCommand{{x, 0, 0}, 0}};
      default: return bridge::MetricsMessage{};
    }
  };

  bridge::SessionClock clock;
  bridge::Broker broker;
  bridge::WsServer server(broker, clock, bridge::ServerOptions{"127.0.0.1", 0});
  server.start();

  struct Receiver {
    std::mutex m;
    std::condition_variable cv;
    std::map<std::string, std::uint64_t> next;  // expected seq per topic
    std::uint64_t inversions{0};
    std::uint64_t received{0};
  };
  std::vector<std::unique_ptr<Receiver>> receivers;
  std::vector<std::unique_ptr<bridge::WsClient>> clients;
  for (int c = 0; c < kClients; ++c) {
    receivers.push_back(std::make_unique<Receiver>());
    clients.push_back(std::make_unique<bridge::WsClient>());
    Receiver* rx = receivers.back().get();
    clients.back()->on_frame([rx](const bridge::BridgeFrame& f, double) {
      if (f.op != bridge::Op::kPublish) return;
      std::lock_guard lock(rx->m);
      auto& next = rx->next[f.topic];
      if (f.seq != next) ++rx->inversions;
      next = f.seq + 1;
      ++rx->received;
      rx->cv.notify_all();
    });
    clients.back()->connect("127.0.0.1", server.port());
    for (const auto& t : topics) clients.back()->subscribe(t);
    clients.back()->advertise(topics[c]);
  }
  // a ping round trip guarantees the subscriptions are in place
  for (auto& c : clients) c->ping(0.0);
  std::this_thread::sleep_for(200ms);

  std::vector<std::thread> publishers;
  for (int c = 0; c < kClients; ++c) {
    publishers.emplace_back([&, c] {
      for (std::uint64_t i = 0; i < kFrames; ++i) clients[c]->publish(topics[c], payload_for(c, i));
    });
  }
  for (auto& t : publishers) t.join();

  const std::uint64_t expected_each = kFrames * kClients;
  std::uint64_t inversions = 0, losses = 0;
  for (auto& rx : receivers) {
    std::unique_lock lock(rx->m);
    rx->cv.wait_for(lock, 20s, [&] { return rx->received >= expected_each; });
    inversions += rx->inversions;
    losses += expected_each - std::min(expected_each, rx->received);
  }
  for (auto& c : clients) c->close();
  server.stop();
  o.require(inversions == 0 && losses == 0,
            fmt::format("{} clients x {} frames over 4 topics: {} inversions, {} losses", kClients,
                        kFrames, inversions, losses));
  const auto counters = broker.counters();
  o.require(counters.rejected == 0, fmt::format("{} publishes rejected", counters.rejected));

  const double runtime = seconds_since(start);
  o.require(runtime < 30.0, fmt::format("runtime {:.2f} s", runtime));
  return o;
}

// ---------------------------------------------------------------------------

Outcome se3_suite() {
  Outcome o;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3.0, 3.0);

  double hat_defect = 0.0, cross_defect = 0.0, vee_defect = 0.0, ortho = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Vec3 a(u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng));
    const Mat3 h = hat(a);
    hat_defect = std::max(hat_defect, (h + h.transpose()).cwiseAbs().maxCoeff());
    cross_defect = std::max(cross_defect, (h * b - a.cross(b)).cwiseAbs().maxCoeff());
    vee_defect = std::max(vee_defect, (vee(h) - a).cwiseAbs().maxCoeff());
    const Mat3 r = rotation_from_euler({u(rng) / 2.0, u(rng) / 2.0, u(rng)});
    ortho = std::max(ortho, orthonormality_defect(r));
    ortho = std::max(ortho, std::abs(r.determinant() - 1.0));
  }
  o.require(hat_defect == 0.0 && vee_defect == 0.0 && cross_defect < 1e-14,
            fmt::format("hat skew/vee inverse exact, cross product within {:.1e}", cross_defect));
  o.require(ortho < 1e-12, fmt::format("Euler rotation orthonormality defect {:.1e}", ortho));

  const double theta = 0.3;
  Mat3 rz;
  rz << std::cos(theta), -std::sin(theta), 0, std::sin(theta), std::cos(theta), 0, 0, 0, 1;
  const AttitudeErrors e = attitude_errors(rz, Vec3::Zero(), Mat3::Identity(), Vec3::Zero());
  const bool planar = std::abs(e.e_r.x()) < 1e-15 && std::abs(e.e_r.y()) < 1e-15;
  o.require(planar && std::abs(e.e_r.z() - std::sin(theta)) < 1e-9,
            fmt::format("e_R for yaw 0.3 = (0, 0, {:.11f}), sin(0.3) = {:.11f}", e.e_r.z(),
                        std::sin(theta)));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = fs::temp_directory_path() / "twinlift_acceptance";
  if (argc > 1) work = argv[1];

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"hover-equilibrium", hover_equilibrium},
      {"integrator-order", integrator_order},
      {"controller-convergence", controller_convergence},
      {"pick-and-place", pick_and_place},
      {"delay-reproduction", [&] { return delay_reproduction(work / "delay"); }},
      {"protocol", protocol},
      {"se3-suite", se3_suite},
  };

  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.require(false, fmt::format("exception: {}", e.what()));
    }
    std::string notes;
    for (const auto& n : o.notes) notes += (notes.empty() ? "" : "; ") + n;
    fmt::print("{} {}: {}\n", o.pass ? "PASS" : "FAIL", name, notes);
    std::fflush(stdout);
    failures += o.pass ? 0 : 1;
  }
  return failures;
}
