#include "twinlift/teleop/scenario.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace twinlift::teleop {

namespace {

using nlohmann::json;

// A JSON node together with its key path, for error messages.
class Node {
 public:
  Node(const json& value, std::string path) : value_(value), path_(std::move(path)) {}

  const std::string& path() const { return path_; }
  const json& raw() const { return value_; }

  [[noreturn]] void fail(const std::string& message) const { throw ScenarioError(path_, message); }

  void expect_object(std::initializer_list<std::string_view> allowed) const {
    if (!value_.is_object()) fail("expected an object");
    for (const auto& [key, _] : value_.items()) {
      bool known = false;
      for (auto a : allowed) known = known || a == key;
      if (!known) throw ScenarioError(child_path(key), "unknown key");
    }
  }

  bool has(std::string_view key) const { return value_.contains(std::string(key)); }

  Node operator[](std::string_view key) const {
    return {value_.at(std::string(key)), child_path(key)};
  }

  double number() const {
    if (!value_.is_number()) fail("expected a number");
    const double v = value_.get<double>();
    if (!std::isfinite(v)) fail("expected a finite number");
    return v;
  }

  bool boolean() const {
    if (!value_.is_boolean()) fail("expected true or false");
    return value_.get<bool>();
  }

  std::string string() const {
    if (!value_.is_string()) fail("expected a string");
    return value_.get<std::string>();
  }

  std::uint64_t count() const {
    if (!value_.is_number_unsigned()) fail("expected a non-negative integer");
    return value_.get<std::uint64_t>();
  }

  Vec3 vec3() const {
    if (!value_.is_array() || value_.size() != 3) fail("expected an array of 3 numbers");
    Vec3 out;
    for (int i = 0; i < 3; ++i) out[i] = Node(value_[i], fmt::format("{}[{}]", path_, i)).number();
    return out;
  }

  std::vector<Node> elements() const {
    if (!value_.is_array()) fail("expected an array");
    std::vector<Node> out;
    for (std::size_t i = 0; i < value_.size(); ++i) {
      out.emplace_back(value_[i], fmt::format("{}[{}]", path_, i));
    }
    return out;
  }

 private:
  std::string child_path(std::string_view key) const {
    return path_.empty() ? std::string(key) : fmt::format("{}.{}", path_, key);
  }

  const json& value_;
  std::string path_;
};

template <typename T, typename F>
void read_if(const Node& n, std::string_view key, T& target, F get) {
  if (n.has(key)) target = get(n[key]);
}

const auto as_number = [](const Node& n) { return n.number(); };
const auto as_vec3 = [](const Node& n) { return n.vec3(); };
const auto as_bool = [](const Node& n) { return n.boolean(); };

void read_sim(const Node& n, SimConfig& c) {
  n.expect_object({"dt", "duration", "seed", "log_decimation", "stepping"});
  read_if(n, "dt", c.dt, as_number);
  read_if(n, "duration", c.duration, as_number);
  if (n.has("seed")) c.seed = n["seed"].count();
  if (n.has("log_decimation")) {
    const auto d = n["log_decimation"].count();
    if (d < 1 || d > 1000000) n["log_decimation"].fail("must be between 1 and 1000000");
    c.log_decimation = static_cast<int>(d);
  }
  if (n.has("stepping")) {
    const auto s = n["stepping"].string();
    if (s == "reproject") {
      c.stepping = AttitudeStepping::kReproject;
    } else if (s == "exponential_map") {
      c.stepping = AttitudeStepping::kExponentialMap;
    } else {
      n["stepping"].fail("expected \"reproject\" or \"exponential_map\"");
    }
  }
}

void read_params(const Node& n, VehicleParams& p) {
  n.expect_object({"mass_base", "inertia", "gravity", "arm_link_masses", "arm_link_lengths",
                   "arm_mount_offset", "payload_mass", "joint_pd_gains", "force_limit",
                   "moment_limit"});
  read_if(n, "mass_base", p.mass_base, as_number);
  if (n.has("inertia")) p.inertia = n["inertia"].vec3().asDiagonal();
  read_if(n, "gravity", p.gravity, as_number);
  read_if(n, "arm_link_masses", p.arm_link_masses, as_vec3);
  read_if(n, "arm_link_lengths", p.arm_link_lengths, as_vec3);
  read_if(n, "arm_mount_offset", p.arm_mount_offset, as_vec3);
  read_if(n, "payload_mass", p.payload_mass, as_number);
  read_if(n, "force_limit", p.force_limit, as_number);
  read_if(n, "moment_limit", p.moment_limit, as_number);
  if (n.has("joint_pd_gains")) {
    const auto joints = n["joint_pd_gains"].elements();
    if (joints.size() != 3) n["joint_pd_gains"].fail("expected 3 joints");
    for (std::size_t j = 0; j < 3; ++j) {
      joints[j].expect_object({"kp", "kd"});
      read_if(joints[j], "kp", p.joint_pd_gains[j].kp, as_number);
      read_if(joints[j], "kd", p.joint_pd_gains[j].kd, as_number);
    }
  }
}

void read_gains(const Node& n, ControlGains& g) {
  n.expect_object({"k_p", "k_v", "k_r", "k_omega", "thrust_limit_ratio"});
  read_if(n, "k_p", g.k_p, as_vec3);
  read_if(n, "k_v", g.k_v, as_vec3);
  read_if(n, "k_omega", g.k_omega, as_vec3);
  read_if(n, "thrust_limit_ratio", g.thrust_limit_ratio, as_number);
  if (n.has("k_r")) {
    const Node k = n["k_r"];
    g.k_r = k.raw().is_array() ? k.vec3() : Vec3::Constant(k.number());
  }
}

void read_initial(const Node& n, VehicleState& s) {
  n.expect_object(
      {"position", "velocity", "euler", "body_rates", "arm_angles", "payload_attached"});
  read_if(n, "position", s.position, as_vec3);
  read_if(n, "velocity", s.velocity, as_vec3);
  read_if(n, "body_rates", s.body_rates, as_vec3);
  read_if(n, "arm_angles", s.arm_angles, as_vec3);
  read_if(n, "payload_attached", s.payload_attached, as_bool);
  if (n.has("euler")) {
    const Vec3 e = n["euler"].vec3();
    s.attitude = rotation_from_euler({e.x(), e.y(), e.z()});
  }
}

void read_setpoint(const Node& n, ControlSetpoint& sp) {
  n.expect_object({"position", "velocity", "accel", "yaw", "rates", "arm"});
  read_if(n, "position", sp.position_d, as_vec3);
  read_if(n, "velocity", sp.velocity_d, as_vec3);
  read_if(n, "accel", sp.accel_d, as_vec3);
  read_if(n, "yaw", sp.yaw_d, as_number);
  read_if(n, "rates", sp.rates_d, as_vec3);
  read_if(n, "arm", sp.arm_commands, as_vec3);
}

void read_disturbance(const Node& n, DisturbanceSettings& d) {
  n.expect_object({"model", "force_amplitude", "moment_amplitude", "hold_time"});
  if (n.has("model")) {
    const auto m = n["model"].string();
    if (m == "quasi_static") {
      d.model = CouplingModel::kQuasiStatic;
    } else if (m == "random") {
      d.model = CouplingModel::kSeededRandom;
    } else if (m == "none") {
      d.model = CouplingModel::kNone;
    } else {
      n["model"].fail("expected \"quasi_static\", \"random\" or \"none\"");
    }
  }
  read_if(n, "force_amplitude", d.force_amplitude, as_number);
  read_if(n, "moment_amplitude", d.moment_amplitude, as_number);
  read_if(n, "hold_time", d.hold_time, as_number);
}

Event read_event(const Node& n) {
  n.expect_object({"time", "setpoint", "arm", "attach", "release", "pulse"});
  if (!n.has("time")) n.fail("missing key \"time\"");
  Event e;
  e.time = n["time"].number();

  int actions = 0;
  if (n.has("setpoint")) {
    ++actions;
    const Node s = n["setpoint"];
    s.expect_object({"position", "velocity", "accel", "yaw", "rates"});
    SetpointChange c;
    if (s.has("position")) c.position = s["position"].vec3();
    if (s.has("velocity")) c.velocity = s["velocity"].vec3();
    if (s.has("accel")) c.accel = s["accel"].vec3();
    if (s.has("yaw")) c.yaw = s["yaw"].number();
    if (s.has("rates")) c.rates = s["rates"].vec3();
    e.action = c;
  }
  if (n.has("arm")) {
    ++actions;
    e.action = ArmCommand{n["arm"].vec3()};
  }
  if (n.has("attach")) {
    ++actions;
    if (!n["attach"].boolean()) n["attach"].fail("must be true");
    e.action = PayloadAttach{};
  }
  if (n.has("release")) {
    ++actions;
    if (!n["release"].boolean()) n["release"].fail("must be true");
    e.action = PayloadRelease{};
  }
  if (n.has("pulse")) {
    ++actions;
    const Node p = n["pulse"];
    p.expect_object({"force", "moment", "duration"});
    DisturbancePulse pulse;
    read_if(p, "force", pulse.force, as_vec3);
    read_if(p, "moment", pulse.moment, as_vec3);
    read_if(p, "duration", pulse.duration, as_number);
    e.action = pulse;
  }
  if (actions != 1) n.fail("an event needs exactly one of setpoint, arm, attach, release, pulse");
  return e;
}

void read_bridge(const Node& n, BridgeSettings& b) {
  n.expect_object({"host", "port", "publish_rate", "delay", "jitter", "delay_seed",
                   "queue_capacity", "metrics_period"});
  if (n.has("host")) b.host = n["host"].string();
  if (n.has("port")) {
    const auto p = n["port"].count();
    if (p > 65535) n["port"].fail("must be at most 65535");
    b.port = static_cast<std::uint16_t>(p);
  }
  read_if(n, "publish_rate", b.publish_rate, as_number);
  read_if(n, "delay", b.delay, as_number);
  read_if(n, "jitter", b.jitter, as_number);
  if (n.has("delay_seed")) b.delay_seed = n["delay_seed"].count();
  if (n.has("queue_capacity")) b.queue_capacity = n["queue_capacity"].count();
  read_if(n, "metrics_period", b.metrics_period, as_number);
}

void read_logging(const Node& n, LoggingSettings& l) {
  n.expect_object({"csv", "capture"});
  read_if(n, "csv", l.csv, as_bool);
  read_if(n, "capture", l.capture, as_bool);
}

// Maps the section validators' messages onto the section path.
template <typename F>
void validate_section(const char* path, F check) {
  try {
    check();
  } catch (const std::invalid_argument& e) {
    throw ScenarioError(path, e.what());
  }
}

}  // namespace

ScenarioError::ScenarioError(std::string path, const std::string& message)
    : std::runtime_error(path.empty() ? message : fmt::format("{}: {}", path, message)),
      path_(std::move(path)) {}

void BridgeSettings::validate() const {
  const auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(what);
  };
  require(!host.empty(), "host must not be empty");
  require(std::isfinite(publish_rate) && publish_rate > 0.0 && publish_rate <= 1000.0,
          "publish_rate must be in (0, 1000] Hz");
  require(std::isfinite(delay) && delay >= 0.0, "delay must be non-negative");
  require(std::isfinite(jitter) && jitter >= 0.0, "jitter must be non-negative");
  require(queue_capacity >= 1, "queue_capacity must be at least 1");
  require(std::isfinite(metrics_period) && metrics_period > 0.0, "metrics_period must be positive");
}

Scenario parse_scenario(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ScenarioError("", fmt::format("not valid JSON: {}", e.what()));
  }

  Scenario s;
  const Node root(doc, "");
  root.expect_object({"sim", "params", "gains", "initial", "setpoint", "disturbance", "events",
                      "bridge", "logging"});
  if (root.has("sim")) read_sim(root["sim"], s.sim);
  if (root.has("params")) read_params(root["params"], s.sim.params);
  if (root.has("gains")) read_gains(root["gains"], s.sim.gains);
  if (root.has("initial")) read_initial(root["initial"], s.sim.initial_state);
  if (root.has("setpoint")) read_setpoint(root["setpoint"], s.sim.initial_setpoint);
  if (root.has("disturbance")) read_disturbance(root["disturbance"], s.sim.disturbance);
  if (root.has("events")) {
    for (const Node& e : root["events"].elements()) s.sim.events.push_back(read_event(e));
  }
  if (root.has("bridge")) read_bridge(root["bridge"], s.bridge);
  if (root.has("logging")) read_logging(root["logging"], s.logging);

  validate_section("params", [&] { s.sim.params.validate(); });
  validate_section("gains", [&] { s.sim.gains.validate(); });
  validate_section("sim", [&] { s.sim.validate(); });
  validate_section("bridge", [&] { s.bridge.validate(); });
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError("", fmt::format("cannot read scenario file '{}'", path.string()));
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

Scenario hover_scenario() {
  Scenario s;
  s.sim.duration = 12.0;
  s.sim.initial_setpoint.position_d = Vec3(0.0, 0.0, -1.0);
  s.sim.initial_state.position = Vec3(1.0, 1.0, 0.0);
  return s;
}

Scenario pick_and_place_preset() {
  Scenario s;
  s.sim = pick_and_place_scenario();
  return s;
}

}  // namespace twinlift::teleop
