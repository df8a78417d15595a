#include "twinlift/bridge/frame.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iterator>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace twinlift::bridge {

namespace {

using nlohmann::json;

constexpr std::array<std::string_view, 6> kOpNames = {"advertise", "subscribe", "publish",
                                                       "unsubscribe", "ping", "pong"};

// ---------------------------------------------------------------- encoding

class Writer {
 public:
  explicit Writer(std::string& out) : out_(out) {}

  void number(double v) {
    if (!std::isfinite(v)) throw EncodeError("encode_frame: non-finite number");
    out_ += format_number(v);
  }
  void integer(std::uint64_t v) { fmt::format_to(std::back_inserter(out_), "{}", v); }
  void boolean(bool v) { out_ += v ? "true" : "false"; }
  void string(std::string_view s) { out_ += json(s).dump(); }
  void triple(const Triple& t) {
    out_ += '[';
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (i) out_ += ',';
      number(t[i]);
    }
    out_ += ']';
  }

  // Emits `"name":` with the separator for every key after the first.
  void key(std::string_view name) {
    if (!first_) out_ += ',';
    first_ = false;
    out_ += '"';
    out_ += name;
    out_ += "\":";
  }
  void open() {
    out_ += '{';
    first_ = true;
  }
  void close() {
    out_ += '}';
    first_ = false;
  }

 private:
  std::string& out_;
  bool first_{true};
};

void write_command(Writer& w, const CommandMessage& cmd) {
  w.open();
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        w.key("kind");
        if constexpr (std::is_same_v<T, NudgeCommand>) {
          w.string("nudge");
          w.key("delta");
          w.triple(c.delta);
          w.key("yaw_delta");
          w.number(c.yaw_delta);
        } else if constexpr (std::is_same_v<T, SetpointCommand>) {
          w.string("setpoint");
          w.key("position");
          w.triple(c.position);
          w.key("yaw");
          w.number(c.yaw);
        } else if constexpr (std::is_same_v<T, ArmTargetCommand>) {
          w.string("arm");
          w.key("joints");
          w.triple(c.joints);
        } else if constexpr (std::is_same_v<T, GraspCommand>) {
          w.string("grasp");
        } else {
          w.string("release");
        }
      },
      cmd);
  w.close();
}

void write_payload(Writer& w, std::string& out, const Payload& msg) {
  std::visit(
      [&](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          out += "null";
        } else if constexpr (std::is_same_v<T, PoseMessage>) {
          w.open();
          w.key("position");
          w.triple(m.position);
          w.key("euler");
          w.triple(m.euler);
          w.key("velocity");
          w.triple(m.velocity);
          w.close();
        } else if constexpr (std::is_same_v<T, ArmMessage>) {
          w.open();
          w.key("joints");
          w.triple(m.joints);
          w.key("payload_attached");
          w.boolean(m.payload_attached);
          w.close();
        } else if constexpr (std::is_same_v<T, CommandMessage>) {
          write_command(w, m);
        } else if constexpr (std::is_same_v<T, MetricsMessage>) {
          w.open();
          w.key("clients");
          w.integer(m.clients);
          w.key("delivered");
          w.integer(m.delivered);
          w.key("dropped");
          w.integer(m.dropped);
          w.key("injected_delay");
          w.number(m.injected_delay);
          w.key("injected_jitter");
          w.number(m.injected_jitter);
          w.key("one_way_mean");
          w.number(m.one_way_mean);
          w.key("one_way_p95");
          w.number(m.one_way_p95);
          w.key("transport_mean");
          w.number(m.transport_mean);
          w.key("transport_p95");
          w.number(m.transport_p95);
          w.key("clock_sync_limited");
          w.boolean(m.clock_sync_limited);
          w.close();
        } else {
          w.open();
          w.key("session_epoch");
          w.number(m.session_epoch);
          w.close();
        }
      },
      msg);
}

// ---------------------------------------------------------------- decoding

[[noreturn]] void mismatch(const std::string& what) { throw SchemaMismatchError(what); }

void expect_keys(const json& obj, std::initializer_list<std::string_view> keys,
                 std::string_view where) {
  if (!obj.is_object()) mismatch(fmt::format("{}: expected an object", where));
  for (const auto& [k, _] : obj.items()) {
    if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
      mismatch(fmt::format("{}: unexpected key '{}'", where, k));
    }
  }
  for (auto k : keys) {
    if (!obj.contains(std::string(k))) mismatch(fmt::format("{}: missing key '{}'", where, k));
  }
}

double get_number(const json& obj, const char* key) {
  const json& v = obj.at(key);
  if (!v.is_number()) mismatch(fmt::format("'{}' must be a number", key));
  return v.get<double>();
}

std::uint64_t get_count(const json& obj, const char* key) {
  const json& v = obj.at(key);
  if (!v.is_number_unsigned()) mismatch(fmt::format("'{}' must be a non-negative integer", key));
  return v.get<std::uint64_t>();
}

bool get_bool(const json& obj, const char* key) {
  const json& v = obj.at(key);
  if (!v.is_boolean()) mismatch(fmt::format("'{}' must be a boolean", key));
  return v.get<bool>();
}

Triple get_triple(const json& obj, const char* key) {
  const json& v = obj.at(key);
  if (!v.is_array() || v.size() != 3) mismatch(fmt::format("'{}' must be a 3-element array", key));
  Triple t{};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!v[i].is_number()) mismatch(fmt::format("'{}[{}]' must be a number", key, i));
    t[i] = v[i].get<double>();
  }
  return t;
}

CommandMessage read_command(const json& m) {
  if (!m.is_object() || !m.contains("kind") || !m["kind"].is_string()) {
    mismatch("command: missing string 'kind'");
  }
  const auto kind = m["kind"].get<std::string>();
  if (kind == "nudge") {
    expect_keys(m, {"kind", "delta", "yaw_delta"}, "nudge");
    return NudgeCommand{get_triple(m, "delta"), get_number(m, "yaw_delta")};
  }
  if (kind == "setpoint") {
    expect_keys(m, {"kind", "position", "yaw"}, "setpoint");
    return SetpointCommand{get_triple(m, "position"), get_number(m, "yaw")};
  }
  if (kind == "arm") {
    expect_keys(m, {"kind", "joints"}, "arm");
    return ArmTargetCommand{get_triple(m, "joints")};
  }
  if (kind == "grasp") {
    expect_keys(m, {"kind"}, "grasp");
    return GraspCommand{};
  }
  if (kind == "release") {
    expect_keys(m, {"kind"}, "release");
    return ReleaseCommand{};
  }
  mismatch(fmt::format("command: unknown kind '{}'", kind));
}

Payload read_payload(const json& m, PayloadKind kind) {
  switch (kind) {
    case PayloadKind::kNone:
      if (!m.is_null()) mismatch("msg must be null");
      return std::monostate{};
    case PayloadKind::kPose:
      expect_keys(m, {"position", "euler", "velocity"}, "pose");
      return PoseMessage{get_triple(m, "position"), get_triple(m, "euler"),
                         get_triple(m, "velocity")};
    case PayloadKind::kArm:
      expect_keys(m, {"joints", "payload_attached"}, "arm");
      return ArmMessage{get_triple(m, "joints"), get_bool(m, "payload_attached")};
    case PayloadKind::kCommand:
      return read_command(m);
    case PayloadKind::kMetrics: {
      expect_keys(m,
                  {"clients", "delivered", "dropped", "injected_delay", "injected_jitter",
                   "one_way_mean", "one_way_p95", "transport_mean", "transport_p95",
                   "clock_sync_limited"},
                  "metrics");
      MetricsMessage out;
      out.clients = get_count(m, "clients");
      out.delivered = get_count(m, "delivered");
      out.dropped = get_count(m, "dropped");
      out.injected_delay = get_number(m, "injected_delay");
      out.injected_jitter = get_number(m, "injected_jitter");
      out.one_way_mean = get_number(m, "one_way_mean");
      out.one_way_p95 = get_number(m, "one_way_p95");
      out.transport_mean = get_number(m, "transport_mean");
      out.transport_p95 = get_number(m, "transport_p95");
      out.clock_sync_limited = get_bool(m, "clock_sync_limited");
      return out;
    }
  }
  mismatch("unsupported payload kind");
}

}  // namespace

std::string_view to_string(Op op) { return kOpNames.at(static_cast<std::size_t>(op)); }

std::optional<Op> op_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kOpNames.size(); ++i) {
    if (kOpNames[i] == s) return static_cast<Op>(i);
  }
  return std::nullopt;
}

std::string format_number(double value) {
  // "-0" would parse back as the integer 0 and lose its sign
  if (value == 0.0 && std::signbit(value)) return "-0.0";
  return fmt::format("{:.17g}", value);
}

const TopicRegistry& TopicRegistry::standard() {
  static const TopicRegistry registry({
      {std::string(kServoTopic), PayloadKind::kPose},
      {std::string(kDataTopic), PayloadKind::kArm},
      {std::string(kTeleopTopic), PayloadKind::kCommand},
      {std::string(kMetricsTopic), PayloadKind::kMetrics},
  });
  return registry;
}

TopicRegistry::TopicRegistry(std::vector<Entry> entries) : entries_(std::move(entries)) {}

const TopicRegistry::Entry* TopicRegistry::find(std::string_view topic) const {
  for (const auto& e : entries_) {
    if (e.name == topic) return &e;
  }
  return nullptr;
}

std::string encode_frame(const BridgeFrame& frame) {
  std::string out;
  out.reserve(160);
  Writer w(out);
  w.open();
  w.key("op");
  w.string(to_string(frame.op));
  w.key("topic");
  w.string(frame.topic);
  w.key("seq");
  w.integer(frame.seq);
  w.key("stamp_tx");
  w.number(frame.stamp_tx);
  w.key("msg");
  {
    Writer inner(out);
    write_payload(inner, out, frame.msg);
  }
  w.close();
  return out;
}

BridgeFrame decode_frame(std::string_view bytes, const TopicRegistry& registry) {
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    const std::size_t offset = e.byte > 0 ? e.byte - 1 : 0;
    throw MalformedFrameError(fmt::format("malformed frame at byte {}", offset), offset);
  }

  if (!doc.is_object()) throw SchemaMismatchError("frame must be a JSON object");
  if (!doc.contains("op") || !doc["op"].is_string()) {
    throw SchemaMismatchError("frame: missing string 'op'");
  }
  const auto op_name = doc["op"].get<std::string>();
  const auto op = op_from_string(op_name);
  if (!op) throw UnknownOpError(fmt::format("unknown op '{}'", op_name));

  if (!doc.contains("topic") || !doc["topic"].is_string()) {
    throw SchemaMismatchError("frame: missing string 'topic'");
  }
  BridgeFrame frame;
  frame.op = *op;
  frame.topic = doc["topic"].get<std::string>();

  const bool control = *op == Op::kPing || *op == Op::kPong;
  const TopicRegistry::Entry* entry = nullptr;
  if (!(control && frame.topic.empty())) {
    entry = registry.find(frame.topic);
    if (!entry) throw UnknownTopicError(fmt::format("unknown topic '{}'", frame.topic));
  }

  try {
    expect_keys(doc, {"op", "topic", "seq", "stamp_tx", "msg"}, "frame");
    frame.seq = get_count(doc, "seq");
    frame.stamp_tx = get_number(doc, "stamp_tx");
    const json& msg = doc["msg"];
    if (*op == Op::kPublish) {
      frame.msg = read_payload(msg, entry->kind);
    } else if (*op == Op::kPong && msg.is_object()) {
      expect_keys(msg, {"session_epoch"}, "session");
      frame.msg = SessionInfo{get_number(msg, "session_epoch")};
    } else {
      frame.msg = read_payload(msg, PayloadKind::kNone);
    }
  } catch (const json::exception& e) {
    throw SchemaMismatchError(fmt::format("frame: {}", e.what()));
  }
  return frame;
}

}  // namespace twinlift::bridge
