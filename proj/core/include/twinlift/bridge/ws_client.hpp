#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <string_view>

#include "twinlift/bridge/clock.hpp"
#include "twinlift/bridge/frame.hpp"

namespace twinlift::bridge {

class ConnectError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bridge client. Frames are delivered on the client's io thread together
/// with the receive time on the server's session clock.
class WsClient {
 public:
  using FrameHandler = std::function<void(const BridgeFrame&, double rx_session_time)>;

  WsClient();
  ~WsClient();
  WsClient(const WsClient&) = delete;
  WsClient& operator=(const WsClient&) = delete;

  /// Must be set before connect().
  void on_frame(FrameHandler handler);

  /// Connects and waits for the session handshake. Throws ConnectError.
  void connect(const std::string& host, std::uint16_t port,
               std::chrono::milliseconds timeout = std::chrono::seconds(5));
  void close();
  bool connected() const;

  double session_epoch() const;
  /// Server session time minus local clock, fixed at handshake.
  double clock_offset() const;
  /// Local estimate of the server's session time.
  double session_now() const;

  void subscribe(std::string_view topic);
  void unsubscribe(std::string_view topic);
  void advertise(std::string_view topic);
  /// Stamps and sequences the frame; seq continues across reconnects.
  std::uint64_t publish(std::string_view topic, Payload msg);
  void ping(double stamp);
  void send(const BridgeFrame& frame);
  void send_text(std::string text);

  std::uint64_t decode_errors() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  SessionClock local_;
  FrameHandler handler_;
  mutable std::mutex seq_mutex_;
  std::map<std::string, std::uint64_t, std::less<>> next_seq_;
};

}  // namespace twinlift::bridge
