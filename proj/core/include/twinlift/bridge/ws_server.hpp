#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>

#include "twinlift/bridge/broker.hpp"
#include "twinlift/bridge/clock.hpp"

namespace twinlift::bridge {

struct ServerOptions {
  std::string host{"127.0.0.1"};
  std::uint16_t port{9870};  // 0 picks a free port
  std::size_t max_pending{1u << 17};  // per-client outbound frames before it is dropped
};

class PortInUseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// WebSocket front end of a Broker. Each accepted client becomes a broker
/// client; its first received frame is a pong carrying the session epoch.
class WsServer {
 public:
  WsServer(Broker& broker, const SessionClock& clock, ServerOptions options = {});
  ~WsServer();
  WsServer(const WsServer&) = delete;
  WsServer& operator=(const WsServer&) = delete;

  /// Binds and starts the io thread. Throws PortInUseError.
  void start();
  void stop();

  std::uint16_t port() const;
  std::size_t connections() const;

  /// Broker hand-off to socket write completion.
  const LatencyStats& transport() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace twinlift::bridge
