#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "twinlift/bridge/frame.hpp"

namespace twinlift::bridge {

using ClientId = std::uint64_t;

/// Delivers one encoded frame to a client. Returns false once the client is
/// gone; the broker then drops it.
using Sink = std::function<bool(const std::string& bytes)>;

struct BrokerCounters {
  std::uint64_t clients{0};
  std::uint64_t delivered{0};  // frames handed to subscriber sinks
  std::uint64_t rejected{0};   // undecodable frames and stale publisher seq
  std::uint64_t dead_clients{0};
};

/// In-process pub/sub hub. Publishes fan out to subscribers in subscription
/// order. All entry points are thread-safe; sinks run under the broker lock
/// so per-publisher order is kept for every subscriber.
class Broker {
 public:
  explicit Broker(const TopicRegistry& registry = TopicRegistry::standard());

  ClientId connect(Sink sink);
  void disconnect(ClientId id);

  /// Decodes and dispatches. Decode failures are counted and returned.
  std::optional<std::string> handle_text(ClientId from, std::string_view bytes);

  void dispatch(ClientId from, const BridgeFrame& frame);

  /// Sends directly to one client, bypassing subscriptions.
  bool send_to(ClientId id, const BridgeFrame& frame);

  BrokerCounters counters() const;
  std::vector<ClientId> subscribers(std::string_view topic) const;
  std::set<std::string> advertised(ClientId id) const;
  const TopicRegistry& registry() const { return registry_; }

 private:
  struct Client {
    Sink sink;
    std::set<std::string> advertised;
    std::map<std::string, std::uint64_t, std::less<>> last_seq;
  };

  bool deliver_locked(ClientId id, const std::string& bytes);
  void drop_locked(ClientId id);

  const TopicRegistry& registry_;
  mutable std::mutex mutex_;
  ClientId next_id_{1};
  std::map<ClientId, Client> clients_;
  std::map<std::string, std::vector<ClientId>, std::less<>> subscriptions_;
  BrokerCounters counters_;
};

}  // namespace twinlift::bridge
