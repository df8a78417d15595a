#include "twinlift/bridge/broker.hpp"

#include <algorithm>

namespace twinlift::bridge {

Broker::Broker(const TopicRegistry& registry) : registry_(registry) {}

ClientId Broker::connect(Sink sink) {
  std::lock_guard lock(mutex_);
  const ClientId id = next_id_++;
  clients_.emplace(id, Client{std::move(sink), {}, {}});
  return id;
}

void Broker::disconnect(ClientId id) {
  std::lock_guard lock(mutex_);
  clients_.erase(id);
  for (auto& [_, subs] : subscriptions_) std::erase(subs, id);
}

std::optional<std::string> Broker::handle_text(ClientId from, std::string_view bytes) {
  BridgeFrame frame;
  try {
    frame = decode_frame(bytes, registry_);
  } catch (const FrameError& e) {
    std::lock_guard lock(mutex_);
    ++counters_.rejected;
    return std::string(e.what());
  }
  dispatch(from, frame);
  return std::nullopt;
}

void Broker::dispatch(ClientId from, const BridgeFrame& frame) {
  std::lock_guard lock(mutex_);
  auto it = clients_.find(from);
  if (it == clients_.end()) return;
  Client& client = it->second;

  switch (frame.op) {
    case Op::kAdvertise:
      client.advertised.insert(frame.topic);
      break;
    case Op::kSubscribe: {
      auto& subs = subscriptions_[frame.topic];
      if (std::find(subs.begin(), subs.end(), from) == subs.end()) subs.push_back(from);
      break;
    }
    case Op::kUnsubscribe: {
      auto sit = subscriptions_.find(frame.topic);
      if (sit != subscriptions_.end()) std::erase(sit->second, from);
      break;
    }
    case Op::kPublish: {
      auto seq_it = client.last_seq.find(frame.topic);
      if (seq_it != client.last_seq.end() && frame.seq <= seq_it->second) {
        ++counters_.rejected;
        break;
      }
      client.last_seq[frame.topic] = frame.seq;
      auto sit = subscriptions_.find(frame.topic);
      if (sit == subscriptions_.end()) break;
      const std::string bytes = encode_frame(frame);
      // copy: deliver_locked may drop dead subscribers from the list
      const std::vector<ClientId> targets = sit->second;
      for (ClientId target : targets) {
        if (deliver_locked(target, bytes)) ++counters_.delivered;
      }
      break;
    }
    case Op::kPing: {
      BridgeFrame pong{Op::kPong, frame.topic, frame.seq, frame.stamp_tx, std::monostate{}};
      deliver_locked(from, encode_frame(pong));
      break;
    }
    case Op::kPong:
      break;
  }
}

bool Broker::send_to(ClientId id, const BridgeFrame& frame) {
  const std::string bytes = encode_frame(frame);
  std::lock_guard lock(mutex_);
  return deliver_locked(id, bytes);
}

bool Broker::deliver_locked(ClientId id, const std::string& bytes) {
  auto it = clients_.find(id);
  if (it == clients_.end()) return false;
  if (it->second.sink && it->second.sink(bytes)) return true;
  drop_locked(id);
  return false;
}

void Broker::drop_locked(ClientId id) {
  clients_.erase(id);
  for (auto& [_, subs] : subscriptions_) std::erase(subs, id);
  ++counters_.dead_clients;
}

BrokerCounters Broker::counters() const {
  std::lock_guard lock(mutex_);
  BrokerCounters out = counters_;
  out.clients = clients_.size();
  return out;
}

std::vector<ClientId> Broker::subscribers(std::string_view topic) const {
  std::lock_guard lock(mutex_);
  auto it = subscriptions_.find(topic);
  return it == subscriptions_.end() ? std::vector<ClientId>{} : it->second;
}

std::set<std::string> Broker::advertised(ClientId id) const {
  std::lock_guard lock(mutex_);
  auto it = clients_.find(id);
  return it == clients_.end() ? std::set<std::string>{} : it->second.advertised;
}

}  // namespace twinlift::bridge
