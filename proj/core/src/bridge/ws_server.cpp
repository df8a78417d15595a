#include "twinlift/bridge/ws_server.hpp"

#include <map>
#include <thread>

#include <boost/asio/ip/tcp.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "ws_connection.hpp"

namespace twinlift::bridge {

using detail::WsConnection;
namespace beast = detail::beast;
namespace net = detail::net;
namespace websocket = detail::websocket;
using tcp = detail::tcp;

struct WsServer::Impl {
  Impl(Broker& b, const SessionClock& c, ServerOptions o)
      : broker(b), clock(c), options(std::move(o)), acceptor(ioc) {}

  void do_accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) {
        if (acceptor.is_open()) do_accept();
        return;
      }
      on_socket(std::move(socket));
      do_accept();
    });
  }

  void on_socket(tcp::socket socket) {
    WsConnection::Options conn_options{options.max_pending, &clock, &transport};
    auto conn = std::make_shared<WsConnection>(
        WsConnection::Stream(std::move(socket)), conn_options);
    auto& ws = conn->stream();
    ws.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws.async_accept([this, conn](beast::error_code ec) {
      if (ec) return;
      register_client(conn);
    });
  }

  void register_client(const std::shared_ptr<WsConnection>& conn) {
    std::weak_ptr<WsConnection> weak = conn;
    const ClientId id = broker.connect([weak](const std::string& bytes) {
      auto c = weak.lock();
      return c && c->enqueue(bytes);
    });
    {
      std::lock_guard lock(mutex);
      live.emplace(id, conn);
    }
    conn->set_handlers(
        [this, id](std::string text) {
          if (auto err = broker.handle_text(id, text)) {
            spdlog::debug("client {}: rejected frame: {}", id, *err);
          }
        },
        [this, id] {
          broker.disconnect(id);
          std::lock_guard lock(mutex);
          live.erase(id);
          spdlog::debug("client {} disconnected", id);
        });
    const BridgeFrame hello{Op::kPong, "", 0, clock.now(), SessionInfo{clock.epoch()}};
    conn->enqueue(encode_frame(hello));
    conn->start_reading();
    spdlog::debug("client {} connected", id);
  }

  Broker& broker;
  const SessionClock& clock;
  ServerOptions options;
  net::io_context ioc{1};
  tcp::acceptor acceptor;
  std::thread worker;
  LatencyStats transport;
  mutable std::mutex mutex;
  std::map<ClientId, std::shared_ptr<WsConnection>> live;
  std::uint16_t bound_port{0};
  bool running{false};
};

WsServer::WsServer(Broker& broker, const SessionClock& clock, ServerOptions options)
    : impl_(std::make_unique<Impl>(broker, clock, std::move(options))) {}

WsServer::~WsServer() { stop(); }

void WsServer::start() {
  if (impl_->running) return;
  beast::error_code ec;
  const auto address = net::ip::make_address(impl_->options.host, ec);
  if (ec) throw std::invalid_argument(fmt::format("invalid host '{}'", impl_->options.host));
  const tcp::endpoint endpoint(address, impl_->options.port);

  auto& acceptor = impl_->acceptor;
  acceptor.open(endpoint.protocol());
  acceptor.set_option(net::socket_base::reuse_address(true));
  acceptor.bind(endpoint, ec);
  if (ec == net::error::address_in_use) {
    acceptor.close();
    throw PortInUseError(fmt::format("port {} on {} is already in use", impl_->options.port,
                                     impl_->options.host));
  }
  if (ec) throw beast::system_error(ec);
  acceptor.listen(net::socket_base::max_listen_connections);
  impl_->bound_port = acceptor.local_endpoint().port();

  impl_->do_accept();
  impl_->running = true;
  impl_->worker = std::thread([this] { impl_->ioc.run(); });
}

void WsServer::stop() {
  if (!impl_ || !impl_->running) return;
  impl_->running = false;
  std::map<ClientId, std::shared_ptr<WsConnection>> live;
  {
    std::lock_guard lock(impl_->mutex);
    live.swap(impl_->live);
  }
  // detach sinks first so no broker thread posts into a stopping io_context
  for (auto& [id, conn] : live) impl_->broker.disconnect(id);
  net::post(impl_->ioc, [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
  });
  for (auto& [id, conn] : live) conn->close();
  // let close handshakes run briefly, then force the loop down
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(500);
  for (auto& [id, conn] : live) {
    while (std::chrono::steady_clock::now() < deadline && conn.use_count() > 1) {
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
  }
  impl_->ioc.stop();
  if (impl_->worker.joinable()) impl_->worker.join();
}

std::uint16_t WsServer::port() const { return impl_->bound_port; }

std::size_t WsServer::connections() const {
  std::lock_guard lock(impl_->mutex);
  return impl_->live.size();
}

const LatencyStats& WsServer::transport() const { return impl_->transport; }

}  // namespace twinlift::bridge
