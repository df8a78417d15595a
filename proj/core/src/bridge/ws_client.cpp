#include "twinlift/bridge/ws_client.hpp"

#include <atomic>
#include <condition_variable>
#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <fmt/format.h>

#include "ws_connection.hpp"

namespace twinlift::bridge {

using detail::WsConnection;
namespace beast = detail::beast;
namespace net = detail::net;
namespace websocket = detail::websocket;
using tcp = detail::tcp;

struct WsClient::Impl {
  net::io_context ioc{1};
  std::shared_ptr<WsConnection> conn;
  std::thread worker;

  std::mutex mutex;
  std::condition_variable cv;
  bool synced{false};
  bool disconnected{false};
  double epoch{0.0};
  double offset{0.0};
  std::atomic<std::uint64_t> decode_errors{0};

  ~Impl() {
    if (conn) conn->abort();
    if (worker.joinable()) {
      // abort makes the pending read fail, which drains the loop
      worker.join();
    }
  }
};

WsClient::WsClient() = default;

WsClient::~WsClient() { close(); }

void WsClient::on_frame(FrameHandler handler) { handler_ = std::move(handler); }

void WsClient::connect(const std::string& host, std::uint16_t port,
                       std::chrono::milliseconds timeout) {
  close();
  auto impl = std::make_unique<Impl>();
  Impl* raw = impl.get();

  WsConnection::Stream stream(net::make_strand(impl->ioc));
  try {
    tcp::resolver resolver(impl->ioc);
    const auto results = resolver.resolve(host, std::to_string(port));
    beast::get_lowest_layer(stream).expires_after(timeout);
    beast::get_lowest_layer(stream).connect(results);
    beast::get_lowest_layer(stream).expires_never();
    stream.set_option(websocket::stream_base::timeout::suggested(beast::role_type::client));
    stream.handshake(fmt::format("{}:{}", host, port), "/");
  } catch (const beast::system_error& e) {
    throw ConnectError(fmt::format("cannot connect to {}:{}: {}", host, port, e.code().message()));
  }

  impl->conn = std::make_shared<WsConnection>(std::move(stream), WsConnection::Options{});
  impl->conn->set_handlers(
      [this, raw](std::string text) {
        const double rx_local = local_.now();
        BridgeFrame frame;
        try {
          frame = decode_frame(text);
        } catch (const FrameError&) {
          ++raw->decode_errors;
          return;
        }
        if (frame.op == Op::kPong) {
          if (const auto* info = std::get_if<SessionInfo>(&frame.msg)) {
            std::lock_guard lock(raw->mutex);
            if (!raw->synced) {
              raw->epoch = info->session_epoch;
              raw->offset = frame.stamp_tx - rx_local;
              raw->synced = true;
              raw->cv.notify_all();
              return;
            }
          }
        }
        double offset;
        {
          std::lock_guard lock(raw->mutex);
          offset = raw->offset;
        }
        if (handler_) handler_(frame, rx_local + offset);
      },
      [raw] {
        std::lock_guard lock(raw->mutex);
        raw->disconnected = true;
        raw->cv.notify_all();
      });
  impl->conn->start_reading();
  impl->worker = std::thread([raw] { raw->ioc.run(); });
  impl_ = std::move(impl);

  std::unique_lock lock(raw->mutex);
  if (!raw->cv.wait_for(lock, timeout, [raw] { return raw->synced || raw->disconnected; }) ||
      !raw->synced) {
    lock.unlock();
    close();
    throw ConnectError(fmt::format("no session handshake from {}:{}", host, port));
  }
}

void WsClient::close() {
  if (!impl_) return;
  impl_->conn->close();
  {
    std::unique_lock lock(impl_->mutex);
    impl_->cv.wait_for(lock, std::chrono::milliseconds(500),
                       [this] { return impl_->disconnected; });
  }
  impl_.reset();
}

bool WsClient::connected() const {
  if (!impl_) return false;
  std::lock_guard lock(impl_->mutex);
  return impl_->synced && !impl_->disconnected;
}

double WsClient::session_epoch() const {
  if (!impl_) return 0.0;
  std::lock_guard lock(impl_->mutex);
  return impl_->epoch;
}

double WsClient::clock_offset() const {
  if (!impl_) return 0.0;
  std::lock_guard lock(impl_->mutex);
  return impl_->offset;
}

double WsClient::session_now() const { return local_.now() + clock_offset(); }

void WsClient::subscribe(std::string_view topic) {
  send({Op::kSubscribe, std::string(topic), 0, session_now(), std::monostate{}});
}

void WsClient::unsubscribe(std::string_view topic) {
  send({Op::kUnsubscribe, std::string(topic), 0, session_now(), std::monostate{}});
}

void WsClient::advertise(std::string_view topic) {
  send({Op::kAdvertise, std::string(topic), 0, session_now(), std::monostate{}});
}

std::uint64_t WsClient::publish(std::string_view topic, Payload msg) {
  if (!impl_) throw ConnectError("publish on a closed bridge connection");
  std::uint64_t seq;
  {
    std::lock_guard lock(seq_mutex_);
    auto it = next_seq_.find(topic);
    if (it == next_seq_.end()) it = next_seq_.emplace(std::string(topic), 0).first;
    seq = it->second++;
  }
  send({Op::kPublish, std::string(topic), seq, session_now(), std::move(msg)});
  return seq;
}

void WsClient::ping(double stamp) { send({Op::kPing, "", 0, stamp, std::monostate{}}); }

void WsClient::send(const BridgeFrame& frame) { send_text(encode_frame(frame)); }

void WsClient::send_text(std::string text) {
  if (!impl_ || !impl_->conn->enqueue(std::move(text))) {
    throw ConnectError("send on a closed bridge connection");
  }
}

std::uint64_t WsClient::decode_errors() const { return impl_ ? impl_->decode_errors.load() : 0; }

}  // namespace twinlift::bridge
