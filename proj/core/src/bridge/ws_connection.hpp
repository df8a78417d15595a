#pragma once

// Shared Beast plumbing for the server sessions and the client: one async
// read loop plus a FIFO write queue, both running on the stream's strand.

#include <atomic>
#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <utility>

#include <boost/asio/strand.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/websocket.hpp>

#include "twinlift/bridge/clock.hpp"

namespace twinlift::bridge::detail {

namespace beast = boost::beast;
namespace net = boost::asio;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;

class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  using Stream = websocket::stream<beast::tcp_stream>;
  using TextHandler = std::function<void(std::string)>;
  using CloseHandler = std::function<void()>;

  struct Options {
    std::size_t max_pending{1u << 17};
    const SessionClock* clock{nullptr};  // enables transport timing
    LatencyStats* transport{nullptr};
  };

  WsConnection(Stream stream, Options options)
      : ws_(std::move(stream)), options_(options) {
    ws_.text(true);
  }

  Stream& stream() { return ws_; }

  void set_handlers(TextHandler on_text, CloseHandler on_close) {
    on_text_ = std::move(on_text);
    on_close_ = std::move(on_close);
  }

  void start_reading() {
    net::dispatch(ws_.get_executor(), [self = shared_from_this()] { self->do_read(); });
  }

  /// Thread-safe. False when the connection is closed or the queue is full.
  bool enqueue(std::string bytes) {
    if (closed_.load()) return false;
    if (pending_.fetch_add(1) >= options_.max_pending) {
      pending_.fetch_sub(1);
      fail();
      return false;
    }
    const double stamp = options_.clock ? options_.clock->now() : 0.0;
    net::post(ws_.get_executor(),
              [self = shared_from_this(), bytes = std::move(bytes), stamp]() mutable {
                self->queue_.emplace_back(std::move(bytes), stamp);
                if (self->queue_.size() == 1) self->do_write();
              });
    return true;
  }

  /// Graceful close handshake; the close handler fires once the read loop ends.
  void close() {
    net::post(ws_.get_executor(), [self = shared_from_this()] {
      if (self->closed_.exchange(true)) return;
      // a close may not overlap a pending write; defer until the queue drains
      if (self->queue_.empty()) {
        self->do_close();
      } else {
        self->close_after_drain_ = true;
      }
    });
  }

  /// Immediate teardown of the socket.
  void abort() {
    net::post(ws_.get_executor(), [self = shared_from_this()] {
      self->closed_.store(true);
      beast::error_code ec;
      beast::get_lowest_layer(self->ws_).socket().close(ec);
    });
  }

  bool closed() const { return closed_.load(); }

 private:
  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      closed_.store(true);
      if (on_close_) {
        auto handler = std::move(on_close_);
        on_close_ = nullptr;
        handler();
      }
      return;
    }
    std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    if (on_text_) on_text_(std::move(text));
    do_read();
  }

  void do_write() {
    ws_.async_write(net::buffer(queue_.front().first),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      self->on_write(ec);
                    });
  }

  void on_write(beast::error_code ec) {
    const double stamp = queue_.front().second;
    queue_.pop_front();
    pending_.fetch_sub(1);
    if (ec) {
      fail();
      return;
    }
    if (options_.clock && options_.transport) options_.transport->add(options_.clock->now() - stamp);
    if (!queue_.empty()) {
      do_write();
    } else if (close_after_drain_) {
      do_close();
    }
  }

  void do_close() {
    ws_.async_close(websocket::close_code::normal, [self = shared_from_this()](beast::error_code) {
      beast::error_code ec;
      beast::get_lowest_layer(self->ws_).socket().close(ec);
    });
  }

  void fail() {
    closed_.store(true);
    net::post(ws_.get_executor(), [self = shared_from_this()] {
      beast::error_code ec;
      beast::get_lowest_layer(self->ws_).socket().close(ec);
    });
  }

  Stream ws_;
  Options options_;
  beast::flat_buffer buffer_;
  std::deque<std::pair<std::string, double>> queue_;
  std::atomic<std::size_t> pending_{0};
  std::atomic<bool> closed_{false};
  bool close_after_drain_{false};
  TextHandler on_text_;
  CloseHandler on_close_;
};

}  // namespace twinlift::bridge::detail
