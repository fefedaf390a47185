#include "redik/teleop_server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <deque>
#include <mutex>
#include <thread>
#include <vector>

namespace redik::teleop {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

namespace {

class Client;

struct Event {
  enum Kind { Open, Text, Close } kind;
  std::shared_ptr<Client> client;
  std::string text;
};

// The only channel from connections into the control loop.
class Inbox {
 public:
  void push(Event e) {
    std::lock_guard lock(mutex_);
    events_.push_back(std::move(e));
  }
  void drain(std::vector<Event>& out) {
    std::lock_guard lock(mutex_);
    for (auto& e : events_) out.push_back(std::move(e));
    events_.clear();
  }

 private:
  std::mutex mutex_;
  std::deque<Event> events_;
};

using Message = std::shared_ptr<const std::string>;

class Client : public std::enable_shared_from_this<Client> {
 public:
  Client(tcp::socket&& socket, Inbox& inbox, std::size_t depth, std::chrono::milliseconds idle)
      : ws_(std::move(socket)), inbox_(inbox), depth_(depth), idle_(idle) {}

  void accept(http::request<http::string_body> req) {
    beast::get_lowest_layer(ws_).expires_never();
    websocket::stream_base::timeout t{};
    t.handshake_timeout = std::chrono::seconds(30);
    t.idle_timeout = idle_;
    t.keep_alive_pings = false;
    ws_.set_option(t);
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) {
      if (ec) return;
      self->inbox_.push({Event::Open, self, {}});
      self->read();
    });
  }

  // Safe from any thread.
  void send(Message m) {
    net::post(ws_.get_executor(), [self = shared_from_this(), m = std::move(m)]() mutable {
      self->enqueue(std::move(m));
    });
  }

  void close() {
    net::post(ws_.get_executor(), [self = shared_from_this()] {
      if (self->ws_.is_open()) self->ws_.async_close(websocket::close_code::going_away, [self](beast::error_code) {});
    });
  }

 private:
  void read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        self->inbox_.push({Event::Close, self, {}});
        return;
      }
      std::string text = beast::buffers_to_string(self->buffer_.data());
      self->buffer_.consume(self->buffer_.size());
      self->inbox_.push({Event::Text, self, std::move(text)});
      self->read();
    });
  }

  void enqueue(Message m) {
    if (pending_.size() >= depth_) pending_.pop_front();
    pending_.push_back(std::move(m));
    write();
  }

  void write() {
    if (writing_ || pending_.empty() || !ws_.is_open()) return;
    in_flight_ = std::move(pending_.front());
    pending_.pop_front();
    writing_ = true;
    ws_.text(true);
    ws_.async_write(net::buffer(*in_flight_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->writing_ = false;
      self->in_flight_.reset();
      if (!ec) self->write();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  beast::flat_buffer buffer_;
  Inbox& inbox_;
  std::size_t depth_;
  std::chrono::milliseconds idle_;
  std::deque<Message> pending_;
  Message in_flight_;
  bool writing_ = false;
};

// Plain HTTP until the request asks for a WebSocket upgrade.
class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, Inbox& inbox, const ServerOptions& options, std::shared_ptr<const std::string> model)
      : stream_(std::move(socket)), inbox_(inbox), options_(options), model_(std::move(model)) {}

  void run() { read(); }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->shutdown();
      self->handle();
    });
  }

  void handle() {
    if (websocket::is_upgrade(req_)) {
      std::make_shared<Client>(stream_.release_socket(), inbox_, options_.queue_depth, options_.idle_timeout)
          ->accept(std::move(req_));
      return;
    }
    auto res = std::make_shared<http::response<http::string_body>>();
    res->version(req_.version());
    res->keep_alive(req_.keep_alive());
    res->set(http::field::server, "redik");
    if (req_.method() == http::verb::get && req_.target() == "/model") {
      res->result(http::status::ok);
      res->set(http::field::content_type, "application/json");
      res->set(http::field::access_control_allow_origin, "*");
      res->body() = *model_;
    } else {
      res->result(http::status::not_found);
      res->set(http::field::content_type, "text/plain");
      res->body() = "not found\n";
    }
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec || !res->keep_alive()) return self->shutdown();
      self->read();
    });
  }

  void shutdown() {
    beast::error_code ec;
    stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  Inbox& inbox_;
  const ServerOptions& options_;
  std::shared_ptr<const std::string> model_;
};

}  // namespace

struct Server::Impl {
  Impl(Session s, ServerOptions o)
      : session(std::move(s)), options(std::move(o)), model_doc(std::make_shared<const std::string>(dump_model(session.model()))) {}

  Session session;
  ServerOptions options;
  std::shared_ptr<const std::string> model_doc;

  net::io_context ioc{1};
  tcp::acceptor acceptor{ioc};
  Inbox inbox;
  std::thread io_thread, loop_thread;
  std::atomic<bool> stopping{false};
  bool started = false;

  std::atomic<std::size_t> ticks{0};
  std::atomic<double> mean_period{0}, max_period{0};

  void do_accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (ec) return;
      std::make_shared<HttpSession>(std::move(socket), inbox, options, model_doc)->run();
      do_accept();
    });
  }

  void control_loop() {
    using clock = std::chrono::steady_clock;
    const auto period = std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(1.0 / session.rate_hz()));
    const double broadcast_dt = 1.0 / options.broadcast_hz;
    double next_broadcast = 0;
    std::vector<std::shared_ptr<Client>> clients;
    std::vector<Event> events;
    auto next = clock::now();
    auto last = next;
    double sum = 0;
    bool reported = false;

    while (!stopping) {
      events.clear();
      inbox.drain(events);
      for (auto& e : events) {
        if (e.kind == Event::Open) {
          clients.push_back(e.client);
        } else if (e.kind == Event::Close) {
          std::erase(clients, e.client);
        } else if (auto err = session.handle_message(e.text)) {
          e.client->send(std::make_shared<const std::string>(err->to_json()));
        }
      }

      try {
        session.tick();
      } catch (const std::exception& ex) {
        if (!reported) std::fprintf(stderr, "control tick failed: %s\n", ex.what());
        reported = true;
      }

      if (session.time() + 1e-9 >= next_broadcast) {
        next_broadcast += broadcast_dt;
        const auto msg = std::make_shared<const std::string>(session.snapshot().dump());
        for (const auto& c : clients) c->send(msg);
      }

      next += period;
      std::this_thread::sleep_until(next);
      const auto now = clock::now();
      if (now - next > 10 * period) next = now;  // fell far behind; do not burst to catch up

      const double dt = std::chrono::duration<double>(now - last).count();
      last = now;
      const auto n = ticks.fetch_add(1) + 1;
      sum += dt;
      mean_period = sum / static_cast<double>(n);
      if (n > 1 && dt > max_period) max_period = dt;
    }
    for (const auto& c : clients) c->close();
  }
};

Server::Server(Session session, ServerOptions options)
    : impl_(std::make_unique<Impl>(std::move(session), std::move(options))) {
  if (!(impl_->options.broadcast_hz > 0)) throw ValidationError("broadcast rate must be positive");
  if (impl_->options.queue_depth == 0) throw ValidationError("queue depth must be positive");
}

Server::~Server() { stop(); }

void Server::start() {
  if (impl_->started) return;
  auto& acc = impl_->acceptor;
  try {
    const tcp::endpoint ep(net::ip::make_address(impl_->options.address), impl_->options.port);
    acc.open(ep.protocol());
    acc.set_option(net::socket_base::reuse_address(true));
    acc.bind(ep);
    acc.listen(net::socket_base::max_listen_connections);
  } catch (const boost::system::system_error& e) {
    throw NetworkError("cannot listen on " + impl_->options.address + ":" + std::to_string(impl_->options.port) +
                       ": " + e.code().message());
  }
  impl_->started = true;
  impl_->do_accept();
  impl_->io_thread = std::thread([this] { impl_->ioc.run(); });
  impl_->loop_thread = std::thread([this] { impl_->control_loop(); });
}

void Server::stop() {
  if (!impl_ || !impl_->started) return;
  impl_->started = false;
  impl_->stopping = true;
  if (impl_->loop_thread.joinable()) impl_->loop_thread.join();
  net::post(impl_->ioc, [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
  });
  // Give close frames a moment to go out before tearing down.
  std::this_thread::sleep_for(std::chrono::milliseconds(100));
  impl_->ioc.stop();
  if (impl_->io_thread.joinable()) impl_->io_thread.join();
}

unsigned short Server::port() const {
  beast::error_code ec;
  const auto ep = impl_->acceptor.local_endpoint(ec);
  return ec ? impl_->options.port : ep.port();
}

LoopStats Server::loop_stats() const {
  return {impl_->ticks.load(), impl_->mean_period.load(), impl_->max_period.load()};
}

}  // namespace redik::teleop
