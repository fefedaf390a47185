#pragma once

#include "redik/teleop.hpp"

#include <chrono>
#include <cstddef>
#include <memory>
#include <string>

namespace redik::teleop {

class NetworkError : public Error {
 public:
  using Error::Error;
};

struct ServerOptions {
  std::string address = "0.0.0.0";
  unsigned short port = 8765;  // 0 picks a free port
  double broadcast_hz = 30;
  std::size_t queue_depth = 8;  // per client; the oldest pending snapshot is dropped
  std::chrono::milliseconds idle_timeout{30000};
};

struct LoopStats {
  std::size_t ticks = 0;
  double mean_period_s = 0;
  double max_period_s = 0;
};

// WebSocket + HTTP front end for one Session. The session is owned by a
// dedicated control thread; connections talk to it only through an inbox of
// events and receive immutable serialized snapshots.
//
// Endpoints on one port: WebSocket upgrade on any path, GET /model returns
// the model document.
class Server {
 public:
  Server(Session session, ServerOptions options = {});
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  // Binds and starts the control loop. Throws NetworkError if the port is taken.
  void start();
  void stop();

  unsigned short port() const;
  LoopStats loop_stats() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace redik::teleop
