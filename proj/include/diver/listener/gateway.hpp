#pragma once

#include <memory>

#include "diver/listener/monitor.hpp"
#include "diver/util/net.hpp"

namespace diver::listener {

/// HTTP front door for the dashboard.
///
///   GET  /api/tasks /api/timer-tree /api/modules /api/baseline /api/alerts
///   POST /api/command {"text": ...}   POST /api/baseline/build
///   GET  /api/stream   one JSON event per line: {"type":"record"|"alert","data":...}
class Gateway {
 public:
  Gateway(Monitor& monitor, net::Endpoint bind);
  ~Gateway();

  /// Binds and serves on a background thread.
  void start();
  void stop();
  std::uint16_t port() const;
  /// Number of open /api/stream responses.
  std::size_t stream_clients() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace diver::listener
