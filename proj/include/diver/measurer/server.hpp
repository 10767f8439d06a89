#pragma once

#include <atomic>
#include <chrono>
#include <list>
#include <memory>
#include <mutex>
#include <thread>

#include "diver/channel/session.hpp"
#include "diver/measurer/backend.hpp"
#include "diver/util/net.hpp"

namespace diver::measurer {

struct ServerOptions {
  net::Endpoint listen{"127.0.0.1", 0};
  bool encrypt = true;
  channel::PskTable psks;
  std::chrono::milliseconds idle_timeout{std::chrono::seconds(120)};
  std::uint64_t skew_window_ms = channel::kDefaultSkewWindowMs;
  DispatchOptions dispatch;
  bool verbose = false;
};

/// The implant's TCP endpoint. One acceptor thread, one handler thread per
/// connection; a protocol error closes only the offending connection.
class Server {
 public:
  Server(DeviceAccess& device, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  void start();
  void stop();
  std::uint16_t port() const { return port_; }

  std::size_t active_connections() const { return active_.load(); }
  std::size_t subscription_count() const { return subscriptions_.load(); }
  std::uint64_t protocol_errors() const { return protocol_errors_.load(); }
  std::uint64_t accepted() const { return accepted_.load(); }

 private:
  struct Connection {
    net::Socket socket;
    std::thread thread;
    std::atomic<bool> finished{false};
  };

  void accept_loop();
  void handle(Connection& conn);
  void reap(bool all);
  void log(const std::string& msg) const;

  DeviceAccess& device_;
  ServerOptions options_;
  Dispatcher dispatcher_;
  net::Socket listener_;
  std::uint16_t port_ = 0;
  std::thread acceptor_;
  std::atomic<bool> stopping_{false};

  std::mutex conns_mu_;
  std::list<std::unique_ptr<Connection>> conns_;

  std::atomic<std::size_t> active_{0};
  std::atomic<std::size_t> subscriptions_{0};
  std::atomic<std::uint64_t> protocol_errors_{0};
  std::atomic<std::uint64_t> accepted_{0};
};

}  // namespace diver::measurer
