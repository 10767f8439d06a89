#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include "diver/measurer/backend.hpp"
#include "diver/sim/fixture.hpp"
#include "diver/util/net.hpp"

namespace diver::measurer {

struct HostOptions {
  /// Device ticks per wall-clock millisecond.
  double time_scale = 1.0;
  /// UDP endpoint whose datagrams are delivered to the device inbox.
  std::optional<net::Endpoint> control_udp;
};

/// Owns a Device on a dedicated thread. Ticks are paced by the wall clock;
/// requests from other threads are served between ticks.
class DeviceHost : public DeviceAccess {
 public:
  DeviceHost(const sim::Fixture& fixture, std::uint64_t seed, HostOptions options = {});
  ~DeviceHost() override;
  DeviceHost(const DeviceHost&) = delete;
  DeviceHost& operator=(const DeviceHost&) = delete;

  void start();
  void stop();

  sim::DeviceSnapshot snapshot() override;
  void mutate(const std::function<void(sim::Device&)>& fn) override;
  void wait_ticks(std::uint64_t ticks) override;
  std::uint64_t reset_count() override { return reset_count_.load(); }

  std::uint64_t uptime() const { return uptime_.load(); }
  /// Bound port of the control socket (0 when disabled).
  std::uint16_t control_port() const { return control_port_; }

 private:
  struct Request {
    std::function<void(sim::Device&)> fn;
    std::promise<void> done;
  };

  void run();
  void udp_loop();
  void serve_requests();
  void flush_outbox();

  sim::Device device_;
  HostOptions options_;
  std::thread owner_;
  std::thread udp_thread_;
  std::atomic<bool> running_{false};
  std::atomic<bool> stopping_{false};
  std::atomic<std::uint64_t> uptime_{0};
  std::atomic<std::uint64_t> reset_count_{0};

  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::shared_ptr<Request>> requests_;
  std::deque<sim::Datagram> pending_udp_;

  net::Socket udp_;
  std::uint16_t control_port_ = 0;
  std::mutex peers_mu_;
  std::map<std::uint64_t, std::vector<std::uint8_t>> peers_;  // peer id -> sockaddr bytes
};

}  // namespace diver::measurer
