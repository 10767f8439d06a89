#include "diver/measurer/device_host.hpp"

#include <poll.h>
#include <sys/socket.h>

#include <chrono>
#include <cstring>

#include "diver/util/error.hpp"

namespace diver::measurer {

namespace {
using Clock = std::chrono::steady_clock;
// Upper bound on ticks run back to back before requests are served again.
constexpr std::uint64_t kMaxBurst = 2000;
}  // namespace

DeviceHost::DeviceHost(const sim::Fixture& fixture, std::uint64_t seed, HostOptions options)
    : device_(fixture, seed), options_(std::move(options)) {
  if (!(options_.time_scale > 0.0)) throw Error(ErrorCode::BadArgument, "time_scale must be positive");
  if (options_.control_udp) {
    udp_ = net::udp_bind(*options_.control_udp);
    control_port_ = net::local_port(udp_);
  }
}

DeviceHost::~DeviceHost() { stop(); }

void DeviceHost::start() {
  if (running_.exchange(true)) return;
  stopping_ = false;
  owner_ = std::thread([this] { run(); });
  if (udp_.valid()) udp_thread_ = std::thread([this] { udp_loop(); });
}

void DeviceHost::stop() {
  if (!running_) return;
  {
    std::lock_guard lk(mu_);
    stopping_ = true;
  }
  cv_.notify_all();
  if (owner_.joinable()) owner_.join();
  if (udp_thread_.joinable()) udp_thread_.join();
  running_ = false;
  // Fail anything still queued.
  std::lock_guard lk(mu_);
  for (auto& r : requests_) r->done.set_exception(std::make_exception_ptr(Error(ErrorCode::ConnectionLost, "device stopped")));
  requests_.clear();
}

sim::DeviceSnapshot DeviceHost::snapshot() {
  sim::DeviceSnapshot snap;
  mutate([&](sim::Device& d) { snap = d.snapshot(); });
  return snap;
}

void DeviceHost::mutate(const std::function<void(sim::Device&)>& fn) {
  if (!running_) {
    std::lock_guard lk(mu_);
    fn(device_);
    uptime_ = device_.state().uptime_ticks;
    reset_count_ = device_.reset_count();
    return;
  }
  auto req = std::make_shared<Request>();
  req->fn = fn;
  auto fut = req->done.get_future();
  {
    std::lock_guard lk(mu_);
    if (stopping_) throw Error(ErrorCode::ConnectionLost, "device stopped");
    requests_.push_back(req);
  }
  cv_.notify_all();
  fut.get();
}

void DeviceHost::wait_ticks(std::uint64_t ticks) {
  auto wall = std::chrono::duration<double, std::milli>(static_cast<double>(ticks) / options_.time_scale);
  std::unique_lock lk(mu_);
  cv_.wait_for(lk, wall, [this] { return stopping_.load(); });
}

void DeviceHost::serve_requests() {
  std::deque<std::shared_ptr<Request>> batch;
  {
    std::lock_guard lk(mu_);
    batch.swap(requests_);
  }
  for (auto& r : batch) {
    try {
      r->fn(device_);
      r->done.set_value();
    } catch (...) {
      r->done.set_exception(std::current_exception());
    }
  }
  uptime_ = device_.state().uptime_ticks;
  reset_count_ = device_.reset_count();
}

void DeviceHost::flush_outbox() {
  auto out = device_.take_outbox();
  if (out.empty() || !udp_.valid()) return;
  std::lock_guard lk(peers_mu_);
  for (const auto& d : out) {
    auto it = peers_.find(d.peer);
    if (it == peers_.end()) continue;
    ::sendto(udp_.fd(), d.payload.data(), d.payload.size(), 0, reinterpret_cast<const sockaddr*>(it->second.data()),
             static_cast<socklen_t>(it->second.size()));
  }
}

void DeviceHost::run() {
  const auto tick_period = std::chrono::duration<double, std::milli>(1.0 / options_.time_scale);
  auto origin = Clock::now();
  std::uint64_t ticks_done = 0;

  while (true) {
    auto next_due = origin + std::chrono::duration_cast<Clock::duration>(tick_period * static_cast<double>(ticks_done + 1));
    {
      std::unique_lock lk(mu_);
      cv_.wait_until(lk, next_due, [&] { return stopping_.load() || !requests_.empty(); });
      if (stopping_) return;
    }
    serve_requests();

    auto now = Clock::now();
    auto target = static_cast<std::uint64_t>((now - origin) / tick_period);
    if (target > ticks_done + kMaxBurst) {
      // Far behind (suspended process, debugger): drop the backlog instead of bursting.
      ticks_done = target - kMaxBurst;
    }
    while (ticks_done < target) {
      {
        std::lock_guard lk(mu_);
        while (!pending_udp_.empty()) {
          device_.deliver(std::move(pending_udp_.front()));
          pending_udp_.pop_front();
        }
      }
      device_.tick();
      ++ticks_done;
      flush_outbox();
    }
    uptime_ = device_.state().uptime_ticks;
  }
}

void DeviceHost::udp_loop() {
  std::vector<std::uint8_t> buf(65536);
  while (!stopping_) {
    pollfd p{udp_.fd(), POLLIN, 0};
    if (::poll(&p, 1, 100) <= 0) continue;
    sockaddr_storage from{};
    socklen_t from_len = sizeof from;
    auto n = ::recvfrom(udp_.fd(), buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&from), &from_len);
    if (n < 0) continue;
    std::vector<std::uint8_t> addr(reinterpret_cast<std::uint8_t*>(&from), reinterpret_cast<std::uint8_t*>(&from) + from_len);
    auto id = fnv1a(std::string_view(reinterpret_cast<const char*>(addr.data()), addr.size()));
    {
      std::lock_guard lk(peers_mu_);
      peers_[id] = std::move(addr);
    }
    {
      std::lock_guard lk(mu_);
      pending_udp_.push_back({Bytes(buf.begin(), buf.begin() + n), id});
    }
  }
}

}  // namespace diver::measurer
