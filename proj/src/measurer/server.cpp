#include "diver/measurer/server.hpp"

#include <sys/socket.h>
#include <sys/time.h>

#include <cstdio>
#include <map>

#include "diver/channel/frame.hpp"
#include "diver/util/error.hpp"

namespace diver::measurer {

namespace {

using Clock = std::chrono::steady_clock;
using channel::Direction;
using channel::Frame;

constexpr auto kHandshakeWait = std::chrono::seconds(10);
constexpr auto kPollSlice = std::chrono::milliseconds(100);

void set_io_timeouts(int fd, std::chrono::milliseconds t) {
  timeval tv{static_cast<time_t>(t.count() / 1000), static_cast<suseconds_t>((t.count() % 1000) * 1000)};
  ::setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof tv);
  ::setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof tv);
}

bool peer_closed(int fd) {
  char c;
  auto n = ::recv(fd, &c, 1, MSG_PEEK | MSG_DONTWAIT);
  return n == 0 || (n < 0 && errno != EAGAIN && errno != EWOULDBLOCK && errno != EINTR);
}

/// Plain handshake-flagged frame carrying an error, sent before closing.
void send_handshake_error(const net::Socket& s, const Error& e) {
  Frame f;
  f.flags = channel::flags::kHandshake;
  f.timestamp_ms = channel::system_clock_ms();
  auto text = error_text(e);
  f.payload.assign(text.begin(), text.end());
  try {
    channel::write_frame(s, f);
  } catch (const Error&) {
  }
}

struct Subscription {
  Command command;
  Clock::duration period;
  Clock::time_point next_due;
};

class ConnectionContext : public SessionContext {
 public:
  ConnectionContext(int fd, const std::atomic<bool>& stopping, std::atomic<std::size_t>& total)
      : fd_(fd), stopping_(stopping), total_(total) {}
  ~ConnectionContext() override { total_ -= subs.size(); }

  std::uint64_t subscribe(const Command& command, double rate_hz) override {
    auto period = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / rate_hz));
    auto id = ++next_id_;
    subs[id] = Subscription{command, period, Clock::now() + period};
    ++total_;
    return id;
  }

  bool unsubscribe(std::uint64_t id) override {
    if (subs.erase(id) == 0) return false;
    --total_;
    return true;
  }

  bool cancelled() const override { return stopping_.load() || peer_closed(fd_); }

  std::map<std::uint64_t, Subscription> subs;

 private:
  int fd_;
  const std::atomic<bool>& stopping_;
  std::atomic<std::size_t>& total_;
  std::uint64_t next_id_ = 0;
};

}  // namespace

Server::Server(DeviceAccess& device, ServerOptions options)
    : device_(device), options_(std::move(options)), dispatcher_(device_, options_.dispatch) {}

Server::~Server() { stop(); }

void Server::log(const std::string& msg) const {
  if (options_.verbose) std::fprintf(stderr, "[measurer] %s\n", msg.c_str());
}

void Server::start() {
  listener_ = net::tcp_listen(options_.listen);
  port_ = net::local_port(listener_);
  stopping_ = false;
  acceptor_ = std::thread([this] { accept_loop(); });
}

void Server::stop() {
  if (stopping_.exchange(true)) return;
  listener_.shutdown();
  if (acceptor_.joinable()) acceptor_.join();
  {
    std::lock_guard lk(conns_mu_);
    for (auto& c : conns_) c->socket.shutdown();
  }
  reap(true);
  listener_.close();
}

void Server::reap(bool all) {
  std::list<std::unique_ptr<Connection>> done;
  {
    std::lock_guard lk(conns_mu_);
    for (auto it = conns_.begin(); it != conns_.end();) {
      if (all || (*it)->finished) {
        done.push_back(std::move(*it));
        it = conns_.erase(it);
      } else {
        ++it;
      }
    }
  }
  for (auto& c : done)
    if (c->thread.joinable()) c->thread.join();
}

void Server::accept_loop() {
  while (!stopping_) {
    if (!net::wait_readable(listener_, kPollSlice)) {
      reap(false);
      continue;
    }
    int fd = ::accept4(listener_.fd(), nullptr, nullptr, SOCK_CLOEXEC);
    if (fd < 0) continue;
    ++accepted_;
    auto conn = std::make_unique<Connection>();
    conn->socket = net::Socket(fd);
    auto* raw = conn.get();
    {
      std::lock_guard lk(conns_mu_);
      conns_.push_back(std::move(conn));
    }
    raw->thread = std::thread([this, raw] {
      ++active_;
      handle(*raw);
      raw->socket.shutdown();
      --active_;
      raw->finished = true;
    });
    reap(false);
  }
}

void Server::handle(Connection& conn) {
  const auto& sock = conn.socket;
  set_io_timeouts(sock.fd(), std::chrono::seconds(5));

  channel::SessionConfig cfg;
  cfg.encrypt = options_.encrypt;
  cfg.skew_window_ms = options_.skew_window_ms;

  std::optional<channel::Session> session;
  try {
    if (options_.encrypt) {
      if (!net::wait_readable(sock, kHandshakeWait)) return;
      auto hello = channel::read_frame(sock);
      try {
        auto accepted = channel::accept_client_hello(hello, options_.psks, cfg);
        channel::write_frame(sock, accepted.server_hello);
        session.emplace(std::move(accepted.session));
      } catch (const Error& e) {
        send_handshake_error(sock, e);
        throw;
      }
    } else {
      session.emplace(channel::SessionId{}, channel::ascon::Key{}, cfg);
    }
  } catch (const Error& e) {
    ++protocol_errors_;
    log(std::string("handshake failed: ") + std::string(e.name()) + ": " + e.what());
    return;
  }

  ConnectionContext ctx(sock.fd(), stopping_, subscriptions_);
  const auto epoch = device_.reset_count();
  auto last_activity = Clock::now();

  auto send_text = [&](const std::string& text, std::uint8_t extra) {
    auto f = session->seal(Direction::ToListener, as_bytes(text), extra);
    channel::write_frame(sock, f);
  };

  try {
    while (!stopping_) {
      if (device_.reset_count() != epoch) {
        log("device reset: closing session");
        return;
      }
      auto now = Clock::now();
      auto wake = now + kPollSlice;
      for (const auto& [id, s] : ctx.subs) wake = std::min(wake, s.next_due);
      auto wait = std::chrono::ceil<std::chrono::milliseconds>(wake - now);

      if (net::wait_readable(sock, std::max(wait, std::chrono::milliseconds(0)))) {
        auto frame = channel::read_frame(sock);
        auto payload = session->open(Direction::ToMeasurer, frame);
        last_activity = Clock::now();
        auto response = dispatcher_.handle(to_string(payload), &ctx);
        send_text(response, 0);
      }

      now = Clock::now();
      for (auto& [id, s] : ctx.subs) {
        if (s.next_due > now) continue;
        std::string text;
        try {
          text = dispatcher_.stream_record(id, s.command).to_text();
        } catch (const Error& e) {
          text = error_text(e);
        }
        send_text(text, channel::flags::kStream);
        // Fixed schedule, no drift; skip beats that are already in the past.
        s.next_due += s.period;
        if (s.next_due + s.period < now) s.next_due = now + s.period;
      }

      if (ctx.subs.empty() && Clock::now() - last_activity > options_.idle_timeout) {
        send_text(error_text(ErrorCode::Timeout, "idle timeout"), 0);
        log("idle timeout");
        return;
      }
    }
  } catch (const Error& e) {
    if (e.code() != ErrorCode::ConnectionLost) ++protocol_errors_;
    log(std::string("closing connection: ") + std::string(e.name()) + ": " + e.what());
  }
}

}  // namespace diver::measurer
