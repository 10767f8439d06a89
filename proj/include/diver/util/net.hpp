#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "diver/util/bytes.hpp"

namespace diver::net {

struct Endpoint {
  std::string host;
  std::uint16_t port = 0;

  static Endpoint parse(std::string_view text);  // "host:port"
  std::string str() const;
};

/// Owning file descriptor.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept : fd_(other.release()) {}
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  int fd() const { return fd_; }
  bool valid() const { return fd_ >= 0; }
  int release() {
    int f = fd_;
    fd_ = -1;
    return f;
  }
  void close();
  /// Wakes any thread blocked on this socket without releasing the descriptor.
  void shutdown();

 private:
  int fd_ = -1;
};

Socket tcp_listen(const Endpoint& ep, int backlog = 16);
/// Port the socket is bound to (useful after binding port 0).
std::uint16_t local_port(const Socket& s);
Socket tcp_connect(const Endpoint& ep, std::chrono::milliseconds timeout = std::chrono::seconds(5));

/// Returns true when the descriptor is readable before the timeout elapses.
bool wait_readable(const Socket& s, std::chrono::milliseconds timeout);

void send_all(const Socket& s, ByteView data);
/// Reads exactly out.size() bytes; throws ConnectionLost on EOF or error.
void recv_exact(const Socket& s, std::span<std::uint8_t> out);

Socket udp_bind(const Endpoint& ep);
Socket udp_connect(const Endpoint& ep);

}  // namespace diver::net
