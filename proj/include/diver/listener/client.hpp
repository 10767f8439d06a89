#pragma once

#include <atomic>
#include <condition_variable>
#include <deque>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include "diver/channel/session.hpp"
#include "diver/listener/link.hpp"
#include "diver/util/net.hpp"

namespace diver::listener {

struct ClientOptions {
  net::Endpoint device;
  bool encrypt = true;
  std::string psk_id = "ops";
  channel::ascon::Key psk{};
  std::chrono::milliseconds response_timeout{30'000};
  std::uint64_t skew_window_ms = channel::kDefaultSkewWindowMs;
};

/// Protocol client. A reader thread demultiplexes stream frames (by sub_id)
/// from responses; requests are serialized.
class TcpClient : public Link {
 public:
  /// Connects and completes the handshake. Throws AuthFailure when the
  /// measurer refuses the key, ConnectionLost when unreachable.
  explicit TcpClient(ClientOptions options);
  ~TcpClient() override;

  std::string request_text(const std::string& text) override;
  std::uint64_t subscribe(const std::string& text, StreamHandler on_record) override;
  void unsubscribe(std::uint64_t sub_id) override;
  void elapse(std::chrono::milliseconds d) override;
  bool connected() const override { return !closed_; }

  void close();
  /// Stream frames whose sub_id has no handler on this client.
  std::uint64_t unrouted_stream_frames() const { return unrouted_.load(); }

 private:
  void reader_loop();
  std::string roundtrip(const std::string& text, StreamHandler pending);

  ClientOptions options_;
  net::Socket sock_;
  std::optional<channel::Session> session_;
  std::thread reader_;
  std::atomic<bool> closed_{false};
  std::atomic<std::uint64_t> unrouted_{0};

  std::mutex request_mu_;  // one outstanding request at a time
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::string> responses_;
  std::string close_reason_;
  StreamHandler pending_handler_;
  std::map<std::uint64_t, StreamHandler> handlers_;
  std::mutex handler_mu_;  // held while a stream handler runs
};

}  // namespace diver::listener
