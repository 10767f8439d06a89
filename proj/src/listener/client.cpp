#include "diver/listener/client.hpp"

#include "diver/channel/frame.hpp"

namespace diver::listener {

using channel::Direction;
using measurer::RecordSet;

TcpClient::TcpClient(ClientOptions options) : options_(std::move(options)) {
  try {
    sock_ = net::tcp_connect(options_.device);
  } catch (const Error& e) {
    throw Error(ErrorCode::ConnectionLost, "cannot reach " + options_.device.str() + ": " + e.what());
  }
  channel::SessionConfig cfg;
  cfg.encrypt = options_.encrypt;
  cfg.skew_window_ms = options_.skew_window_ms;
  if (!options_.encrypt) {
    session_.emplace(channel::SessionId{}, channel::ascon::Key{}, cfg);
  } else {
    channel::ClientHello hello{options_.psk_id, channel::random_nonce()};
    channel::write_frame(sock_, channel::make_client_hello(hello, options_.psk));
    if (!net::wait_readable(sock_, options_.response_timeout))
      throw Error(ErrorCode::Timeout, "no server hello");
    auto reply = channel::read_frame(sock_);
    // A refused handshake comes back as a plain `#error` frame.
    if (!reply.encrypted()) measurer::parse_response(to_string(reply.payload));
    session_.emplace(channel::finish_handshake(reply, hello, options_.psk, cfg));
  }
  reader_ = std::thread([this] { reader_loop(); });
}

TcpClient::~TcpClient() { close(); }

void TcpClient::close() {
  closed_ = true;
  sock_.shutdown();
  if (reader_.joinable() && reader_.get_id() != std::this_thread::get_id()) reader_.join();
  cv_.notify_all();
}

void TcpClient::reader_loop() {
  try {
    while (!closed_) {
      auto frame = channel::read_frame(sock_);
      auto text = to_string(session_->open(Direction::ToListener, frame));
      if (frame.stream()) {
        if (measurer::is_error_text(text)) continue;  // a failed emission; the stream goes on
        auto rs = RecordSet::parse(text);
        if (!rs.has_column("sub_id") || rs.rows.empty()) continue;
        auto id = std::stoull(rs.at(0, "sub_id"));
        std::lock_guard hl(handler_mu_);
        StreamHandler h;
        {
          std::lock_guard lk(mu_);
          auto it = handlers_.find(id);
          if (it != handlers_.end()) h = it->second;
        }
        if (h)
          h(rs);
        else
          ++unrouted_;
        continue;
      }
      std::lock_guard lk(mu_);
      // Register the handler before reading on, so the first stream frame
      // for a fresh subscription is not lost.
      if (pending_handler_ && !measurer::is_error_text(text)) {
        auto ack = RecordSet::parse(text);
        if (ack.has_column("sub_id") && !ack.rows.empty())
          handlers_[std::stoull(ack.at(0, "sub_id"))] = std::move(pending_handler_);
        pending_handler_ = nullptr;
      }
      responses_.push_back(std::move(text));
      cv_.notify_all();
    }
  } catch (const std::exception& e) {
    std::lock_guard lk(mu_);
    if (close_reason_.empty()) close_reason_ = e.what();
  }
  closed_ = true;
  cv_.notify_all();
}

std::string TcpClient::roundtrip(const std::string& text, StreamHandler pending) {
  std::lock_guard rl(request_mu_);
  if (closed_) throw Error(ErrorCode::ConnectionLost, "connection closed");
  {
    std::lock_guard lk(mu_);
    responses_.clear();
    pending_handler_ = std::move(pending);
  }
  channel::write_frame(sock_, session_->seal(Direction::ToMeasurer, as_bytes(text)));
  std::unique_lock lk(mu_);
  if (!cv_.wait_for(lk, options_.response_timeout, [&] { return !responses_.empty() || closed_; }))
    throw Error(ErrorCode::Timeout, "no response to '" + text + "'");
  if (responses_.empty()) throw Error(ErrorCode::ConnectionLost, "connection closed: " + close_reason_);
  auto r = std::move(responses_.front());
  responses_.pop_front();
  pending_handler_ = nullptr;
  return r;
}

std::string TcpClient::request_text(const std::string& text) { return roundtrip(text, nullptr); }

std::uint64_t TcpClient::subscribe(const std::string& text, StreamHandler on_record) {
  auto ack = measurer::parse_response(roundtrip(text, std::move(on_record)));
  if (!ack.has_column("sub_id") || ack.rows.empty())
    throw Error(ErrorCode::BadArgument, "'" + text + "' did not start a stream");
  return std::stoull(ack.at(0, "sub_id"));
}

void TcpClient::unsubscribe(std::uint64_t sub_id) {
  {
    std::lock_guard lk(mu_);
    handlers_.erase(sub_id);
  }
  // Wait out a handler that is running right now.
  { std::lock_guard hl(handler_mu_); }
  if (!closed_) request_text("unsubscribe sub_id=" + std::to_string(sub_id));
}

void TcpClient::elapse(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

}  // namespace diver::listener
