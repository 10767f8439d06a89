#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <string>

#include "diver/channel/ascon.hpp"
#include "diver/channel/frame.hpp"

namespace diver::channel {

enum class Direction : std::uint8_t {
  ToMeasurer = 0,  // requests from the listener
  ToListener = 1,  // responses and stream frames from the measurer
};

using Clock = std::function<std::uint64_t()>;
/// Wall-clock epoch milliseconds.
std::uint64_t system_clock_ms();

inline constexpr std::uint64_t kDefaultSkewWindowMs = 30'000;

struct SessionConfig {
  bool encrypt = true;
  std::uint64_t skew_window_ms = kDefaultSkewWindowMs;
  Clock clock = system_clock_ms;
};

/// session_id(8) || direction(1) || seq(7)
ascon::Nonce make_nonce(const SessionId& id, Direction dir, std::uint64_t seq);

/// Per-connection replay-protection and keying state.
///
/// seal() may be called concurrently with open(); each is otherwise confined
/// to one thread per direction.
class Session {
 public:
  Session(SessionId id, ascon::Key key, SessionConfig config = {});
  Session(Session&& other) noexcept { *this = std::move(other); }
  Session& operator=(Session&& other) noexcept {
    id_ = other.id_;
    key_ = other.key_;
    config_ = std::move(other.config_);
    for (std::size_t i = 0; i < 2; ++i) {
      tx_seq_[i] = other.tx_seq_[i].load();
      last_rx_[i] = other.last_rx_[i];
    }
    return *this;
  }

  const SessionId& id() const { return id_; }
  bool encrypted() const { return config_.encrypt; }

  Frame seal(Direction dir, ByteView payload, std::uint8_t extra_flags = 0);
  /// Verifies and unwraps a frame travelling in `dir`. Throws AuthFailure,
  /// ReplayDetected or StaleTimestamp; state is only updated on success.
  Bytes open(Direction dir, const Frame& frame);

  std::uint64_t last_rx_seq(Direction dir) const { return last_rx_[index(dir)]; }
  std::uint64_t next_tx_seq(Direction dir) const { return tx_seq_[index(dir)].load() + 1; }

 private:
  static std::size_t index(Direction d) { return static_cast<std::size_t>(d); }

  SessionId id_{};
  ascon::Key key_{};
  SessionConfig config_;
  std::atomic<std::uint64_t> tx_seq_[2]{0, 0};
  std::uint64_t last_rx_[2]{0, 0};
};

/// Pre-shared keys indexed by identifier.
class PskTable {
 public:
  void add(std::string id, ascon::Key key) { keys_[std::move(id)] = key; }
  const ascon::Key* find(const std::string& id) const {
    auto it = keys_.find(id);
    return it == keys_.end() ? nullptr : &it->second;
  }

 private:
  std::map<std::string, ascon::Key> keys_;
};

struct ClientHello {
  std::string psk_id;
  ascon::Nonce client_nonce{};
};

/// Handshake key: the Ascon tag over an empty message under the PSK with the
/// client's random nonce. Every handshake therefore keys its bootstrap frames
/// (nonce 0 || dir || 0) with a fresh key.
ascon::Key handshake_key(const ascon::Key& psk, const ascon::Nonce& client_nonce);

Frame make_client_hello(const ClientHello& hello, const ascon::Key& psk, const Clock& clock = system_clock_ms);

struct Accepted {
  Session session;
  Frame server_hello;
};

/// Server side. Throws AuthFailure for unknown psk_id or a failed proof.
Accepted accept_client_hello(const Frame& hello, const PskTable& psks, const SessionConfig& config);

/// Client side: validates the server hello and returns the established session.
Session finish_handshake(const Frame& server_hello, const ClientHello& hello, const ascon::Key& psk,
                         const SessionConfig& config);

ascon::Nonce random_nonce();
SessionId random_session_id();

}  // namespace diver::channel
