#include "diver/channel/session.hpp"

#include <chrono>

#include "diver/util/error.hpp"

namespace diver::channel {

std::uint64_t system_clock_ms() {
  return static_cast<std::uint64_t>(std::chrono::duration_cast<std::chrono::milliseconds>(
                                        std::chrono::system_clock::now().time_since_epoch())
                                        .count());
}

ascon::Nonce make_nonce(const SessionId& id, Direction dir, std::uint64_t seq) {
  ascon::Nonce n{};
  std::copy(id.begin(), id.end(), n.begin());
  n[8] = static_cast<std::uint8_t>(dir);
  for (int i = 0; i < 7; ++i) n[9 + i] = static_cast<std::uint8_t>(seq >> (8 * (6 - i)));
  return n;
}

Session::Session(SessionId id, ascon::Key key, SessionConfig config)
    : id_(id), key_(key), config_(std::move(config)) {
  if (!config_.clock) config_.clock = system_clock_ms;
}

Frame Session::seal(Direction dir, ByteView payload, std::uint8_t extra_flags) {
  auto seq = ++tx_seq_[index(dir)];
  if (seq > kMaxSeq) throw Error(ErrorCode::BadFrame, "sequence space exhausted");
  Frame f;
  f.flags = static_cast<std::uint8_t>(extra_flags & ~flags::kEncrypted);
  if (config_.encrypt) f.flags |= flags::kEncrypted;
  f.session_id = id_;
  f.seq = seq;
  f.timestamp_ms = config_.clock();
  if (!config_.encrypt) {
    f.payload.assign(payload.begin(), payload.end());
    return f;
  }
  f.payload.resize(payload.size());  // header carries the plaintext length
  auto ct = ascon::encrypt(key_, make_nonce(id_, dir, seq), f.header(), payload);
  std::copy(ct.end() - ascon::kTagSize, ct.end(), f.tag.begin());
  ct.resize(ct.size() - ascon::kTagSize);
  f.payload = std::move(ct);
  return f;
}

Bytes Session::open(Direction dir, const Frame& frame) {
  if (frame.session_id != id_)
    throw Error(ErrorCode::ReplayDetected, "frame belongs to a different session");
  if (frame.encrypted() != config_.encrypt)
    throw Error(ErrorCode::AuthFailure, "frame protection does not match session mode");

  Bytes payload;
  if (frame.encrypted()) {
    Bytes ct = frame.payload;
    ct.insert(ct.end(), frame.tag.begin(), frame.tag.end());
    payload = ascon::decrypt(key_, make_nonce(id_, dir, frame.seq), frame.header(), ct);
  } else {
    payload = frame.payload;
  }

  auto& last = last_rx_[index(dir)];
  if (frame.seq <= last)
    throw Error(ErrorCode::ReplayDetected,
                "sequence " + std::to_string(frame.seq) + " <= " + std::to_string(last));
  auto now = config_.clock();
  auto skew = now > frame.timestamp_ms ? now - frame.timestamp_ms : frame.timestamp_ms - now;
  if (skew > config_.skew_window_ms)
    throw Error(ErrorCode::StaleTimestamp, "timestamp outside skew window");
  last = frame.seq;
  return payload;
}

}  // namespace diver::channel
