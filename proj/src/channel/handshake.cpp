#include <openssl/rand.h>

#include <cstring>

#include "diver/channel/session.hpp"
#include "diver/util/error.hpp"

namespace diver::channel {

namespace {

constexpr std::string_view kHandshakeLabel = "DIVER handshake key v1";
constexpr std::uint8_t kHelloFlags = flags::kEncrypted | flags::kHandshake;

void random_fill(std::span<std::uint8_t> out) {
  if (RAND_bytes(out.data(), static_cast<int>(out.size())) != 1)
    throw Error(ErrorCode::DeviceFault, "random source unavailable");
}

void check_skew(std::uint64_t ts, const SessionConfig& config) {
  auto now = config.clock ? config.clock() : system_clock_ms();
  auto skew = now > ts ? now - ts : ts - now;
  if (skew > config.skew_window_ms) throw Error(ErrorCode::StaleTimestamp, "handshake timestamp outside skew window");
}

Bytes hello_ad(const Frame& f) {
  Bytes ad = f.header();
  ad.insert(ad.end(), f.payload.begin(), f.payload.end());
  return ad;
}

}  // namespace

ascon::Nonce random_nonce() {
  ascon::Nonce n{};
  random_fill(n);
  return n;
}

SessionId random_session_id() {
  SessionId id{};
  do {
    random_fill(id);
  } while (id == SessionId{});
  return id;
}

ascon::Key handshake_key(const ascon::Key& psk, const ascon::Nonce& client_nonce) {
  auto tag = ascon::encrypt(psk, client_nonce, as_bytes(kHandshakeLabel), {});
  return ascon::key_from(tag);
}

Frame make_client_hello(const ClientHello& hello, const ascon::Key& psk, const Clock& clock) {
  if (hello.psk_id.empty() || hello.psk_id.size() > 255)
    throw Error(ErrorCode::BadArgument, "psk_id must be 1..255 bytes");
  Frame f;
  f.flags = kHelloFlags;
  f.timestamp_ms = clock ? clock() : system_clock_ms();
  f.payload.push_back(static_cast<std::uint8_t>(hello.psk_id.size()));
  f.payload.insert(f.payload.end(), hello.psk_id.begin(), hello.psk_id.end());
  f.payload.insert(f.payload.end(), hello.client_nonce.begin(), hello.client_nonce.end());
  auto k = handshake_key(psk, hello.client_nonce);
  auto tag = ascon::encrypt(k, make_nonce(SessionId{}, Direction::ToMeasurer, 0), hello_ad(f), {});
  std::copy(tag.begin(), tag.end(), f.tag.begin());
  return f;
}

Accepted accept_client_hello(const Frame& hello, const PskTable& psks, const SessionConfig& config) {
  if (hello.flags != kHelloFlags || hello.seq != 0 || hello.session_id != SessionId{})
    throw Error(ErrorCode::AuthFailure, "expected a client hello");
  const auto& p = hello.payload;
  if (p.empty() || p.size() != 1u + p[0] + ascon::kNonceSize)
    throw Error(ErrorCode::AuthFailure, "malformed client hello");
  ClientHello ch;
  ch.psk_id.assign(p.begin() + 1, p.begin() + 1 + p[0]);
  std::memcpy(ch.client_nonce.data(), p.data() + 1 + p[0], ascon::kNonceSize);

  const auto* psk = psks.find(ch.psk_id);
  if (psk == nullptr) throw Error(ErrorCode::AuthFailure, "unknown psk_id '" + ch.psk_id + "'");
  auto k = handshake_key(*psk, ch.client_nonce);
  ascon::decrypt(k, make_nonce(SessionId{}, Direction::ToMeasurer, 0), hello_ad(hello), hello.tag);
  check_skew(hello.timestamp_ms, config);

  auto sid = random_session_id();
  Frame reply;
  reply.flags = kHelloFlags;
  reply.timestamp_ms = config.clock ? config.clock() : system_clock_ms();
  reply.payload.resize(sid.size());
  auto ct = ascon::encrypt(k, make_nonce(SessionId{}, Direction::ToListener, 0), reply.header(), sid);
  std::copy(ct.end() - ascon::kTagSize, ct.end(), reply.tag.begin());
  reply.payload.assign(ct.begin(), ct.end() - ascon::kTagSize);
  return Accepted{Session(sid, *psk, config), std::move(reply)};
}

Session finish_handshake(const Frame& server_hello, const ClientHello& hello, const ascon::Key& psk,
                         const SessionConfig& config) {
  if (server_hello.flags != kHelloFlags || server_hello.seq != 0 ||
      server_hello.session_id != SessionId{} || server_hello.payload.size() != 8)
    throw Error(ErrorCode::AuthFailure, "expected a server hello");
  auto k = handshake_key(psk, hello.client_nonce);
  Bytes ct = server_hello.payload;
  ct.insert(ct.end(), server_hello.tag.begin(), server_hello.tag.end());
  auto sid_bytes = ascon::decrypt(k, make_nonce(SessionId{}, Direction::ToListener, 0), server_hello.header(), ct);
  check_skew(server_hello.timestamp_ms, config);
  SessionId sid{};
  std::copy(sid_bytes.begin(), sid_bytes.end(), sid.begin());
  return Session(sid, psk, config);
}

}  // namespace diver::channel
