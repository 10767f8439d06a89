#include <gtest/gtest.h>

#include <map>

#include <mutex>
#include <random>
#include <set>

#include "diver/channel/frame.hpp"
#include "diver/channel/session.hpp"
#include "diver/util/error.hpp"

using namespace diver;
using namespace diver::channel;

namespace {

ascon::Key test_psk() {
  return ascon::key_from(from_hex("000102030405060708090a0b0c0d0e0f"));
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Unknown;
}

std::pair<Session, Session> connected_pair(SessionConfig cfg = {}) {
  PskTable psks;
  psks.add("ops", test_psk());
  ClientHello hello{"ops", random_nonce()};
  auto frame = make_client_hello(hello, test_psk(), cfg.clock);
  auto accepted = accept_client_hello(Frame::decode(frame.encode()), psks, cfg);
  auto client = finish_handshake(Frame::decode(accepted.server_hello.encode()), hello, test_psk(), cfg);
  return {std::move(accepted.session), std::move(client)};
}

}  // namespace

TEST(Frame, EncodeDecodeRoundTrip) {
  Frame f;
  f.flags = flags::kEncrypted | flags::kStream;
  f.session_id = {1, 2, 3, 4, 5, 6, 7, 8};
  f.seq = kMaxSeq;
  f.timestamp_ms = 0x0102030405060708ULL;
  f.payload = {9, 9, 9};
  f.tag[0] = 0xaa;
  auto wire = f.encode();
  ASSERT_EQ(wire.size(), kHeaderSize + 3 + 16);
  EXPECT_EQ(std::string(wire.begin(), wire.begin() + 4), "DIVR");
  auto g = Frame::decode(wire);
  EXPECT_EQ(g.encode(), wire);
  EXPECT_EQ(g.seq, kMaxSeq);
}

TEST(Frame, RejectsMalformedHeaders) {
  Frame f;
  f.payload = {1};
  auto wire = f.encode();
  auto bad = wire;
  bad[0] = 'X';
  EXPECT_EQ(code_of([&] { Frame::decode(bad); }), ErrorCode::BadMagic);
  bad = wire;
  bad[4] = 2;
  EXPECT_EQ(code_of([&] { Frame::decode(bad); }), ErrorCode::BadVersion);
  bad = wire;
  bad[5] = 0x80;
  EXPECT_EQ(code_of([&] { Frame::decode(bad); }), ErrorCode::BadFrame);
  bad = wire;
  bad.pop_back();
  EXPECT_EQ(code_of([&] { Frame::decode(bad); }), ErrorCode::BadFrame);
}

TEST(Session, NonceLayout) {
  SessionId id{1, 2, 3, 4, 5, 6, 7, 8};
  auto n = make_nonce(id, Direction::ToListener, 0x0a0b0c);
  // session_id(8) || direction(1) || seq(7)
  EXPECT_EQ(to_hex(n), "0102030405060708" "01" "000000000a0b0c");
}

TEST(Session, SealOpenBothModes) {
  for (bool enc : {true, false}) {
    SessionConfig cfg;
    cfg.encrypt = enc;
    SessionId id{7};
    Session tx(id, test_psk(), cfg), rx(id, test_psk(), cfg);
    auto f = tx.seal(Direction::ToMeasurer, as_bytes("tasks\n"));
    EXPECT_EQ(f.encrypted(), enc);
    EXPECT_EQ(f.seq, 1u);
    EXPECT_EQ(to_string(rx.open(Direction::ToMeasurer, Frame::decode(f.encode()))), "tasks\n");
    // Replays are rejected whether or not the payload is encrypted.
    EXPECT_EQ(code_of([&] { rx.open(Direction::ToMeasurer, f); }), ErrorCode::ReplayDetected);
  }
}

TEST(Session, ReplayAndTamperHundredTrials) {
  auto [server, client] = connected_pair();
  std::mt19937 rng(5);
  for (int i = 0; i < 100; ++i) {
    Bytes msg(1 + rng() % 200);
    for (auto& b : msg) b = static_cast<std::uint8_t>(rng());
    auto f = client.seal(Direction::ToMeasurer, msg);
    auto flipped = f.encode();
    auto bit = rng() % (flipped.size() * 8 - kHeaderSize * 8) + kHeaderSize * 8;
    flipped[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    EXPECT_EQ(code_of([&] { server.open(Direction::ToMeasurer, Frame::decode(flipped)); }), ErrorCode::AuthFailure);
    EXPECT_EQ(server.open(Direction::ToMeasurer, f), msg);
    EXPECT_EQ(code_of([&] { server.open(Direction::ToMeasurer, f); }), ErrorCode::ReplayDetected);
  }
}

TEST(Session, HeaderIsAuthenticated) {
  auto [server, client] = connected_pair();
  auto f = client.seal(Direction::ToMeasurer, as_bytes("x"));
  f.timestamp_ms += 1;
  EXPECT_EQ(code_of([&] { server.open(Direction::ToMeasurer, f); }), ErrorCode::AuthFailure);
}

TEST(Session, DirectionsAreIndependent) {
  auto [server, client] = connected_pair();
  auto f = client.seal(Direction::ToMeasurer, as_bytes("x"));
  EXPECT_EQ(code_of([&] { client.open(Direction::ToListener, f); }), ErrorCode::AuthFailure);
}

TEST(Session, StaleTimestampOutsideWindow) {
  std::uint64_t now = 1'000'000'000;
  SessionConfig cfg;
  cfg.clock = [&] { return now; };
  SessionId id{3};
  Session tx(id, test_psk(), cfg), rx(id, test_psk(), cfg);
  auto f = tx.seal(Direction::ToMeasurer, as_bytes("old"));
  now += 10 * 60 * 1000;  // ten minutes later, window 30 s
  EXPECT_EQ(code_of([&] { rx.open(Direction::ToMeasurer, f); }), ErrorCode::StaleTimestamp);
  EXPECT_EQ(rx.last_rx_seq(Direction::ToMeasurer), 0u);
  now -= 10 * 60 * 1000 - 30'000;  // exactly at the window edge
  EXPECT_NO_THROW(rx.open(Direction::ToMeasurer, f));
}

TEST(Session, ModeMismatchIsRejected) {
  SessionConfig plain;
  plain.encrypt = false;
  SessionId id{1};
  Session tx(id, test_psk(), plain), rx(id, test_psk());
  auto f = tx.seal(Direction::ToMeasurer, as_bytes("x"));
  EXPECT_EQ(code_of([&] { rx.open(Direction::ToMeasurer, f); }), ErrorCode::AuthFailure);
}

TEST(Session, RoundTripPropertyUpToOneMiB) {
  std::mt19937_64 rng(11);
  for (bool enc : {true, false}) {
    SessionConfig cfg;
    cfg.encrypt = enc;
    SessionId id{9};
    Session tx(id, test_psk(), cfg), rx(id, test_psk(), cfg);
    for (std::size_t len : {std::size_t{0}, std::size_t{1}, std::size_t{15}, std::size_t{16}, std::size_t{17},
                            std::size_t{4095}, std::size_t{1} << 20}) {
      Bytes p(len);
      for (auto& b : p) b = static_cast<std::uint8_t>(rng());
      EXPECT_EQ(rx.open(Direction::ToListener, Frame::decode(tx.seal(Direction::ToListener, p).encode())), p);
    }
  }
}

TEST(Handshake, DistinctSessionIds) {
  std::set<SessionId> ids;
  for (int i = 0; i < 64; ++i) {
    auto [server, client] = connected_pair();
    EXPECT_EQ(server.id(), client.id());
    EXPECT_NE(server.id(), SessionId{});
    ids.insert(server.id());
  }
  EXPECT_EQ(ids.size(), 64u);
}

TEST(Handshake, SequenceStartsAtOne) {
  auto [server, client] = connected_pair();
  EXPECT_EQ(client.next_tx_seq(Direction::ToMeasurer), 1u);
  EXPECT_EQ(server.next_tx_seq(Direction::ToListener), 1u);
}

TEST(Handshake, WrongPskOrUnknownIdFails) {
  PskTable psks;
  psks.add("ops", test_psk());
  auto wrong = test_psk();
  wrong[0] ^= 0xff;
  ClientHello hello{"ops", random_nonce()};
  EXPECT_EQ(code_of([&] { accept_client_hello(make_client_hello(hello, wrong), psks, {}); }), ErrorCode::AuthFailure);
  ClientHello stranger{"nobody", random_nonce()};
  EXPECT_EQ(code_of([&] { accept_client_hello(make_client_hello(stranger, test_psk()), psks, {}); }),
            ErrorCode::AuthFailure);
}

TEST(Handshake, ServerHelloFromAnotherHandshakeIsRejected) {
  PskTable psks;
  psks.add("ops", test_psk());
  ClientHello a{"ops", random_nonce()}, b{"ops", random_nonce()};
  auto accepted = accept_client_hello(make_client_hello(a, test_psk()), psks, {});
  EXPECT_EQ(code_of([&] { finish_handshake(accepted.server_hello, b, test_psk(), {}); }), ErrorCode::AuthFailure);
}

// A frame recorded in an earlier session is refused by the new one.
TEST(Handshake, OldSessionFramesRejectedAfterReconnect) {
  auto [server1, client1] = connected_pair();
  auto old = client1.seal(Direction::ToMeasurer, as_bytes("tasks"));
  ASSERT_NO_THROW(server1.open(Direction::ToMeasurer, old));
  auto [server2, client2] = connected_pair();
  EXPECT_EQ(code_of([&] { server2.open(Direction::ToMeasurer, old); }), ErrorCode::ReplayDetected);
}

TEST(Session, NoncesNeverRepeatUnderOneKey) {
  std::mutex mu;
  std::map<std::pair<ascon::Key, ascon::Nonce>, std::string> seen;
  std::size_t dupes = 0;
  ascon::set_encrypt_observer([&](const ascon::Key& k, const ascon::Nonce& n, ByteView ad, ByteView pt) {
    std::lock_guard lk(mu);
    auto inputs = to_hex(ad) + "/" + to_hex(pt);
    auto [it, fresh] = seen.emplace(std::pair{k, n}, inputs);
    if (!fresh && it->second != inputs) ++dupes;
  });
  for (int s = 0; s < 8; ++s) {
    auto [server, client] = connected_pair();
    for (int i = 0; i < 50; ++i) {
      server.open(Direction::ToMeasurer, client.seal(Direction::ToMeasurer, as_bytes("q")));
      client.open(Direction::ToListener, server.seal(Direction::ToListener, as_bytes("r")));
    }
  }
  ascon::set_encrypt_observer(nullptr);
  EXPECT_EQ(dupes, 0u);
  EXPECT_GT(seen.size(), 800u);
}
