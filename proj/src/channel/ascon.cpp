#include "diver/channel/ascon.hpp"

#include <atomic>
#include <cstring>
#include <mutex>

#include "diver/util/error.hpp"

namespace diver::channel::ascon {

namespace {

std::atomic<bool> g_observed{false};
std::mutex g_observer_mutex;
EncryptObserver g_observer;

constexpr std::uint64_t kIv = 0x00001000808c0001ULL;
constexpr std::size_t kRate = 16;

struct State {
  std::uint64_t x[5];
};

constexpr std::uint64_t rotr(std::uint64_t v, int n) { return (v >> n) | (v << (64 - n)); }

void round(State& s, std::uint8_t c) {
  auto& x = s.x;
  x[2] ^= c;
  // substitution layer
  x[0] ^= x[4];
  x[4] ^= x[3];
  x[2] ^= x[1];
  std::uint64_t t0 = ~x[0] & x[1];
  std::uint64_t t1 = ~x[1] & x[2];
  std::uint64_t t2 = ~x[2] & x[3];
  std::uint64_t t3 = ~x[3] & x[4];
  std::uint64_t t4 = ~x[4] & x[0];
  x[0] ^= t1;
  x[1] ^= t2;
  x[2] ^= t3;
  x[3] ^= t4;
  x[4] ^= t0;
  x[1] ^= x[0];
  x[0] ^= x[4];
  x[3] ^= x[2];
  x[2] = ~x[2];
  // linear diffusion layer
  x[0] ^= rotr(x[0], 19) ^ rotr(x[0], 28);
  x[1] ^= rotr(x[1], 61) ^ rotr(x[1], 39);
  x[2] ^= rotr(x[2], 1) ^ rotr(x[2], 6);
  x[3] ^= rotr(x[3], 10) ^ rotr(x[3], 17);
  x[4] ^= rotr(x[4], 7) ^ rotr(x[4], 41);
}

constexpr std::uint8_t kRoundConstants[12] = {0xf0, 0xe1, 0xd2, 0xc3, 0xb4, 0xa5,
                                              0x96, 0x87, 0x78, 0x69, 0x5a, 0x4b};

void permute(State& s, int rounds) {
  for (int i = 12 - rounds; i < 12; ++i) round(s, kRoundConstants[i]);
}

std::uint64_t load(const std::uint8_t* p, std::size_t n) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return v;
}

void store(std::uint8_t* p, std::uint64_t v, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

constexpr std::uint64_t pad(std::size_t i) { return 0x01ULL << (8 * i); }

State initialize(const Key& key, const Nonce& nonce, std::uint64_t& k0, std::uint64_t& k1) {
  k0 = load(key.data(), 8);
  k1 = load(key.data() + 8, 8);
  State s{{kIv, k0, k1, load(nonce.data(), 8), load(nonce.data() + 8, 8)}};
  permute(s, 12);
  s.x[3] ^= k0;
  s.x[4] ^= k1;
  return s;
}

void absorb_ad(State& s, ByteView ad) {
  if (!ad.empty()) {
    const std::uint8_t* p = ad.data();
    std::size_t n = ad.size();
    while (n >= kRate) {
      s.x[0] ^= load(p, 8);
      s.x[1] ^= load(p + 8, 8);
      permute(s, 8);
      p += kRate;
      n -= kRate;
    }
    // final (possibly empty) padded block
    if (n >= 8) {
      s.x[0] ^= load(p, 8);
      s.x[1] ^= load(p + 8, n - 8);
      s.x[1] ^= pad(n - 8);
    } else {
      s.x[0] ^= load(p, n);
      s.x[0] ^= pad(n);
    }
    permute(s, 8);
  }
  s.x[4] ^= 0x8000000000000000ULL;  // domain separation
}

void finalize(State& s, std::uint64_t k0, std::uint64_t k1, std::uint8_t* tag) {
  s.x[2] ^= k0;
  s.x[3] ^= k1;
  permute(s, 12);
  store(tag, s.x[3] ^ k0, 8);
  store(tag + 8, s.x[4] ^ k1, 8);
}

}  // namespace

Key key_from(ByteView bytes) {
  if (bytes.size() != kKeySize) throw Error(ErrorCode::BadArgument, "Ascon key must be 16 bytes");
  Key k{};
  std::memcpy(k.data(), bytes.data(), kKeySize);
  return k;
}

Nonce nonce_from(ByteView bytes) {
  if (bytes.size() != kNonceSize) throw Error(ErrorCode::BadArgument, "Ascon nonce must be 16 bytes");
  Nonce n{};
  std::memcpy(n.data(), bytes.data(), kNonceSize);
  return n;
}

void set_encrypt_observer(EncryptObserver observer) {
  std::lock_guard lock(g_observer_mutex);
  g_observer = std::move(observer);
  g_observed = static_cast<bool>(g_observer);
}

Bytes encrypt(const Key& key, const Nonce& nonce, ByteView ad, ByteView plaintext) {
  if (g_observed.load(std::memory_order_relaxed)) {
    std::lock_guard lock(g_observer_mutex);
    if (g_observer) g_observer(key, nonce, ad, plaintext);
  }
  std::uint64_t k0, k1;
  State s = initialize(key, nonce, k0, k1);
  absorb_ad(s, ad);

  Bytes out(plaintext.size() + kTagSize);
  const std::uint8_t* m = plaintext.data();
  std::uint8_t* c = out.data();
  std::size_t n = plaintext.size();
  while (n >= kRate) {
    s.x[0] ^= load(m, 8);
    s.x[1] ^= load(m + 8, 8);
    store(c, s.x[0], 8);
    store(c + 8, s.x[1], 8);
    permute(s, 8);
    m += kRate;
    c += kRate;
    n -= kRate;
  }
  if (n >= 8) {
    s.x[0] ^= load(m, 8);
    s.x[1] ^= load(m + 8, n - 8);
    store(c, s.x[0], 8);
    store(c + 8, s.x[1], n - 8);
    s.x[1] ^= pad(n - 8);
  } else {
    s.x[0] ^= load(m, n);
    store(c, s.x[0], n);
    s.x[0] ^= pad(n);
  }
  c += n;
  finalize(s, k0, k1, c);
  return out;
}

Bytes decrypt(const Key& key, const Nonce& nonce, ByteView ad, ByteView ciphertext_and_tag) {
  if (ciphertext_and_tag.size() < kTagSize)
    throw Error(ErrorCode::AuthFailure, "ciphertext shorter than tag");
  std::uint64_t k0, k1;
  State s = initialize(key, nonce, k0, k1);
  absorb_ad(s, ad);

  std::size_t clen = ciphertext_and_tag.size() - kTagSize;
  Bytes out(clen);
  const std::uint8_t* c = ciphertext_and_tag.data();
  std::uint8_t* m = out.data();
  std::size_t n = clen;
  while (n >= kRate) {
    std::uint64_t c0 = load(c, 8), c1 = load(c + 8, 8);
    store(m, s.x[0] ^ c0, 8);
    store(m + 8, s.x[1] ^ c1, 8);
    s.x[0] = c0;
    s.x[1] = c1;
    permute(s, 8);
    m += kRate;
    c += kRate;
    n -= kRate;
  }
  auto clear_low = [](std::uint64_t v, std::size_t bytes) {
    return bytes == 8 ? 0 : (bytes == 0 ? v : v & ~((1ULL << (8 * bytes)) - 1));
  };
  if (n >= 8) {
    std::uint64_t c0 = load(c, 8);
    std::uint64_t c1 = load(c + 8, n - 8);
    store(m, s.x[0] ^ c0, 8);
    store(m + 8, s.x[1] ^ c1, n - 8);
    s.x[0] = c0;
    s.x[1] = clear_low(s.x[1], n - 8) | c1;
    s.x[1] ^= pad(n - 8);
  } else {
    std::uint64_t c0 = load(c, n);
    store(m, s.x[0] ^ c0, n);
    s.x[0] = clear_low(s.x[0], n) | c0;
    s.x[0] ^= pad(n);
  }
  c += n;

  std::uint8_t tag[kTagSize];
  finalize(s, k0, k1, tag);
  std::uint8_t diff = 0;
  for (std::size_t i = 0; i < kTagSize; ++i) diff |= static_cast<std::uint8_t>(tag[i] ^ c[i]);
  if (diff != 0) {
    std::fill(out.begin(), out.end(), 0);
    throw Error(ErrorCode::AuthFailure, "authentication tag mismatch");
  }
  return out;
}

}  // namespace diver::channel::ascon
