#include <gtest/gtest.h>

#include <chrono>
#include <fstream>
#include <sstream>

#include "diver/channel/ascon.hpp"
#include "diver/util/error.hpp"

using namespace diver;
namespace ascon = diver::channel::ascon;

namespace {

struct Kat {
  Bytes key, nonce, ad, pt, ct;
};

// One record per line: key,nonce,ad,pt,ct (hex; ct includes the tag).
std::vector<Kat> load_kats() {
  std::ifstream in(std::string(DIVER_TEST_DATA) + "/ascon_aead128_kat.txt");
  std::vector<Kat> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    while (f.size() < 5) f.emplace_back();
    out.push_back({from_hex(f[0]), from_hex(f[1]), from_hex(f[2]), from_hex(f[3]), from_hex(f[4])});
  }
  return out;
}

ascon::Key key_of(const Bytes& b) { return ascon::key_from(b); }
ascon::Nonce nonce_of(const Bytes& b) { return ascon::nonce_from(b); }

}  // namespace

TEST(AsconKat, EncryptMatchesReferenceVectors) {
  auto kats = load_kats();
  ASSERT_EQ(kats.size(), 100u);
  for (std::size_t i = 0; i < kats.size(); ++i) {
    const auto& k = kats[i];
    EXPECT_EQ(to_hex(ascon::encrypt(key_of(k.key), nonce_of(k.nonce), k.ad, k.pt)), to_hex(k.ct)) << "vector " << i;
  }
}

TEST(AsconKat, DecryptMatchesReferenceVectors) {
  for (const auto& k : load_kats())
    EXPECT_EQ(ascon::decrypt(key_of(k.key), nonce_of(k.nonce), k.ad, k.ct), k.pt);
}

TEST(Ascon, RoundTrip128Bytes) {
  ascon::Key key{};
  ascon::Nonce nonce{};
  for (int i = 0; i < 16; ++i) {
    key[i] = static_cast<std::uint8_t>(i * 7);
    nonce[i] = static_cast<std::uint8_t>(0xf0 - i);
  }
  Bytes pt(128);
  for (std::size_t i = 0; i < pt.size(); ++i) pt[i] = static_cast<std::uint8_t>(i ^ 0x5a);
  auto ct = ascon::encrypt(key, nonce, as_bytes("hdr"), pt);
  EXPECT_EQ(ct.size(), pt.size() + ascon::kTagSize);
  EXPECT_EQ(ascon::decrypt(key, nonce, as_bytes("hdr"), ct), pt);
}

TEST(Ascon, EveryBitFlipIsRejected) {
  ascon::Key key{1, 2, 3};
  ascon::Nonce nonce{4, 5, 6};
  Bytes pt(24, 0x11);
  auto ct = ascon::encrypt(key, nonce, as_bytes("ad"), pt);
  for (std::size_t bit = 0; bit < ct.size() * 8; ++bit) {
    auto bad = ct;
    bad[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    try {
      ascon::decrypt(key, nonce, as_bytes("ad"), bad);
      ADD_FAILURE() << "bit " << bit << " accepted";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::AuthFailure);
    }
  }
}

TEST(Ascon, TamperedAdAndWrongKeyFail) {
  ascon::Key key{9};
  ascon::Nonce nonce{8};
  auto ct = ascon::encrypt(key, nonce, as_bytes("header"), as_bytes("payload"));
  EXPECT_THROW(ascon::decrypt(key, nonce, as_bytes("headex"), ct), Error);
  ascon::Key other = key;
  other[15] ^= 1;
  EXPECT_THROW(ascon::decrypt(other, nonce, as_bytes("header"), ct), Error);
  EXPECT_THROW(ascon::decrypt(key, nonce, as_bytes("header"), Bytes(8)), Error);
}

TEST(Ascon, ThroughputSanityCeiling) {
  ascon::Key key{};
  ascon::Nonce nonce{};
  Bytes msg(128, 0x42);
  auto t0 = std::chrono::steady_clock::now();
  for (int i = 0; i < 10000; ++i) {
    nonce[0] = static_cast<std::uint8_t>(i);
    nonce[1] = static_cast<std::uint8_t>(i >> 8);
    auto ct = ascon::encrypt(key, nonce, {}, msg);
    ASSERT_EQ(ascon::decrypt(key, nonce, {}, ct), msg);
  }
  auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  EXPECT_LT(secs, 5.0);
}
