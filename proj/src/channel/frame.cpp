#include "diver/channel/frame.hpp"

#include <algorithm>
#include <cstring>

#include "diver/util/error.hpp"

namespace diver::channel {

namespace {

struct Header {
  std::uint8_t version;
  std::uint8_t flags;
  SessionId session_id;
  std::uint64_t seq;
  std::uint64_t timestamp_ms;
  std::uint32_t payload_len;
};

Header parse_header(ByteView h) {
  if (h.size() < kHeaderSize) throw Error(ErrorCode::BadFrame, "truncated frame header");
  if (!std::equal(kMagic.begin(), kMagic.end(), h.begin()))
    throw Error(ErrorCode::BadMagic, "bad frame magic");
  Header out{};
  out.version = h[4];
  if (out.version != kFrameVersion)
    throw Error(ErrorCode::BadVersion, "unsupported frame version " + std::to_string(out.version));
  out.flags = h[5];
  if ((out.flags & ~(flags::kEncrypted | flags::kStream | flags::kHandshake)) != 0)
    throw Error(ErrorCode::BadFrame, "unknown frame flags");
  std::memcpy(out.session_id.data(), h.data() + 6, 8);
  out.seq = get_be(h.subspan(14), 7);
  out.timestamp_ms = get_be(h.subspan(21), 8);
  out.payload_len = static_cast<std::uint32_t>(get_be(h.subspan(29), 4));
  if (out.payload_len > kMaxPayload) throw Error(ErrorCode::BadFrame, "frame payload too large");
  return out;
}

Frame from_header(const Header& h) {
  Frame f;
  f.version = h.version;
  f.flags = h.flags;
  f.session_id = h.session_id;
  f.seq = h.seq;
  f.timestamp_ms = h.timestamp_ms;
  return f;
}

}  // namespace

Bytes Frame::header() const {
  Bytes h;
  h.reserve(kHeaderSize);
  h.insert(h.end(), kMagic.begin(), kMagic.end());
  h.push_back(version);
  h.push_back(flags);
  h.insert(h.end(), session_id.begin(), session_id.end());
  put_be(h, seq, 7);
  put_be(h, timestamp_ms, 8);
  put_be(h, payload.size(), 4);
  return h;
}

Bytes Frame::encode() const {
  Bytes out = header();
  out.insert(out.end(), payload.begin(), payload.end());
  if (encrypted()) out.insert(out.end(), tag.begin(), tag.end());
  return out;
}

Frame Frame::decode(ByteView data) {
  auto h = parse_header(data);
  std::size_t need = kHeaderSize + h.payload_len + ((h.flags & flags::kEncrypted) ? ascon::kTagSize : 0);
  if (data.size() != need) throw Error(ErrorCode::BadFrame, "frame length mismatch");
  Frame f = from_header(h);
  auto body = data.subspan(kHeaderSize, h.payload_len);
  f.payload.assign(body.begin(), body.end());
  if (f.encrypted()) std::memcpy(f.tag.data(), data.data() + kHeaderSize + h.payload_len, ascon::kTagSize);
  return f;
}

Frame read_frame(const net::Socket& s) {
  std::array<std::uint8_t, kHeaderSize> hbuf{};
  net::recv_exact(s, hbuf);
  auto h = parse_header(hbuf);
  Frame f = from_header(h);
  f.payload.resize(h.payload_len);
  net::recv_exact(s, f.payload);
  if (f.encrypted()) net::recv_exact(s, f.tag);
  return f;
}

void write_frame(const net::Socket& s, const Frame& f) { net::send_all(s, f.encode()); }

}  // namespace diver::channel
