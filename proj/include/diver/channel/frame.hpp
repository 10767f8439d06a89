#pragma once

#include <array>
#include <cstdint>

#include "diver/channel/ascon.hpp"
#include "diver/util/bytes.hpp"
#include "diver/util/net.hpp"

namespace diver::channel {

inline constexpr std::array<std::uint8_t, 4> kMagic{'D', 'I', 'V', 'R'};
inline constexpr std::uint8_t kFrameVersion = 1;
/// magic(4) version(1) flags(1) session_id(8) seq(7) timestamp_ms(8) payload_len(4)
inline constexpr std::size_t kHeaderSize = 33;
inline constexpr std::size_t kMaxPayload = 4 * 1024 * 1024;
inline constexpr std::uint64_t kMaxSeq = (std::uint64_t{1} << 56) - 1;

namespace flags {
inline constexpr std::uint8_t kEncrypted = 0x01;
inline constexpr std::uint8_t kStream = 0x02;
inline constexpr std::uint8_t kHandshake = 0x04;
}  // namespace flags

using SessionId = std::array<std::uint8_t, 8>;

/// Wire envelope. Integers are big-endian; the tag is present iff encrypted.
struct Frame {
  std::uint8_t version = kFrameVersion;
  std::uint8_t flags = 0;
  SessionId session_id{};
  std::uint64_t seq = 0;
  std::uint64_t timestamp_ms = 0;
  Bytes payload;
  std::array<std::uint8_t, ascon::kTagSize> tag{};

  bool encrypted() const { return (flags & flags::kEncrypted) != 0; }
  bool stream() const { return (flags & flags::kStream) != 0; }

  /// The header bytes, which double as AEAD associated data.
  Bytes header() const;
  Bytes encode() const;
  /// Parses one complete frame; throws BadMagic, BadVersion or BadFrame.
  static Frame decode(ByteView data);
};

/// Reads one frame from a stream socket.
Frame read_frame(const net::Socket& s);
void write_frame(const net::Socket& s, const Frame& f);

}  // namespace diver::channel
