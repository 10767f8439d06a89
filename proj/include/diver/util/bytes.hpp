#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace diver {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;
using Address = std::uint64_t;

std::string to_hex(ByteView data);
Bytes from_hex(std::string_view hex);

std::string base64_encode(ByteView data);
Bytes base64_decode(std::string_view text);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(ByteView data);
std::array<std::uint8_t, 32> sha256(ByteView data);

inline ByteView as_bytes(std::string_view s) {
  return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

inline std::string to_string(ByteView b) {
  return {reinterpret_cast<const char*>(b.data()), b.size()};
}

std::string format_address(Address a);
Address parse_address(std::string_view text);

// Fixed-width integer packing.
void put_be(Bytes& out, std::uint64_t value, std::size_t width);
std::uint64_t get_be(ByteView in, std::size_t width);
void put_le(Bytes& out, std::uint64_t value, std::size_t width);
std::uint64_t get_le(ByteView in, std::size_t width);

void put_f64_le(Bytes& out, double value);
double get_f64_le(ByteView in);

/// Splitmix64 step, used to derive independent seeds.
std::uint64_t mix_seed(std::uint64_t x);
std::uint64_t fnv1a(std::string_view s);

}  // namespace diver
