#pragma once

#include <array>
#include <cstdint>
#include <functional>

#include "diver/util/bytes.hpp"

namespace diver::channel {

/// Ascon-AEAD128 as standardized in NIST SP 800-232 (128-bit key, nonce and tag).
namespace ascon {

inline constexpr std::size_t kKeySize = 16;
inline constexpr std::size_t kNonceSize = 16;
inline constexpr std::size_t kTagSize = 16;

using Key = std::array<std::uint8_t, kKeySize>;
using Nonce = std::array<std::uint8_t, kNonceSize>;

/// Returns ciphertext || tag.
Bytes encrypt(const Key& key, const Nonce& nonce, ByteView ad, ByteView plaintext);

/// Returns the plaintext; throws Error(AuthFailure) when the tag does not
/// verify. Nothing is released on failure.
Bytes decrypt(const Key& key, const Nonce& nonce, ByteView ad, ByteView ciphertext_and_tag);

Key key_from(ByteView bytes);

/// Test hook: called with every input passed to encrypt(). Recomputing an
/// identical (key, nonce, ad, plaintext) is harmless; reuse with different
/// inputs is not.
using EncryptObserver = std::function<void(const Key&, const Nonce&, ByteView ad, ByteView plaintext)>;
void set_encrypt_observer(EncryptObserver observer);
Nonce nonce_from(ByteView bytes);

}  // namespace ascon
}  // namespace diver::channel
