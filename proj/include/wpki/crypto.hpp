#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include "wpki/bytes.hpp"
#include "wpki/result.hpp"

namespace wpki::crypto {

// Signature algorithm registry (frozen): 1 = ECDSA with SHA-256.
inline constexpr std::uint8_t kAlgEcdsaSha256 = 1;

// Named-curve registry (frozen):
//   1 = sect163k1  (163-bit binary field, 22-byte compressed points)
//   2 = prime256v1 (256-bit prime field, 33-byte compressed points)
inline constexpr std::uint8_t kCurveSect163k1 = 1;
inline constexpr std::uint8_t kCurveP256 = 2;

bool curve_supported(std::uint8_t curve_id);
// Width in bytes of the curve order; r and s are each padded to this.
Result<std::size_t> curve_order_bytes(std::uint8_t curve_id);

struct SignatureValue {
    std::uint8_t algorithm_id = kAlgEcdsaSha256;
    Bytes bytes;  // r || s, each zero-padded to the curve order width
    bool operator==(const SignatureValue&) const = default;
};

struct MacTag {
    std::array<std::uint8_t, 32> bytes{};
    bool operator==(const MacTag&) const = default;
};

struct PublicKeyInfo {
    std::uint8_t curve_id = 0;
    Bytes point;  // X9.62 compressed encoding (0x02/0x03 prefix)
    bool operator==(const PublicKeyInfo&) const = default;
};

struct KeyPair {
    std::uint8_t curve_id = 0;
    Bytes public_key;   // compressed point
    Bytes private_key;  // big-endian scalar padded to the order width; local only
    PublicKeyInfo public_info() const { return PublicKeyInfo{curve_id, public_key}; }
};

Result<KeyPair> generate_keypair(std::uint8_t curve_id);

// Recomputes private_key * G. Used to check the stored public half.
Result<Bytes> rederive_public(std::uint8_t curve_id, BytesView private_key);

std::array<std::uint8_t, 32> hash(BytesView message);

Result<SignatureValue> sign(BytesView message, const KeyPair& key);

// Total over arbitrary input: structurally broken signatures/keys are
// errors (malformed_signature / malformed_key); a well-formed signature
// that does not verify is a clean false.
Result<bool> verify(BytesView message, const SignatureValue& sig, const PublicKeyInfo& public_key);

// Iterated salted hash, 10000 SHA-256 applications:
//   h1 = SHA-256(code || 0x1F || username || 0x1F || password)
//   hi = SHA-256(code || h(i-1))        for i in 2..10000
// The 0x1F separators keep ("ab","c") and ("a","bc") distinct.
inline constexpr int kKdfIterations = 10000;
Result<std::array<std::uint8_t, 32>> derive_mac_key(std::string_view username,
                                                    std::string_view password,
                                                    std::string_view random_code);

// HMAC-SHA-256. Keys are exactly 32 bytes.
Result<MacTag> mac(BytesView key, BytesView message);
// Constant-time comparison; a tag of the wrong length is a clean false.
Result<bool> mac_verify(BytesView key, BytesView message, BytesView tag);
Result<bool> mac_verify(BytesView key, BytesView message, const MacTag& tag);

// CSPRNG helpers. Entropy failure is unrecoverable and aborts.
Bytes random_bytes(std::size_t n);
std::string random_token(std::string_view alphabet, std::size_t n);

}  // namespace wpki::crypto
