#define OPENSSL_SUPPRESS_DEPRECATED 1

#include "wpki/crypto.hpp"

#include <openssl/bn.h>
#include <openssl/crypto.h>
#include <openssl/ec.h>
#include <openssl/ecdsa.h>
#include <openssl/hmac.h>
#include <openssl/obj_mac.h>
#include <openssl/rand.h>
#include <openssl/sha.h>

#include <cstdio>
#include <cstdlib>
#include <memory>

namespace wpki::crypto {
namespace {

struct EcKeyDeleter { void operator()(EC_KEY* k) const { EC_KEY_free(k); } };
struct EcPointDeleter { void operator()(EC_POINT* p) const { EC_POINT_free(p); } };
struct BnDeleter { void operator()(BIGNUM* b) const { BN_free(b); } };
struct BnCtxDeleter { void operator()(BN_CTX* c) const { BN_CTX_free(c); } };
struct SigDeleter { void operator()(ECDSA_SIG* s) const { ECDSA_SIG_free(s); } };

using EcKeyPtr = std::unique_ptr<EC_KEY, EcKeyDeleter>;
using EcPointPtr = std::unique_ptr<EC_POINT, EcPointDeleter>;
using BnPtr = std::unique_ptr<BIGNUM, BnDeleter>;
using BnCtxPtr = std::unique_ptr<BN_CTX, BnCtxDeleter>;
using SigPtr = std::unique_ptr<ECDSA_SIG, SigDeleter>;

int nid_for(std::uint8_t curve_id) {
    switch (curve_id) {
        case kCurveSect163k1: return NID_sect163k1;
        case kCurveP256: return NID_X9_62_prime256v1;
        default: return NID_undef;
    }
}

Result<EcKeyPtr> new_key(std::uint8_t curve_id) {
    int nid = nid_for(curve_id);
    if (nid == NID_undef)
        return Error{Err::unsupported_curve, "curve id " + std::to_string(curve_id)};
    EcKeyPtr key(EC_KEY_new_by_curve_name(nid));
    if (!key) return Error{Err::unsupported_curve, "curve not provided by crypto backend"};
    return key;
}

std::size_t order_bytes(const EC_GROUP* group) {
    return static_cast<std::size_t>((EC_GROUP_order_bits(group) + 7) / 8);
}

Result<Bytes> compress_point(const EC_GROUP* group, const EC_POINT* point) {
    BnCtxPtr ctx(BN_CTX_new());
    std::size_t len =
        EC_POINT_point2oct(group, point, POINT_CONVERSION_COMPRESSED, nullptr, 0, ctx.get());
    if (len == 0) return Error{Err::invalid_key, "point encoding failed"};
    Bytes out(len);
    if (EC_POINT_point2oct(group, point, POINT_CONVERSION_COMPRESSED, out.data(), len,
                           ctx.get()) != len)
        return Error{Err::invalid_key, "point encoding failed"};
    return out;
}

// Compressed points only; anything else is malformed on this wire.
Result<EcPointPtr> decompress_point(const EC_GROUP* group, BytesView encoded) {
    if (encoded.size() < 2 || (encoded[0] != 0x02 && encoded[0] != 0x03))
        return Error{Err::malformed_key, "not a compressed point"};
    BnCtxPtr ctx(BN_CTX_new());
    EcPointPtr point(EC_POINT_new(group));
    if (!point) return Error{Err::malformed_key, "alloc"};
    if (EC_POINT_oct2point(group, point.get(), encoded.data(), encoded.size(), ctx.get()) != 1)
        return Error{Err::malformed_key, "point not on curve"};
    return point;
}

Result<BnPtr> scalar_from_bytes(BytesView priv) {
    if (priv.empty()) return Error{Err::invalid_key, "empty private scalar"};
    BnPtr bn(BN_bin2bn(priv.data(), static_cast<int>(priv.size()), nullptr));
    if (!bn || BN_is_zero(bn.get())) return Error{Err::invalid_key, "zero private scalar"};
    return bn;
}

Result<Bytes> bn_padded(const BIGNUM* bn, std::size_t width) {
    Bytes out(width);
    if (BN_bn2binpad(bn, out.data(), static_cast<int>(width)) < 0)
        return Error{Err::invalid_key, "scalar wider than curve order"};
    return out;
}

}  // namespace

bool curve_supported(std::uint8_t curve_id) { return nid_for(curve_id) != NID_undef; }

Result<std::size_t> curve_order_bytes(std::uint8_t curve_id) {
    WPKI_TRY(key, new_key(curve_id));
    return order_bytes(EC_KEY_get0_group(key.get()));
}

Result<KeyPair> generate_keypair(std::uint8_t curve_id) {
    WPKI_TRY(key, new_key(curve_id));
    if (EC_KEY_generate_key(key.get()) != 1)
        return Error{Err::invalid_key, "key generation failed"};
    const EC_GROUP* group = EC_KEY_get0_group(key.get());
    WPKI_TRY(pub, compress_point(group, EC_KEY_get0_public_key(key.get())));
    WPKI_TRY(priv, bn_padded(EC_KEY_get0_private_key(key.get()), order_bytes(group)));
    return KeyPair{curve_id, std::move(pub), std::move(priv)};
}

Result<Bytes> rederive_public(std::uint8_t curve_id, BytesView private_key) {
    WPKI_TRY(key, new_key(curve_id));
    const EC_GROUP* group = EC_KEY_get0_group(key.get());
    WPKI_TRY(scalar, scalar_from_bytes(private_key));
    BnCtxPtr ctx(BN_CTX_new());
    EcPointPtr point(EC_POINT_new(group));
    if (!point || EC_POINT_mul(group, point.get(), scalar.get(), nullptr, nullptr, ctx.get()) != 1)
        return Error{Err::invalid_key, "scalar multiplication failed"};
    return compress_point(group, point.get());
}

std::array<std::uint8_t, 32> hash(BytesView message) {
    std::array<std::uint8_t, 32> digest{};
    SHA256(message.data(), message.size(), digest.data());
    return digest;
}

Result<SignatureValue> sign(BytesView message, const KeyPair& key) {
    WPKI_TRY(ec, new_key(key.curve_id));
    const EC_GROUP* group = EC_KEY_get0_group(ec.get());
    WPKI_TRY(scalar, scalar_from_bytes(key.private_key));
    if (EC_KEY_set_private_key(ec.get(), scalar.get()) != 1)
        return Error{Err::invalid_key, "bad private key"};

    auto digest = hash(message);
    SigPtr sig(ECDSA_do_sign(digest.data(), digest.size(), ec.get()));
    if (!sig) return Error{Err::signing_failure, "ecdsa sign failed"};

    const BIGNUM* r = nullptr;
    const BIGNUM* s = nullptr;
    ECDSA_SIG_get0(sig.get(), &r, &s);
    std::size_t width = order_bytes(group);
    WPKI_TRY(rb, bn_padded(r, width));
    WPKI_TRY(sb, bn_padded(s, width));
    Bytes raw = std::move(rb);
    append(raw, sb);
    return SignatureValue{kAlgEcdsaSha256, std::move(raw)};
}

Result<bool> verify(BytesView message, const SignatureValue& sig, const PublicKeyInfo& public_key) {
    if (sig.algorithm_id != kAlgEcdsaSha256)
        return Error{Err::malformed_signature,
                     "unknown algorithm id " + std::to_string(sig.algorithm_id)};
    WPKI_TRY(ec, new_key(public_key.curve_id));
    const EC_GROUP* group = EC_KEY_get0_group(ec.get());
    std::size_t width = order_bytes(group);
    if (sig.bytes.empty() || sig.bytes.size() != 2 * width)
        return Error{Err::malformed_signature,
                     "signature must be " + std::to_string(2 * width) + " bytes"};

    WPKI_TRY(point, decompress_point(group, public_key.point));
    if (EC_KEY_set_public_key(ec.get(), point.get()) != 1)
        return Error{Err::malformed_key, "bad public key"};

    BnPtr r(BN_bin2bn(sig.bytes.data(), static_cast<int>(width), nullptr));
    BnPtr s(BN_bin2bn(sig.bytes.data() + width, static_cast<int>(width), nullptr));
    SigPtr raw(ECDSA_SIG_new());
    if (!r || !s || !raw) return Error{Err::malformed_signature, "alloc"};
    if (ECDSA_SIG_set0(raw.get(), r.get(), s.get()) != 1)
        return Error{Err::malformed_signature, "alloc"};
    r.release();  // owned by raw now
    s.release();

    auto digest = hash(message);
    return ECDSA_do_verify(digest.data(), digest.size(), raw.get(), ec.get()) == 1;
}

Result<std::array<std::uint8_t, 32>> derive_mac_key(std::string_view username,
                                                    std::string_view password,
                                                    std::string_view random_code) {
    if (username.empty() || password.empty() || random_code.empty())
        return Error{Err::empty_credential, "username, password and random code are required"};

    Bytes seed = to_bytes(random_code);
    seed.push_back(0x1F);
    append(seed, to_bytes(username));
    seed.push_back(0x1F);
    append(seed, to_bytes(password));

    std::array<std::uint8_t, 32> state = hash(seed);
    Bytes round = to_bytes(random_code);
    std::size_t salt_len = round.size();
    round.resize(salt_len + state.size());
    for (int i = 1; i < kKdfIterations; ++i) {
        std::copy(state.begin(), state.end(), round.begin() + salt_len);
        state = hash(round);
    }
    return state;
}

Result<MacTag> mac(BytesView key, BytesView message) {
    if (key.size() != 32)
        return Error{Err::bad_key_length, "mac keys are 32 bytes"};
    MacTag tag;
    unsigned int len = 0;
    if (!HMAC(EVP_sha256(), key.data(), static_cast<int>(key.size()), message.data(),
              message.size(), tag.bytes.data(), &len) ||
        len != tag.bytes.size())
        return Error{Err::bad_key_length, "hmac failed"};
    return tag;
}

Result<bool> mac_verify(BytesView key, BytesView message, BytesView tag) {
    WPKI_TRY(expected, mac(key, message));
    if (tag.size() != expected.bytes.size()) return false;
    return CRYPTO_memcmp(expected.bytes.data(), tag.data(), tag.size()) == 0;
}

Result<bool> mac_verify(BytesView key, BytesView message, const MacTag& tag) {
    return mac_verify(key, message, BytesView(tag.bytes));
}

Bytes random_bytes(std::size_t n) {
    Bytes out(n);
    if (n > 0 && RAND_bytes(out.data(), static_cast<int>(n)) != 1) {
        std::fputs("fatal: system entropy source failed\n", stderr);
        std::abort();
    }
    return out;
}

std::string random_token(std::string_view alphabet, std::size_t n) {
    // Rejection sampling keeps the draw uniform over the alphabet.
    std::string out;
    out.reserve(n);
    std::uint8_t limit = static_cast<std::uint8_t>(256 - 256 % alphabet.size());
    while (out.size() < n) {
        Bytes chunk = random_bytes(n);
        for (std::uint8_t b : chunk) {
            if (limit != 0 && b >= limit) continue;
            out.push_back(alphabet[b % alphabet.size()]);
            if (out.size() == n) break;
        }
    }
    return out;
}

}  // namespace wpki::crypto
