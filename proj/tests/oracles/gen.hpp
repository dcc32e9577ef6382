#pragma once

// Random valid-entity generators for property tests. Structural validity
// only: signatures and MACs are random bytes of plausible width, since the
// codec does not interpret them.

#include <optional>
#include <string>

#include "wpki/codec.hpp"
#include "wpki/crypto.hpp"
#include "wpki/entities.hpp"

namespace gen {

using namespace wpki;

inline std::uint64_t rnd_u64() {
    auto b = crypto::random_bytes(8);
    return get_u64_be(b.data());
}

inline std::uint32_t rnd_below(std::uint32_t n) { return static_cast<std::uint32_t>(rnd_u64() % n); }

inline bool coin() { return rnd_below(2) == 0; }

inline std::string rnd_text(std::size_t min_len = 1, std::size_t max_len = 24) {
    static constexpr std::string_view alphabet =
        "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.-_:/@";
    std::size_t len = min_len + rnd_below(static_cast<std::uint32_t>(max_len - min_len + 1));
    return crypto::random_token(alphabet, len);
}

inline Bytes rnd_point() {
    Bytes p = crypto::random_bytes(coin() ? 22 : 33);
    p[0] = coin() ? 0x02 : 0x03;
    return p;
}

inline crypto::PublicKeyInfo rnd_pki() {
    return crypto::PublicKeyInfo{static_cast<std::uint8_t>(1 + rnd_below(2)), rnd_point()};
}

inline crypto::SignatureValue rnd_sig() {
    return crypto::SignatureValue{crypto::kAlgEcdsaSha256,
                                  crypto::random_bytes(coin() ? 42 : 64)};
}

inline crypto::MacTag rnd_mac() {
    crypto::MacTag t;
    auto b = crypto::random_bytes(32);
    std::copy(b.begin(), b.end(), t.bytes.begin());
    return t;
}

inline std::array<std::uint8_t, 20> rnd_key_id() {
    std::array<std::uint8_t, 20> id{};
    auto b = crypto::random_bytes(20);
    std::copy(b.begin(), b.end(), id.begin());
    return id;
}

inline std::array<std::uint8_t, 16> rnd_nonce() {
    std::array<std::uint8_t, 16> n{};
    auto b = crypto::random_bytes(16);
    std::copy(b.begin(), b.end(), n.begin());
    return n;
}

inline std::vector<std::string> rnd_text_list() {
    std::vector<std::string> out;
    std::size_t n = 1 + rnd_below(3);
    for (std::size_t i = 0; i < n; ++i) out.push_back(rnd_text());
    return out;
}

inline std::pair<std::uint64_t, std::uint64_t> rnd_period() {
    std::uint64_t nb = 1600000000 + rnd_below(100000000);
    return {nb, nb + 1 + rnd_below(86400 * 30)};
}

// include_all forces every optional extension; used by size-monotonicity tests
inline WirelessCertificate rnd_wireless(bool include_all = false) {
    WirelessCertificate c;
    c.serial = 1 + (rnd_u64() >> 1);
    c.issuer = rnd_text();
    auto [nb, na] = rnd_period();
    c.valid_not_before = nb;
    c.valid_not_after = na;
    c.subject = rnd_text();
    c.public_key_info = rnd_pki();
    auto& e = c.extensions;
    if (include_all || coin()) e.authority_key_id = rnd_key_id();
    if (include_all || coin()) e.subject_key_id = rnd_key_id();
    if (include_all || coin()) e.key_usage = static_cast<std::uint8_t>(rnd_below(16));
    if (include_all || coin()) e.certificate_policy = rnd_text();
    if (include_all || coin()) e.subject_alt_names = rnd_text_list();
    if (include_all || coin()) e.issuer_alt_names = rnd_text_list();
    if (include_all || coin()) e.extended_key_usage = static_cast<std::uint8_t>(rnd_below(8));
    if (include_all || coin()) e.crl_distribution_points = "wpki://" + rnd_text();
    if (include_all || coin()) e.domain_information = rnd_text();
    if (include_all || coin()) e.authority_info_access = "wpki://" + rnd_text();
    c.signature = rnd_sig();
    return c;
}

inline ShortLivedCertificate rnd_short_lived() {
    ShortLivedCertificate c;
    c.issuer = rnd_text();
    auto [nb, na] = rnd_period();
    c.valid_not_before = nb;
    c.valid_not_after = na;
    c.subject = rnd_text();
    c.parameter_specifier = static_cast<std::uint8_t>(1 + rnd_below(2));
    c.public_key = rnd_point();
    c.signature = rnd_sig();
    return c;
}

inline RegistrationRequest rnd_registration_request() {
    return RegistrationRequest{rnd_text(1, 64)};
}

inline Credentials rnd_credentials() {
    return Credentials{rnd_text(), rnd_text(8, 16),
                       crypto::random_token("ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789", 16)};
}

inline CertificateRequest rnd_certificate_request() {
    CertificateRequest r;
    r.reference_number = rnd_text();
    r.subject = rnd_text();
    r.public_key_info = rnd_pki();
    r.pop_signature = rnd_sig();
    r.request_mac = rnd_mac();
    return r;
}

inline CertificateResponse rnd_certificate_response() {
    return CertificateResponse{rnd_wireless(), "wpki://127.0.0.1:7002/certs/" +
                                                   std::to_string(rnd_below(100000))};
}

inline RevocationList rnd_revocation_list() {
    RevocationList c;
    c.issuer = rnd_text();
    c.this_update = 1600000000 + rnd_below(100000);
    c.next_update = c.this_update + 1 + rnd_below(3600);
    std::size_t n = rnd_below(5);
    std::uint64_t serial = 0;
    for (std::size_t i = 0; i < n; ++i) {
        serial += 1 + rnd_below(50);
        c.entries.push_back({serial, 1600000000 + rnd_below(100000),
                             static_cast<std::uint8_t>(rnd_below(3))});
    }
    c.signature = rnd_sig();
    return c;
}

inline StatusRequest rnd_status_request() {
    StatusRequest r;
    switch (rnd_below(3)) {
        case 0: r.target = rnd_wireless(); break;
        case 1: r.target = rnd_short_lived(); break;
        default: r.target = "wpki://127.0.0.1:7002/certs/" + std::to_string(rnd_below(100000));
    }
    r.nonce = rnd_nonce();
    return r;
}

inline StatusResponse rnd_status_response() {
    StatusResponse c;
    c.status = static_cast<CertStatus>(rnd_below(3));
    c.serial = rnd_u64();
    c.produced_at = 1600000000 + rnd_below(100000);
    c.nonce = rnd_nonce();
    if (c.status != CertStatus::good) c.failure_detail = rnd_text();
    c.signature = rnd_sig();
    return c;
}

inline ErrorReply rnd_error_reply() {
    ErrorReply e;
    e.code = static_cast<std::uint8_t>(rnd_below(44));
    if (coin()) e.detail = rnd_text();
    return e;
}

inline RevokeCommand rnd_revoke_command() {
    return RevokeCommand{1 + (rnd_u64() >> 1), static_cast<std::uint8_t>(rnd_below(3))};
}

inline FetchCommand rnd_fetch_command() {
    FetchCommand c;
    if (coin()) c.serial = rnd_u64();
    return c;
}

inline ClientState rnd_client_state() {
    ClientState s;
    s.curve_id = static_cast<std::uint8_t>(1 + rnd_below(2));
    s.private_key = crypto::random_bytes(21 + rnd_below(12));
    s.credentials = rnd_credentials();
    s.cert_url = "wpki://127.0.0.1:7002/certs/" + std::to_string(rnd_below(100000));
    return s;
}

inline CertUrlPresentation rnd_cert_url_presentation() {
    return CertUrlPresentation{"wpki://127.0.0.1:7002/certs/" + std::to_string(rnd_below(100000))};
}

}  // namespace gen
