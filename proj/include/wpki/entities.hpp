#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "wpki/crypto.hpp"
#include "wpki/profiles.hpp"

namespace wpki {

using profiles::ShortLivedCertificate;
using profiles::WirelessCertificate;

struct RegistrationRequest {
    std::string device_id;  // 1..64 bytes
    bool operator==(const RegistrationRequest&) const = default;
};

struct Credentials {
    std::string username;
    std::string password;
    std::string random_code;  // 16 chars of [A-Z0-9]
    bool operator==(const Credentials&) const = default;
};

struct CertificateRequest {
    std::string reference_number;  // the username issued at registration
    std::string subject;
    crypto::PublicKeyInfo public_key_info;
    crypto::SignatureValue pop_signature;  // over (reference, subject, key)
    crypto::MacTag request_mac;            // over the same plus pop_signature
    bool operator==(const CertificateRequest&) const = default;
};

struct CertificateResponse {
    WirelessCertificate certificate;
    std::string cert_url;
    bool operator==(const CertificateResponse&) const = default;
};

enum class RevocationReason : std::uint8_t { unspecified = 0, key_compromise = 1, superseded = 2 };

struct RevokedEntry {
    std::uint64_t serial = 0;
    std::uint64_t revoked_at = 0;
    std::uint8_t reason = 0;
    bool operator==(const RevokedEntry&) const = default;
};

struct RevocationList {
    std::string issuer;
    std::uint64_t this_update = 0;
    std::uint64_t next_update = 0;
    std::vector<RevokedEntry> entries;  // ascending by serial, no duplicates
    crypto::SignatureValue signature;
    bool operator==(const RevocationList&) const = default;

    bool contains(std::uint64_t serial) const {
        for (const auto& e : entries)
            if (e.serial == serial) return true;
        return false;
    }
};

// A status target is a full certificate (either profile) or a repository URL.
using CertTarget = std::variant<WirelessCertificate, ShortLivedCertificate, std::string>;

struct StatusRequest {
    CertTarget target;
    std::array<std::uint8_t, 16> nonce{};
    bool operator==(const StatusRequest&) const = default;
};

enum class CertStatus : std::uint8_t { good = 0, revoked = 1, unknown = 2 };

const char* status_name(CertStatus s);

struct StatusResponse {
    CertStatus status = CertStatus::unknown;
    std::uint64_t serial = 0;  // 0 when the target carries no serial
    std::uint64_t produced_at = 0;
    std::array<std::uint8_t, 16> nonce{};
    std::optional<std::string> failure_detail;  // present iff status != good
    crypto::SignatureValue signature;           // by the responder key
    bool operator==(const StatusResponse&) const = default;
};

struct ErrorReply {
    std::uint8_t code = 0;  // Err enum value; 0 doubles as an acknowledgement
    std::optional<std::string> detail;
    bool operator==(const ErrorReply&) const = default;
};

struct RevokeCommand {
    std::uint64_t serial = 0;
    std::uint8_t reason = 0;
    bool operator==(const RevokeCommand&) const = default;
};

struct FetchCommand {
    std::optional<std::uint64_t> serial;  // absent: fetch the latest CRL
    bool operator==(const FetchCommand&) const = default;
};

// Local persistence record; never crosses the wire. Holds everything a
// client keeps after enrollment — deliberately not the certificate.
struct ClientState {
    std::uint8_t curve_id = 0;
    Bytes private_key;
    Credentials credentials;
    std::string cert_url;
    bool operator==(const ClientState&) const = default;
};

// Client → transaction peer: presents the client by repository URL.
struct CertUrlPresentation {
    std::string cert_url;
    bool operator==(const CertUrlPresentation&) const = default;
};

}  // namespace wpki
