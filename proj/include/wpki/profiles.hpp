#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wpki/crypto.hpp"
#include "wpki/result.hpp"

namespace wpki::profiles {

// key_usage bits
inline constexpr std::uint8_t kKuDigitalSignature = 0x01;
inline constexpr std::uint8_t kKuKeyEncipherment = 0x02;
inline constexpr std::uint8_t kKuKeyCertSign = 0x04;
inline constexpr std::uint8_t kKuCrlSign = 0x08;

// extended_key_usage bits
inline constexpr std::uint8_t kEkuClientAuth = 0x01;
inline constexpr std::uint8_t kEkuServerAuth = 0x02;
inline constexpr std::uint8_t kEkuOcspSigning = 0x04;

// public_key_type registry for the short-lived profile
inline constexpr std::uint8_t kKeyTypeEcdh = 1;

inline constexpr std::uint64_t kDefaultShortLivedLifetimeS = 3600;
inline constexpr std::uint64_t kShortLivedMaxLifetimeS = 86400;

// Extension set of the wireless profile. Fields the profile marks
// not-recommended or not-defined (unique identifiers, private key usage
// period, directory attributes, basic constraints, policy mapping, name
// and policy constraints) have no representation here on purpose: they
// cannot be constructed, and their tags do not exist on the wire.
struct CertificateExtensions {
    std::optional<std::array<std::uint8_t, 20>> authority_key_id;
    std::optional<std::array<std::uint8_t, 20>> subject_key_id;
    std::optional<std::uint8_t> key_usage;
    std::optional<std::string> certificate_policy;
    std::optional<std::vector<std::string>> subject_alt_names;
    std::optional<std::vector<std::string>> issuer_alt_names;
    std::optional<std::uint8_t> extended_key_usage;
    std::optional<std::string> crl_distribution_points;
    std::optional<std::string> domain_information;
    std::optional<std::string> authority_info_access;
    bool operator==(const CertificateExtensions&) const = default;
};

struct WirelessCertificate {
    std::uint8_t version = 3;  // X.509v3
    std::uint64_t serial = 0;
    std::uint8_t signature_algorithm_id = crypto::kAlgEcdsaSha256;
    std::string issuer;
    std::uint64_t valid_not_before = 0;  // GMT seconds
    std::uint64_t valid_not_after = 0;
    std::string subject;
    crypto::PublicKeyInfo public_key_info;
    CertificateExtensions extensions;
    crypto::SignatureValue signature;  // by the CA, over the to-be-signed encoding
    bool operator==(const WirelessCertificate&) const = default;
};

struct ShortLivedCertificate {
    std::uint8_t certificate_version = 1;  // V1
    std::uint8_t signature_algorithm_id = crypto::kAlgEcdsaSha256;
    std::string issuer;
    std::uint64_t valid_not_before = 0;
    std::uint64_t valid_not_after = 0;
    std::string subject;
    std::uint8_t public_key_type = kKeyTypeEcdh;
    std::uint8_t parameter_specifier = 0;  // named-curve id
    Bytes public_key;                      // compressed point
    crypto::SignatureValue signature;
    bool operator==(const ShortLivedCertificate&) const = default;
};

// ---- conformance ------------------------------------------------------

enum class Requirement : std::uint8_t { mandatory, optional_, not_recommended, not_defined };

struct ProfileRule {
    const char* field;
    bool extension;  // false = basic field
    Requirement generation;
    Requirement process;
    bool representable;  // false for not-recommended / not-defined rows
};

// The full 25-row wireless profile rule table, in profile order.
std::span<const ProfileRule> rule_table();

enum class CheckMode : std::uint8_t { generation, process };
enum class ViolationRule : std::uint8_t { missing_mandatory, forbidden_present, undefined_present };

struct Violation {
    std::string field;
    ViolationRule rule;
    std::string detail;
    bool operator==(const Violation&) const = default;
};

struct ConformanceReport {
    CheckMode mode = CheckMode::generation;
    std::vector<Violation> violations;
    bool conformant() const { return violations.empty(); }
    std::string to_text() const;
};

ConformanceReport check_generation(const WirelessCertificate& cert);
ConformanceReport check_process(const WirelessCertificate& cert);

// ---- builders ---------------------------------------------------------

struct CaIdentity {
    std::string name;
    crypto::KeyPair keypair;
    std::string crl_distribution_url;  // stamped into every issued certificate
    std::string authority_info_url;
    std::string policy = "wpki-baseline";
};

struct CertificateTemplate {
    std::string subject;
    std::uint64_t not_before = 0;
    std::uint64_t lifetime_s = 0;
    std::optional<std::uint8_t> key_usage;  // default: digitalSignature
    std::optional<std::string> certificate_policy;
    std::optional<std::vector<std::string>> subject_alt_names;  // default: {subject}
    std::optional<std::vector<std::string>> issuer_alt_names;
    std::optional<std::uint8_t> extended_key_usage;
    std::optional<std::string> domain_information;
    // Requests for fields the profile forbids. The builder refuses them;
    // they exist so callers can ask and be told no.
    std::optional<std::string> issuer_unique_id;
    std::optional<std::string> subject_unique_id;
    std::optional<std::string> private_key_usage_period;
    std::optional<std::string> subject_directory_attributes;
    std::optional<std::string> basic_constraints;
    std::optional<std::string> policy_mapping;
    std::optional<std::string> name_constraints;
    std::optional<std::string> policy_constraints;
};

Result<WirelessCertificate> build_certificate(const CertificateTemplate& tpl,
                                              const crypto::PublicKeyInfo& subject_key,
                                              const CaIdentity& ca, std::uint64_t serial);

Result<ShortLivedCertificate> build_short_lived(std::string subject,
                                                const crypto::PublicKeyInfo& ecdh_public,
                                                std::uint64_t not_before, std::uint64_t lifetime_s,
                                                const CaIdentity& ca,
                                                std::uint64_t max_lifetime_s = kShortLivedMaxLifetimeS);

bool validate_period(const WirelessCertificate& cert, std::uint64_t now);
bool validate_period(const ShortLivedCertificate& cert, std::uint64_t now);

// Signature check against the issuer key, over the to-be-signed encoding.
Result<bool> verify_certificate(const WirelessCertificate& cert,
                                const crypto::PublicKeyInfo& issuer_key);
Result<bool> verify_certificate(const ShortLivedCertificate& cert,
                                const crypto::PublicKeyInfo& issuer_key);

// Truncated SHA-256 of a compressed public point; used for the two key-id
// extensions.
std::array<std::uint8_t, 20> key_id(BytesView public_point);

}  // namespace wpki::profiles
