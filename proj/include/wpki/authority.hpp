#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "wpki/enrollment.hpp"
#include "wpki/entities.hpp"
#include "wpki/net.hpp"
#include "wpki/profiles.hpp"
#include "wpki/repository.hpp"
#include "wpki/result.hpp"

namespace wpki::authority {

struct AuthorityConfig {
    std::filesystem::path state_dir;
    std::string name = "WPKI Root CA";
    std::uint8_t curve_id = crypto::kCurveSect163k1;
    std::uint64_t cert_lifetime_s = 30 * 86400;
    std::uint64_t crl_validity_s = 300;
    std::uint64_t short_lived_max_s = profiles::kShortLivedMaxLifetimeS;
};

struct RegistrationRecord {
    std::string username;
    std::array<std::uint8_t, 32> password_derivative{};  // the password itself is not stored
    std::string random_code;
    std::string device_id;
    bool consumed = false;
};

struct IssuedEntry {
    std::uint64_t serial = 0;
    std::string subject;
    std::string cert_url;
    std::optional<std::uint64_t> revoked_at;
    std::uint8_t reason = 0;
};

// CA core: registration records, issued-certificate ledger, revocation and
// CRL generation. All mutations are serialized and appended to disk before
// they become visible; resume replays the record files.
class CertificationAuthority {
public:
    static Result<std::unique_ptr<CertificationAuthority>> open(AuthorityConfig cfg,
                                                                repository::RepositoryStore& repo);

    Result<Credentials> handle_registration(const RegistrationRequest& request);
    Result<enrollment::VerifiedRequest> verify_request(const CertificateRequest& request);
    Result<CertificateResponse> issue(const enrollment::VerifiedRequest& verified,
                                      std::uint64_t now);

    // Direct issuance for service identities (responder, transaction peer).
    Result<CertificateResponse> issue_direct(const std::string& subject,
                                             const crypto::PublicKeyInfo& key, std::uint8_t eku,
                                             std::uint64_t now);
    Result<ShortLivedCertificate> issue_short_lived(const std::string& subject,
                                                    const crypto::PublicKeyInfo& ecdh_key,
                                                    std::uint64_t now, std::uint64_t lifetime_s);

    Result<void> revoke(std::uint64_t serial, std::uint8_t reason, std::uint64_t now);
    // Signs and publishes to the repository as one operation.
    Result<RevocationList> generate_crl(std::uint64_t now, std::uint64_t validity_s);
    Result<RevocationList> generate_crl(std::uint64_t now) {
        return generate_crl(now, cfg_.crl_validity_s);
    }

    const WirelessCertificate& certificate() const { return cert_; }
    crypto::PublicKeyInfo public_key() const { return key_.public_info(); }
    const AuthorityConfig& config() const { return cfg_; }

    std::optional<RegistrationRecord> registration(const std::string& username) const;
    std::optional<IssuedEntry> issued(std::uint64_t serial) const;

private:
    CertificationAuthority(AuthorityConfig cfg, repository::RepositoryStore& repo)
        : cfg_(std::move(cfg)), repo_(&repo) {}

    Result<void> load_or_create();
    Result<void> persist_identity();
    Result<void> load_identity();
    Result<void> replay_records();
    profiles::CaIdentity identity() const;
    Result<CertificateResponse> issue_locked(const std::string& subject,
                                             const crypto::PublicKeyInfo& key,
                                             const profiles::CertificateTemplate& tpl);

    AuthorityConfig cfg_;
    repository::RepositoryStore* repo_;
    crypto::KeyPair key_;
    WirelessCertificate cert_;

    mutable std::mutex mu_;
    std::map<std::string, RegistrationRecord> registrations_;
    std::map<std::uint64_t, IssuedEntry> ledger_;
    std::uint64_t next_serial_ = 2;  // serial 1 is the self-signed root
    std::uint64_t next_username_ = 1;
};

// RegistrationRequest / CertificateRequest / RevokeCommand dispatch. The
// revoke handler regenerates and republishes the CRL so operators converge
// without a separate step.
Result<std::unique_ptr<net::FramedServer>> serve(const net::Endpoint& bind_to,
                                                 CertificationAuthority& ca);

}  // namespace wpki::authority
