#pragma once

#include <memory>
#include <mutex>
#include <optional>

#include "wpki/entities.hpp"
#include "wpki/net.hpp"
#include "wpki/result.hpp"

namespace wpki::ocsp {

inline constexpr std::uint64_t kDefaultFreshnessS = 60;

// Delegated validator: accepts a certificate or a certificate URL, performs
// the full check (issuer signature, validity period, process conformance,
// revocation against the current CRL) and answers with a signed status.
// The CRL is fetched from the repository and cached until next_update.
class Responder {
public:
    Responder(crypto::KeyPair key, WirelessCertificate cert, crypto::PublicKeyInfo ca_key,
              net::Endpoint repo)
        : key_(std::move(key)),
          cert_(std::move(cert)),
          ca_key_(std::move(ca_key)),
          repo_(std::move(repo)) {}

    Result<StatusResponse> respond(const StatusRequest& request, std::uint64_t now);

    const WirelessCertificate& certificate() const { return cert_; }
    crypto::PublicKeyInfo public_key() const { return key_.public_info(); }

    // Drops the cached CRL; the next request refetches.
    void invalidate_cache();
    // Installs a CRL without contacting the repository (tests, warm start).
    void seed_crl(RevocationList crl);

private:
    Result<RevocationList> current_crl(std::uint64_t now);
    Result<StatusResponse> finish(CertStatus status, std::uint64_t serial,
                                  std::optional<std::string> detail,
                                  const std::array<std::uint8_t, 16>& nonce, std::uint64_t now);

    crypto::KeyPair key_;
    WirelessCertificate cert_;
    crypto::PublicKeyInfo ca_key_;
    net::Endpoint repo_;
    std::mutex crl_mu_;
    std::optional<RevocationList> crl_cache_;
};

struct ValidationResult {
    bool ok = false;
    Err reason = Err::ok;
    std::string detail;
};

// Client-side acceptance check: responder signature, nonce echo, freshness
// window, and a good status.
ValidationResult client_validate(const StatusResponse& response,
                                 const std::array<std::uint8_t, 16>& expected_nonce,
                                 const crypto::PublicKeyInfo& responder_key, std::uint64_t now,
                                 std::uint64_t freshness_s = kDefaultFreshnessS);

Result<std::unique_ptr<net::FramedServer>> serve(const net::Endpoint& bind_to,
                                                 std::shared_ptr<Responder> responder);

}  // namespace wpki::ocsp
