#pragma once

// Brute-force status oracle: re-checks signature, period, conformance and
// CRL membership directly, independent of the responder's control flow.

#include "wpki/entities.hpp"
#include "wpki/profiles.hpp"

namespace oracle {

inline wpki::CertStatus status_of(const wpki::WirelessCertificate& cert,
                                  const wpki::RevocationList& crl,
                                  const wpki::crypto::PublicKeyInfo& ca_key, std::uint64_t now) {
    auto authentic = wpki::profiles::verify_certificate(cert, ca_key);
    if (!authentic.ok() || !authentic.value()) return wpki::CertStatus::unknown;
    if (!wpki::profiles::validate_period(cert, now)) return wpki::CertStatus::unknown;
    if (!wpki::profiles::check_process(cert).conformant()) return wpki::CertStatus::unknown;
    if (crl.contains(cert.serial)) return wpki::CertStatus::revoked;
    return wpki::CertStatus::good;
}

}  // namespace oracle
