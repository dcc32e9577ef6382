#pragma once

#include <string>

#include "wpki/crypto.hpp"
#include "wpki/entities.hpp"
#include "wpki/result.hpp"

namespace wpki::authority {
class CertificationAuthority;
}

namespace wpki::enrollment {

// Output of the CA-side request check; only this type can reach issuance.
struct VerifiedRequest {
    std::string username;
    std::string subject;
    crypto::PublicKeyInfo public_key_info;
    std::string device_id;
};

// ---- client side --------------------------------------------------------

Result<RegistrationRequest> client_begin_registration(std::string_view device_id);

// Signs the proof-of-possession with the keypair and authenticates the
// message with the credential-derived key. The password itself never
// enters the message.
Result<CertificateRequest> client_build_request(const Credentials& creds,
                                                const crypto::KeyPair& keypair,
                                                std::string subject);

// Verifies the issued certificate (key binding, process conformance,
// validity period) and reduces it to the at-rest state: private key,
// credentials and certificate URL. The certificate itself is not kept.
Result<ClientState> client_complete(const CertificateResponse& response,
                                    const crypto::KeyPair& expected_key, const Credentials& creds,
                                    std::uint64_t now);

// ---- CA side ------------------------------------------------------------
// Thin verbs over the authority state machine; see authority.hpp.

Result<Credentials> ca_handle_registration(authority::CertificationAuthority& ca,
                                           const RegistrationRequest& request);
Result<VerifiedRequest> ca_verify_request(authority::CertificationAuthority& ca,
                                          const CertificateRequest& request);
Result<CertificateResponse> ca_issue(authority::CertificationAuthority& ca,
                                     const VerifiedRequest& verified, std::uint64_t now);

}  // namespace wpki::enrollment
