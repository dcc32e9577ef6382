#include "wpki/enrollment.hpp"

#include "wpki/authority.hpp"
#include "wpki/codec.hpp"
#include "wpki/profiles.hpp"

namespace wpki::enrollment {

Result<RegistrationRequest> client_begin_registration(std::string_view device_id) {
    if (device_id.empty()) return Error{Err::empty_device_id, "device id is empty"};
    if (device_id.size() > 64)
        return Error{Err::empty_device_id, "device id exceeds 64 bytes"};
    return RegistrationRequest{std::string(device_id)};
}

Result<CertificateRequest> client_build_request(const Credentials& creds,
                                                const crypto::KeyPair& keypair,
                                                std::string subject) {
    WPKI_CHECK(codec::validate(creds));
    auto rederived = crypto::rederive_public(keypair.curve_id, keypair.private_key);
    if (!rederived.ok() || rederived.value() != keypair.public_key)
        return Error{Err::invalid_keypair, "public key does not match the private key"};

    CertificateRequest request;
    request.reference_number = creds.username;
    request.subject = std::move(subject);
    request.public_key_info = keypair.public_info();

    WPKI_TRY(pop_input, codec::pop_bytes(request));
    auto pop = crypto::sign(pop_input, keypair);
    if (!pop.ok()) return Error{Err::invalid_keypair, pop.error().detail};
    request.pop_signature = std::move(pop).value();

    WPKI_TRY(mac_key, crypto::derive_mac_key(creds.username, creds.password, creds.random_code));
    WPKI_TRY(mac_input, codec::mac_bytes(request));
    WPKI_TRY(tag, crypto::mac(mac_key, mac_input));
    request.request_mac = tag;
    return request;
}

Result<ClientState> client_complete(const CertificateResponse& response,
                                    const crypto::KeyPair& expected_key, const Credentials& creds,
                                    std::uint64_t now) {
    const auto& cert = response.certificate;
    if (cert.public_key_info != expected_key.public_info())
        return Error{Err::key_mismatch, "certificate carries a different public key"};

    auto process = profiles::check_process(cert);
    if (!process.conformant())
        return Error{Err::non_conformant, process.to_text()};

    if (!profiles::validate_period(cert, now))
        return Error{Err::expired, "certificate is outside its validity period"};

    // At rest the client keeps the private key, credentials and the URL —
    // not the certificate.
    ClientState state;
    state.curve_id = expected_key.curve_id;
    state.private_key = expected_key.private_key;
    state.credentials = creds;
    state.cert_url = response.cert_url;
    WPKI_CHECK(codec::validate(state));
    return state;
}

Result<Credentials> ca_handle_registration(authority::CertificationAuthority& ca,
                                           const RegistrationRequest& request) {
    return ca.handle_registration(request);
}

Result<VerifiedRequest> ca_verify_request(authority::CertificationAuthority& ca,
                                          const CertificateRequest& request) {
    return ca.verify_request(request);
}

Result<CertificateResponse> ca_issue(authority::CertificationAuthority& ca,
                                     const VerifiedRequest& verified, std::uint64_t now) {
    return ca.issue(verified, now);
}

}  // namespace wpki::enrollment
