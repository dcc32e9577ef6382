#include "wpki/entities.hpp"
#include "wpki/result.hpp"

namespace wpki {

const char* err_name(Err e) {
    switch (e) {
        case Err::ok: return "ok";
        case Err::malformed: return "malformed";
        case Err::unknown_tag: return "unknown-tag";
        case Err::non_canonical: return "non-canonical";
        case Err::kind_mismatch: return "kind-mismatch";
        case Err::invariant_violation: return "invariant-violation";
        case Err::field_too_large: return "field-too-large";
        case Err::payload_too_large: return "payload-too-large";
        case Err::truncated: return "truncated";
        case Err::unknown_kind: return "unknown-kind";
        case Err::unsupported_curve: return "unsupported-curve";
        case Err::invalid_key: return "invalid-key";
        case Err::malformed_signature: return "malformed-signature";
        case Err::malformed_key: return "malformed-key";
        case Err::bad_key_length: return "bad-key-length";
        case Err::empty_credential: return "empty-credential";
        case Err::lifetime_too_long: return "lifetime-too-long";
        case Err::non_conformant: return "non-conformant";
        case Err::signing_failure: return "signing-failure";
        case Err::empty_device_id: return "empty-device-id";
        case Err::invalid_keypair: return "invalid-keypair";
        case Err::unknown_reference: return "unknown-reference";
        case Err::mac_mismatch: return "mac-mismatch";
        case Err::pop_failure: return "pop-failure";
        case Err::key_mismatch: return "key-mismatch";
        case Err::expired: return "expired";
        case Err::storage_failure: return "storage-failure";
        case Err::repository_unavailable: return "repository-unavailable";
        case Err::unknown_serial: return "unknown-serial";
        case Err::already_revoked: return "already-revoked";
        case Err::corrupt_state: return "corrupt-state";
        case Err::bind_failure: return "bind-failure";
        case Err::duplicate_serial: return "duplicate-serial";
        case Err::not_found: return "not-found";
        case Err::bad_url: return "bad-url";
        case Err::bad_signature: return "bad-signature";
        case Err::no_crl_yet: return "no-crl-yet";
        case Err::crl_unavailable: return "crl-unavailable";
        case Err::repository_unreachable: return "repository-unreachable";
        case Err::peer_unreachable: return "peer-unreachable";
        case Err::ocsp_unreachable: return "ocsp-unreachable";
        case Err::validation_failed: return "validation-failed";
        case Err::transport: return "transport";
        case Err::config: return "config";
    }
    return "unknown";
}

const char* status_name(CertStatus s) {
    switch (s) {
        case CertStatus::good: return "good";
        case CertStatus::revoked: return "revoked";
        case CertStatus::unknown: return "unknown";
    }
    return "unknown";
}

}  // namespace wpki
