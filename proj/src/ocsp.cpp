#include "wpki/ocsp.hpp"

#include <ctime>

#include "wpki/codec.hpp"
#include "wpki/profiles.hpp"
#include "wpki/repository.hpp"

namespace wpki::ocsp {

void Responder::invalidate_cache() {
    std::lock_guard lock(crl_mu_);
    crl_cache_.reset();
}

void Responder::seed_crl(RevocationList crl) {
    std::lock_guard lock(crl_mu_);
    crl_cache_ = std::move(crl);
}

Result<RevocationList> Responder::current_crl(std::uint64_t now) {
    {
        std::lock_guard lock(crl_mu_);
        if (crl_cache_ && crl_cache_->next_update >= now) return *crl_cache_;
    }
    repository::RepositoryClient repo(repo_);
    auto fetched = repo.fetch_latest_crl();
    if (fetched.ok()) {
        WPKI_TRY(tbs, codec::tbs_bytes(fetched.value()));
        WPKI_TRY(authentic, crypto::verify(tbs, fetched->signature, ca_key_));
        if (!authentic)
            return Error{Err::crl_unavailable, "repository served a CRL with a bad signature"};
        std::lock_guard lock(crl_mu_);
        crl_cache_ = std::move(fetched).value();
        return *crl_cache_;
    }
    // Repository unreachable or empty: a still-valid cached copy answers.
    std::lock_guard lock(crl_mu_);
    if (crl_cache_ && crl_cache_->next_update >= now) return *crl_cache_;
    return Error{Err::crl_unavailable, fetched.error().detail};
}

Result<StatusResponse> Responder::finish(CertStatus status, std::uint64_t serial,
                                         std::optional<std::string> detail,
                                         const std::array<std::uint8_t, 16>& nonce,
                                         std::uint64_t now) {
    StatusResponse response;
    response.status = status;
    response.serial = serial;
    response.produced_at = now;
    response.nonce = nonce;
    response.failure_detail = std::move(detail);
    WPKI_TRY(tbs, codec::tbs_bytes(response));
    auto sig = crypto::sign(tbs, key_);
    if (!sig.ok()) return Error{Err::signing_failure, sig.error().detail};
    response.signature = std::move(sig).value();
    return response;
}

Result<StatusResponse> Responder::respond(const StatusRequest& request, std::uint64_t now) {
    // Resolve a URL target through the repository. Unknown serials are a
    // status, not an error; an unreachable repository is an error.
    WirelessCertificate resolved;
    const WirelessCertificate* wireless = nullptr;
    const ShortLivedCertificate* short_lived = nullptr;
    if (const auto* url = std::get_if<std::string>(&request.target)) {
        auto parsed = repository::parse_cert_url(*url);
        if (!parsed.ok())
            return finish(CertStatus::unknown, 0, "bad-url", request.nonce, now);
        repository::RepositoryClient repo(repo_);
        auto fetched = repo.fetch_certificate(*url);
        if (!fetched.ok()) {
            if (fetched.code() == Err::not_found)
                return finish(CertStatus::unknown, parsed->serial, "not-found", request.nonce,
                              now);
            if (fetched.code() == Err::malformed)
                return finish(CertStatus::unknown, parsed->serial, "unreadable", request.nonce,
                              now);
            return Error{Err::repository_unreachable, fetched.error().detail};
        }
        resolved = std::move(fetched).value();
        wireless = &resolved;
    } else if ((wireless = std::get_if<WirelessCertificate>(&request.target)) == nullptr) {
        short_lived = &std::get<ShortLivedCertificate>(request.target);
    }

    std::uint64_t serial = wireless ? wireless->serial : 0;

    // Validation failures map to unknown; only CRL membership says revoked.
    std::optional<std::string> failure;
    if (wireless) {
        auto authentic = profiles::verify_certificate(*wireless, ca_key_);
        if (!authentic.ok() || !authentic.value())
            failure = "bad-signature";
        else if (!profiles::validate_period(*wireless, now))
            failure = "expired";
        else if (auto report = profiles::check_process(*wireless); !report.conformant())
            failure = "non-conformant: " + report.to_text();
    } else {
        auto authentic = profiles::verify_certificate(*short_lived, ca_key_);
        if (!authentic.ok() || !authentic.value())
            failure = "bad-signature";
        else if (!profiles::validate_period(*short_lived, now))
            failure = "expired";
    }
    if (failure) return finish(CertStatus::unknown, serial, std::move(failure), request.nonce, now);

    // Short-lived certificates carry no serial; revocation does not apply.
    if (short_lived) return finish(CertStatus::good, 0, std::nullopt, request.nonce, now);

    WPKI_TRY(crl, current_crl(now));
    if (crl.contains(serial))
        return finish(CertStatus::revoked, serial, "revoked", request.nonce, now);
    return finish(CertStatus::good, serial, std::nullopt, request.nonce, now);
}

ValidationResult client_validate(const StatusResponse& response,
                                 const std::array<std::uint8_t, 16>& expected_nonce,
                                 const crypto::PublicKeyInfo& responder_key, std::uint64_t now,
                                 std::uint64_t freshness_s) {
    auto tbs = codec::tbs_bytes(response);
    if (!tbs.ok()) return {false, Err::malformed, tbs.error().detail};
    auto authentic = crypto::verify(tbs.value(), response.signature, responder_key);
    if (!authentic.ok() || !authentic.value())
        return {false, Err::bad_signature, "response signature does not verify"};
    if (response.nonce != expected_nonce)
        return {false, Err::validation_failed, "nonce mismatch (possible replay)"};
    if (response.produced_at > now || now - response.produced_at > freshness_s)
        return {false, Err::expired, "response is outside the freshness window"};
    if (response.status != CertStatus::good)
        return {false, Err::validation_failed,
                std::string("status is ") + status_name(response.status)};
    return {true, Err::ok, ""};
}

Result<std::unique_ptr<net::FramedServer>> serve(const net::Endpoint& bind_to,
                                                 std::shared_ptr<Responder> responder) {
    auto handler = [responder](const codec::Frame& request) -> Result<codec::Frame> {
        if (request.kind != static_cast<std::uint8_t>(codec::Kind::status_request))
            return Error{Err::unknown_kind,
                         "status responder answers StatusRequest only, got kind " +
                             std::to_string(unsigned(request.kind))};
        auto req = codec::decode<StatusRequest>(request.payload);
        if (!req.ok()) return Error{Err::malformed, req.error().detail};
        WPKI_TRY(response,
                 responder->respond(req.value(), static_cast<std::uint64_t>(std::time(nullptr))));
        WPKI_TRY(payload, codec::encode(response));
        codec::Frame reply;
        reply.kind = static_cast<std::uint8_t>(codec::Kind::status_response);
        reply.payload = std::move(payload);
        return reply;
    };
    return net::FramedServer::start(bind_to, std::move(handler));
}

}  // namespace wpki::ocsp
