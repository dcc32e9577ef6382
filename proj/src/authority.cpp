#include "wpki/authority.hpp"

#include <charconv>
#include <cstdio>
#include <ctime>

#include "wpki/codec.hpp"
#include "wpki/storage.hpp"

namespace wpki::authority {
namespace {

// State-file record kinds; internal to the CA, never on the wire.
constexpr std::uint8_t kRecIssued = 0x80;
constexpr std::uint8_t kRecRevoked = 0x81;
constexpr std::uint8_t kRecRegistration = 0x82;
constexpr std::uint8_t kRecConsumed = 0x83;

constexpr std::uint8_t kTagSerial = 0x02;
constexpr std::uint8_t kTagSubject = 0x07;
constexpr std::uint8_t kTagReference = 0x30;
constexpr std::uint8_t kTagDeviceId = 0x33;
constexpr std::uint8_t kTagRandomCode = 0x34;
constexpr std::uint8_t kTagTimestamp = 0x41;
constexpr std::uint8_t kTagReason = 0x43;
constexpr std::uint8_t kTagUrl = 0x50;
constexpr std::uint8_t kTagDerivedKey = 0x61;

void put_field(Bytes& out, std::uint8_t tag, BytesView value) {
    out.push_back(tag);
    put_u16_be(out, static_cast<std::uint16_t>(value.size()));
    append(out, value);
}

void put_u64_field(Bytes& out, std::uint8_t tag, std::uint64_t v) {
    Bytes b;
    put_u64_be(b, v);
    put_field(out, tag, b);
}

// Minimal record reader: tag -> value, ascending order not required here
// since records are produced only by this file.
Result<std::map<std::uint8_t, Bytes>> parse_record(BytesView in) {
    std::map<std::uint8_t, Bytes> out;
    std::size_t pos = 0;
    while (pos < in.size()) {
        if (in.size() - pos < 3) return Error{Err::corrupt_state, "truncated record field"};
        std::uint8_t tag = in[pos];
        std::uint16_t len = get_u16_be(in.data() + pos + 1);
        pos += 3;
        if (in.size() - pos < len) return Error{Err::corrupt_state, "record field overrun"};
        out[tag] = copy_bytes(in.subspan(pos, len));
        pos += len;
    }
    return out;
}

Result<Bytes> need(std::map<std::uint8_t, Bytes>& rec, std::uint8_t tag) {
    auto it = rec.find(tag);
    if (it == rec.end())
        return Error{Err::corrupt_state, "record missing tag " + std::to_string(tag)};
    return it->second;
}

Result<std::uint64_t> need_u64(std::map<std::uint8_t, Bytes>& rec, std::uint8_t tag) {
    WPKI_TRY(v, need(rec, tag));
    if (v.size() != 8) return Error{Err::corrupt_state, "bad u64 record field"};
    return get_u64_be(v.data());
}

std::string zero_padded_username(std::uint64_t n) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "u%08llu", static_cast<unsigned long long>(n));
    return buf;
}

std::uint64_t now_gmt() { return static_cast<std::uint64_t>(std::time(nullptr)); }

}  // namespace

Result<std::unique_ptr<CertificationAuthority>> CertificationAuthority::open(
    AuthorityConfig cfg, repository::RepositoryStore& repo) {
    auto ca = std::unique_ptr<CertificationAuthority>(
        new CertificationAuthority(std::move(cfg), repo));
    WPKI_CHECK(ca->load_or_create());
    return ca;
}

profiles::CaIdentity CertificationAuthority::identity() const {
    std::string base = "wpki://" + repo_->host() + ":" + std::to_string(repo_->port());
    return profiles::CaIdentity{cfg_.name, key_, base + "/crl/latest", base + "/ca"};
}

Result<void> CertificationAuthority::load_or_create() {
    WPKI_CHECK(storage::ensure_dir(cfg_.state_dir));
    if (storage::exists(cfg_.state_dir / "key")) {
        WPKI_CHECK(load_identity());
        WPKI_CHECK(replay_records());
        return {};
    }
    WPKI_TRY(key, crypto::generate_keypair(cfg_.curve_id));
    key_ = std::move(key);

    profiles::CertificateTemplate tpl;
    tpl.subject = cfg_.name;
    tpl.not_before = now_gmt();
    tpl.lifetime_s = 10ull * 365 * 86400;
    tpl.key_usage = profiles::kKuKeyCertSign | profiles::kKuCrlSign |
                    profiles::kKuDigitalSignature;
    tpl.issuer_alt_names = std::vector<std::string>{cfg_.name};
    WPKI_TRY(cert, profiles::build_certificate(tpl, key_.public_info(), identity(), 1));
    cert_ = std::move(cert);
    return persist_identity();
}

Result<void> CertificationAuthority::persist_identity() {
    WPKI_CHECK(storage::save_keypair(cfg_.state_dir / "key", key_));
    WPKI_TRY(cert_bytes, codec::encode(cert_));
    return storage::atomic_write(cfg_.state_dir / "cert", cert_bytes);
}

Result<void> CertificationAuthority::load_identity() {
    auto key = storage::load_keypair(cfg_.state_dir / "key");
    if (!key.ok()) return Error{Err::corrupt_state, key.error().detail};
    key_ = std::move(key).value();

    auto cert_data = storage::read_file(cfg_.state_dir / "cert");
    if (!cert_data.ok()) return Error{Err::corrupt_state, "missing certificate file"};
    auto cert = codec::decode<WirelessCertificate>(cert_data.value());
    if (!cert.ok())
        return Error{Err::corrupt_state, "certificate file: " + cert.error().detail};
    cert_ = std::move(cert).value();
    if (cert_.public_key_info != key_.public_info())
        return Error{Err::corrupt_state, "certificate does not match the stored key"};
    return {};
}

Result<void> CertificationAuthority::replay_records() {
    auto regs = storage::read_records(cfg_.state_dir / "registrations");
    if (!regs.ok()) return regs.error();
    for (auto& [kind, payload] : regs.value()) {
        auto rec = parse_record(payload);
        if (!rec.ok()) return rec.error();
        if (kind == kRecRegistration) {
            RegistrationRecord r;
            WPKI_TRY(username, need(rec.value(), kTagReference));
            r.username = to_string(username);
            WPKI_TRY(derived, need(rec.value(), kTagDerivedKey));
            if (derived.size() != 32) return Error{Err::corrupt_state, "bad derived key"};
            std::copy(derived.begin(), derived.end(), r.password_derivative.begin());
            WPKI_TRY(code, need(rec.value(), kTagRandomCode));
            r.random_code = to_string(code);
            WPKI_TRY(device, need(rec.value(), kTagDeviceId));
            r.device_id = to_string(device);
            std::uint64_t counter = 0;
            auto name = r.username;
            if (name.size() > 1) {
                std::from_chars(name.data() + 1, name.data() + name.size(), counter);
                if (counter >= next_username_) next_username_ = counter + 1;
            }
            registrations_[r.username] = std::move(r);
        } else if (kind == kRecConsumed) {
            WPKI_TRY(username, need(rec.value(), kTagReference));
            auto it = registrations_.find(to_string(username));
            if (it == registrations_.end())
                return Error{Err::corrupt_state, "consume record without registration"};
            it->second.consumed = true;
        } else {
            return Error{Err::corrupt_state, "unknown registration record kind"};
        }
    }

    auto ledger = storage::read_records(cfg_.state_dir / "ledger");
    if (!ledger.ok()) return ledger.error();
    for (auto& [kind, payload] : ledger.value()) {
        auto rec = parse_record(payload);
        if (!rec.ok()) return rec.error();
        if (kind == kRecIssued) {
            IssuedEntry e;
            WPKI_TRY(serial, need_u64(rec.value(), kTagSerial));
            e.serial = serial;
            WPKI_TRY(subject, need(rec.value(), kTagSubject));
            e.subject = to_string(subject);
            WPKI_TRY(url, need(rec.value(), kTagUrl));
            e.cert_url = to_string(url);
            if (e.serial >= next_serial_) next_serial_ = e.serial + 1;
            ledger_[e.serial] = std::move(e);
        } else if (kind == kRecRevoked) {
            WPKI_TRY(serial, need_u64(rec.value(), kTagSerial));
            WPKI_TRY(at, need_u64(rec.value(), kTagTimestamp));
            WPKI_TRY(reason, need(rec.value(), kTagReason));
            auto it = ledger_.find(serial);
            if (it == ledger_.end() || reason.size() != 1)
                return Error{Err::corrupt_state, "revocation record without issuance"};
            it->second.revoked_at = at;
            it->second.reason = reason[0];
        } else {
            return Error{Err::corrupt_state, "unknown ledger record kind"};
        }
    }

    // Step over certificates stored by an interrupted issuance that never
    // reached the ledger, so their serials are never reused.
    std::uint64_t stored_max = repo_->max_serial();
    if (stored_max >= next_serial_) next_serial_ = stored_max + 1;
    return {};
}

Result<Credentials> CertificationAuthority::handle_registration(
    const RegistrationRequest& request) {
    WPKI_CHECK(codec::validate(request));
    std::lock_guard lock(mu_);

    Credentials creds;
    creds.username = zero_padded_username(next_username_);
    creds.password = crypto::random_token(
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789", 16);
    creds.random_code = crypto::random_token("ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789", 16);

    WPKI_TRY(derived, crypto::derive_mac_key(creds.username, creds.password, creds.random_code));

    Bytes record;
    put_field(record, kTagReference, to_bytes(creds.username));
    put_field(record, kTagDeviceId, to_bytes(request.device_id));
    put_field(record, kTagRandomCode, to_bytes(creds.random_code));
    put_field(record, kTagDerivedKey, derived);
    WPKI_CHECK(storage::append_record(cfg_.state_dir / "registrations", kRecRegistration, record));

    RegistrationRecord r;
    r.username = creds.username;
    r.password_derivative = derived;
    r.random_code = creds.random_code;
    r.device_id = request.device_id;
    registrations_[r.username] = std::move(r);
    ++next_username_;
    return creds;
}

Result<enrollment::VerifiedRequest> CertificationAuthority::verify_request(
    const CertificateRequest& request) {
    WPKI_CHECK(codec::validate(request));
    std::lock_guard lock(mu_);

    // Fail-fast order: reference, then message authentication, then
    // proof of possession. Observable and fixed.
    auto it = registrations_.find(request.reference_number);
    if (it == registrations_.end() || it->second.consumed)
        return Error{Err::unknown_reference,
                     "no active registration for " + request.reference_number};

    WPKI_TRY(mac_input, codec::mac_bytes(request));
    WPKI_TRY(mac_ok, crypto::mac_verify(it->second.password_derivative, mac_input,
                                        request.request_mac));
    if (!mac_ok) return Error{Err::mac_mismatch, "request MAC does not verify"};

    WPKI_TRY(pop_input, codec::pop_bytes(request));
    auto pop = crypto::verify(pop_input, request.pop_signature, request.public_key_info);
    if (!pop.ok() || !pop.value())
        return Error{Err::pop_failure, "proof-of-possession signature does not verify"};

    return enrollment::VerifiedRequest{request.reference_number, request.subject,
                                       request.public_key_info, it->second.device_id};
}

Result<CertificateResponse> CertificationAuthority::issue_locked(
    const std::string& subject, const crypto::PublicKeyInfo& key,
    const profiles::CertificateTemplate& tpl) {
    std::uint64_t serial = next_serial_;
    auto cert = profiles::build_certificate(tpl, key, identity(), serial);
    if (!cert.ok()) return cert.error();

    // Write to the repository first, then publish in the ledger. An
    // interruption in between leaves an orphaned file, never a URL that
    // fails to resolve; resume reconciles the serial counter.
    auto url = repo_->store_certificate(cert.value());
    if (!url.ok() && url.code() == Err::duplicate_serial) {
        // Another instance over the same state (a service-identity
        // bootstrap) got there first; step past it and retry once.
        std::uint64_t stored_max = repo_->max_serial();
        if (stored_max >= serial) {
            serial = stored_max + 1;
            cert = profiles::build_certificate(tpl, key, identity(), serial);
            if (!cert.ok()) return cert.error();
            url = repo_->store_certificate(cert.value());
        }
    }
    if (!url.ok())
        return Error{Err::repository_unavailable, url.error().detail};
    next_serial_ = serial + 1;  // burned even if the ledger append fails

    Bytes record;
    put_u64_field(record, kTagSerial, serial);
    put_field(record, kTagSubject, to_bytes(subject));
    put_field(record, kTagUrl, to_bytes(url.value()));
    WPKI_CHECK(storage::append_record(cfg_.state_dir / "ledger", kRecIssued, record));
    ledger_[serial] = IssuedEntry{serial, subject, url.value(), std::nullopt, 0};

    return CertificateResponse{std::move(cert).value(), std::move(url).value()};
}

Result<CertificateResponse> CertificationAuthority::issue(
    const enrollment::VerifiedRequest& verified, std::uint64_t now) {
    std::lock_guard lock(mu_);
    auto it = registrations_.find(verified.username);
    if (it == registrations_.end() || it->second.consumed)
        return Error{Err::unknown_reference, "registration already consumed"};

    profiles::CertificateTemplate tpl;
    tpl.subject = verified.subject;
    tpl.not_before = now;
    tpl.lifetime_s = cfg_.cert_lifetime_s;
    tpl.extended_key_usage = profiles::kEkuClientAuth;
    tpl.issuer_alt_names = std::vector<std::string>{cfg_.name};
    WPKI_TRY(response, issue_locked(verified.subject, verified.public_key_info, tpl));

    Bytes consumed;
    put_field(consumed, kTagReference, to_bytes(verified.username));
    WPKI_CHECK(storage::append_record(cfg_.state_dir / "registrations", kRecConsumed, consumed));
    it->second.consumed = true;
    return response;
}

Result<CertificateResponse> CertificationAuthority::issue_direct(const std::string& subject,
                                                                 const crypto::PublicKeyInfo& key,
                                                                 std::uint8_t eku,
                                                                 std::uint64_t now) {
    std::lock_guard lock(mu_);
    profiles::CertificateTemplate tpl;
    tpl.subject = subject;
    tpl.not_before = now;
    tpl.lifetime_s = cfg_.cert_lifetime_s;
    tpl.extended_key_usage = eku;
    tpl.issuer_alt_names = std::vector<std::string>{cfg_.name};
    return issue_locked(subject, key, tpl);
}

Result<ShortLivedCertificate> CertificationAuthority::issue_short_lived(
    const std::string& subject, const crypto::PublicKeyInfo& ecdh_key, std::uint64_t now,
    std::uint64_t lifetime_s) {
    std::lock_guard lock(mu_);
    return profiles::build_short_lived(subject, ecdh_key, now, lifetime_s, identity(),
                                       cfg_.short_lived_max_s);
}

Result<void> CertificationAuthority::revoke(std::uint64_t serial, std::uint8_t reason,
                                            std::uint64_t now) {
    if (reason > 2) return Error{Err::invariant_violation, "unknown revocation reason"};
    std::lock_guard lock(mu_);
    auto it = ledger_.find(serial);
    if (it == ledger_.end())
        return Error{Err::unknown_serial, "serial " + std::to_string(serial) + " never issued"};
    if (it->second.revoked_at)
        return Error{Err::already_revoked,
                     "serial " + std::to_string(serial) + " already revoked"};

    Bytes record;
    put_u64_field(record, kTagSerial, serial);
    put_u64_field(record, kTagTimestamp, now);
    Bytes reason_value{reason};
    put_field(record, kTagReason, reason_value);
    WPKI_CHECK(storage::append_record(cfg_.state_dir / "ledger", kRecRevoked, record));
    it->second.revoked_at = now;
    it->second.reason = reason;
    return {};
}

Result<RevocationList> CertificationAuthority::generate_crl(std::uint64_t now,
                                                            std::uint64_t validity_s) {
    if (validity_s == 0) return Error{Err::invariant_violation, "validity must be positive"};
    std::lock_guard lock(mu_);
    RevocationList crl;
    crl.issuer = cfg_.name;
    crl.this_update = now;
    crl.next_update = now + validity_s;
    for (const auto& [serial, entry] : ledger_)  // map order: ascending serial
        if (entry.revoked_at) crl.entries.push_back({serial, *entry.revoked_at, entry.reason});

    WPKI_TRY(tbs, codec::tbs_bytes(crl));
    auto sig = crypto::sign(tbs, key_);
    if (!sig.ok()) return Error{Err::signing_failure, sig.error().detail};
    crl.signature = std::move(sig).value();

    auto published = repo_->publish_crl(crl);
    if (!published.ok()) return Error{Err::repository_unavailable, published.error().detail};
    return crl;
}

std::optional<RegistrationRecord> CertificationAuthority::registration(
    const std::string& username) const {
    std::lock_guard lock(mu_);
    auto it = registrations_.find(username);
    if (it == registrations_.end()) return std::nullopt;
    return it->second;
}

std::optional<IssuedEntry> CertificationAuthority::issued(std::uint64_t serial) const {
    std::lock_guard lock(mu_);
    auto it = ledger_.find(serial);
    if (it == ledger_.end()) return std::nullopt;
    return it->second;
}

Result<std::unique_ptr<net::FramedServer>> serve(const net::Endpoint& bind_to,
                                                 CertificationAuthority& ca) {
    auto handler = [&ca](const codec::Frame& request) -> Result<codec::Frame> {
        auto kind = static_cast<codec::Kind>(request.kind);
        codec::Frame reply;
        switch (kind) {
            case codec::Kind::registration_request: {
                auto req = codec::decode<RegistrationRequest>(request.payload);
                if (!req.ok()) return Error{Err::malformed, req.error().detail};
                WPKI_TRY(creds, ca.handle_registration(req.value()));
                WPKI_TRY(payload, codec::encode(creds));
                reply.kind = static_cast<std::uint8_t>(codec::Kind::credentials);
                reply.payload = std::move(payload);
                return reply;
            }
            case codec::Kind::certificate_request: {
                auto req = codec::decode<CertificateRequest>(request.payload);
                if (!req.ok()) return Error{Err::malformed, req.error().detail};
                WPKI_TRY(verified, ca.verify_request(req.value()));
                WPKI_TRY(response, ca.issue(verified, now_gmt()));
                WPKI_TRY(payload, codec::encode(response));
                reply.kind = static_cast<std::uint8_t>(codec::Kind::certificate_response);
                reply.payload = std::move(payload);
                return reply;
            }
            case codec::Kind::revoke_command: {
                auto cmd = codec::decode<RevokeCommand>(request.payload);
                if (!cmd.ok()) return Error{Err::malformed, cmd.error().detail};
                std::uint64_t now = now_gmt();
                WPKI_CHECK(ca.revoke(cmd->serial, cmd->reason, now));
                WPKI_CHECK(ca.generate_crl(now));
                ErrorReply ok{0, std::string("revoked ") + std::to_string(cmd->serial)};
                WPKI_TRY(payload, codec::encode(ok));
                reply.kind = static_cast<std::uint8_t>(codec::Kind::error_reply);
                reply.payload = std::move(payload);
                return reply;
            }
            default:
                return Error{Err::unknown_kind,
                             "kind " + std::to_string(unsigned(request.kind)) +
                                 " is not served here"};
        }
    };
    return net::FramedServer::start(bind_to, handler);
}

}  // namespace wpki::authority
