#include "wpki/codec.hpp"

#include <algorithm>
#include <array>

namespace wpki::codec {
namespace {

constexpr std::uint8_t raw(Tag t) { return static_cast<std::uint8_t>(t); }
constexpr std::uint8_t raw(Kind k) { return static_cast<std::uint8_t>(k); }

std::string hex_tag(std::uint8_t tag) {
    static constexpr char digits[] = "0123456789abcdef";
    return std::string("0x") + digits[tag >> 4] + digits[tag & 0x0F];
}

// ---- writing ------------------------------------------------------------

class TlvWriter {
public:
    Result<void> put(Tag tag, BytesView value) {
        if (value.size() > kMaxFieldValue)
            return Error{Err::field_too_large,
                         "field " + hex_tag(raw(tag)) + " is " + std::to_string(value.size()) +
                             " bytes (max 65535)"};
        if (static_cast<int>(raw(tag)) <= last_)
            return Error{Err::invariant_violation, "fields must be written in ascending tag order"};
        last_ = raw(tag);
        out_.push_back(raw(tag));
        put_u16_be(out_, static_cast<std::uint16_t>(value.size()));
        append(out_, value);
        return {};
    }

    Result<void> put_u8(Tag tag, std::uint8_t v) {
        std::array<std::uint8_t, 1> b{v};
        return put(tag, b);
    }

    Result<void> put_u64(Tag tag, std::uint64_t v) {
        Bytes b;
        put_u64_be(b, v);
        return put(tag, b);
    }

    Result<void> put_text(Tag tag, std::string_view s) { return put(tag, to_bytes(s)); }

    Bytes take() { return std::move(out_); }

private:
    Bytes out_;
    int last_ = -1;
};

Bytes pki_value(const crypto::PublicKeyInfo& k) {
    Bytes v{k.curve_id};
    append(v, k.point);
    return v;
}

Bytes sig_value(const crypto::SignatureValue& s) {
    Bytes v{s.algorithm_id};
    append(v, s.bytes);
    return v;
}

Bytes text_list_value(const std::vector<std::string>& list) {
    Bytes v;
    for (const auto& s : list) {
        v.push_back(static_cast<std::uint8_t>(s.size()));
        append(v, to_bytes(s));
    }
    return v;
}

Bytes entries_value(const std::vector<RevokedEntry>& entries) {
    Bytes v;
    for (const auto& e : entries) {
        put_u64_be(v, e.serial);
        put_u64_be(v, e.revoked_at);
        v.push_back(e.reason);
    }
    return v;
}

// ---- splitting ----------------------------------------------------------

struct FieldView {
    std::uint8_t tag;
    BytesView value;
};

Result<std::vector<FieldView>> split(BytesView in, BytesView allowed) {
    std::vector<FieldView> out;
    std::size_t pos = 0;
    int last = -1;
    while (pos < in.size()) {
        if (in.size() - pos < 3) {
            if (out.empty()) return Error{Err::malformed, "input shorter than one field"};
            return Error{Err::non_canonical, "trailing bytes after last field"};
        }
        std::uint8_t tag = in[pos];
        std::uint16_t len = get_u16_be(in.data() + pos + 1);
        pos += 3;
        if (in.size() - pos < len)
            return Error{Err::malformed, "length of field " + hex_tag(tag) + " overruns payload"};
        if (!std::binary_search(allowed.begin(), allowed.end(), tag))
            return Error{Err::unknown_tag, "tag " + hex_tag(tag)};
        if (static_cast<int>(tag) == last)
            return Error{Err::non_canonical, "duplicate tag " + hex_tag(tag)};
        if (static_cast<int>(tag) < last)
            return Error{Err::non_canonical, "tag " + hex_tag(tag) + " out of order"};
        out.push_back(FieldView{tag, in.subspan(pos, len)});
        pos += len;
        last = tag;
    }
    return out;
}

class Fields {
public:
    explicit Fields(std::vector<FieldView> f) : fields_(std::move(f)) {}

    std::optional<BytesView> take(Tag t) {
        if (i_ < fields_.size() && fields_[i_].tag == raw(t)) return fields_[i_++].value;
        return std::nullopt;
    }

    Result<BytesView> need(Tag t, const char* name) {
        if (auto v = take(t)) return *v;
        return Error{Err::malformed, std::string("missing field ") + name};
    }

    Result<void> finish() const {
        if (i_ != fields_.size())
            return Error{Err::malformed, "unconsumed field " + hex_tag(fields_[i_].tag)};
        return {};
    }

private:
    std::vector<FieldView> fields_;
    std::size_t i_ = 0;
};

// ---- value parsers -------------------------------------------------------

Result<std::uint8_t> as_u8(BytesView v, const char* name) {
    if (v.size() != 1) return Error{Err::malformed, std::string(name) + " must be 1 byte"};
    return v[0];
}

Result<std::uint64_t> as_u64(BytesView v, const char* name) {
    if (v.size() != 8) return Error{Err::malformed, std::string(name) + " must be 8 bytes"};
    return get_u64_be(v.data());
}

Result<std::string> as_text(BytesView v, const char* name) {
    if (v.empty()) return Error{Err::malformed, std::string(name) + " must not be empty"};
    return wpki::to_string(v);
}

Result<std::vector<std::string>> as_text_list(BytesView v, const char* name) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while (pos < v.size()) {
        std::uint8_t len = v[pos++];
        if (len == 0 || v.size() - pos < len)
            return Error{Err::malformed, std::string(name) + " has a bad list entry"};
        out.push_back(wpki::to_string(v.subspan(pos, len)));
        pos += len;
    }
    if (out.empty()) return Error{Err::non_canonical, std::string(name) + " list is empty"};
    return out;
}

template <std::size_t N>
Result<std::array<std::uint8_t, N>> as_fixed(BytesView v, const char* name) {
    if (v.size() != N)
        return Error{Err::malformed, std::string(name) + " must be " + std::to_string(N) + " bytes"};
    std::array<std::uint8_t, N> out{};
    std::copy(v.begin(), v.end(), out.begin());
    return out;
}

Result<crypto::PublicKeyInfo> as_pki(BytesView v, const char* name) {
    if (v.size() < 2) return Error{Err::malformed, std::string(name) + " too short"};
    return crypto::PublicKeyInfo{v[0], copy_bytes(v.subspan(1))};
}

Result<crypto::SignatureValue> as_sig(BytesView v, const char* name) {
    if (v.size() < 2) return Error{Err::malformed, std::string(name) + " too short"};
    return crypto::SignatureValue{v[0], copy_bytes(v.subspan(1))};
}

Result<std::vector<RevokedEntry>> as_entries(BytesView v) {
    if (v.empty()) return Error{Err::non_canonical, "empty revoked-entry list"};
    if (v.size() % 17 != 0)
        return Error{Err::malformed, "revoked-entry list must be 17 bytes per entry"};
    std::vector<RevokedEntry> out;
    for (std::size_t pos = 0; pos < v.size(); pos += 17) {
        RevokedEntry e;
        e.serial = get_u64_be(v.data() + pos);
        e.revoked_at = get_u64_be(v.data() + pos + 8);
        e.reason = v[pos + 16];
        out.push_back(e);
    }
    return out;
}

// ---- shared validation helpers -------------------------------------------

Result<void> check_text(const std::string& s, const char* name, std::size_t max = 255) {
    if (s.empty()) return Error{Err::invariant_violation, std::string(name) + " is empty"};
    if (s.size() > max)
        return Error{Err::invariant_violation,
                     std::string(name) + " exceeds " + std::to_string(max) + " bytes"};
    return {};
}

Result<void> check_text_list(const std::vector<std::string>& list, const char* name) {
    if (list.empty()) return Error{Err::invariant_violation, std::string(name) + " list is empty"};
    if (list.size() > 32)
        return Error{Err::invariant_violation, std::string(name) + " list exceeds 32 entries"};
    for (const auto& s : list) WPKI_CHECK(check_text(s, name));
    return {};
}

Result<void> check_pki(const crypto::PublicKeyInfo& k, const char* name) {
    if (k.curve_id == 0)
        return Error{Err::invariant_violation, std::string(name) + " curve id is zero"};
    if (k.point.empty() || k.point.size() > 254)
        return Error{Err::invariant_violation, std::string(name) + " key bytes out of range"};
    return {};
}

Result<void> check_sig(const crypto::SignatureValue& s, const char* name) {
    if (s.algorithm_id == 0)
        return Error{Err::invariant_violation, std::string(name) + " algorithm id is zero"};
    if (s.bytes.empty() || s.bytes.size() > 255)
        return Error{Err::invariant_violation, std::string(name) + " bytes out of range"};
    return {};
}

Result<void> check_period(std::uint64_t nb, std::uint64_t na) {
    if (nb >= na)
        return Error{Err::invariant_violation, "valid_not_before must precede valid_not_after"};
    return {};
}

Result<void> check_url_text(const std::string& s, const char* name) { return check_text(s, name); }

Result<void> validate_unsigned(const WirelessCertificate& c) {
    if (c.version != 3) return Error{Err::invariant_violation, "version must be 3"};
    WPKI_CHECK(check_text(c.issuer, "issuer"));
    WPKI_CHECK(check_period(c.valid_not_before, c.valid_not_after));
    WPKI_CHECK(check_text(c.subject, "subject"));
    WPKI_CHECK(check_pki(c.public_key_info, "public_key_info"));
    const auto& e = c.extensions;
    if (e.certificate_policy) WPKI_CHECK(check_text(*e.certificate_policy, "certificate_policy"));
    if (e.subject_alt_names) WPKI_CHECK(check_text_list(*e.subject_alt_names, "subject_alt_names"));
    if (e.issuer_alt_names) WPKI_CHECK(check_text_list(*e.issuer_alt_names, "issuer_alt_names"));
    if (e.crl_distribution_points)
        WPKI_CHECK(check_url_text(*e.crl_distribution_points, "crl_distribution_points"));
    if (e.domain_information) WPKI_CHECK(check_text(*e.domain_information, "domain_information"));
    if (e.authority_info_access)
        WPKI_CHECK(check_url_text(*e.authority_info_access, "authority_info_access"));
    return {};
}

Result<void> validate_unsigned(const ShortLivedCertificate& c) {
    if (c.certificate_version != 1)
        return Error{Err::invariant_violation, "certificate_version must be 1"};
    if (c.signature_algorithm_id != crypto::kAlgEcdsaSha256)
        return Error{Err::invariant_violation, "short-lived profile requires the ECDSA-SHA id"};
    WPKI_CHECK(check_text(c.issuer, "issuer"));
    WPKI_CHECK(check_period(c.valid_not_before, c.valid_not_after));
    WPKI_CHECK(check_text(c.subject, "subject"));
    if (c.public_key_type != profiles::kKeyTypeEcdh)
        return Error{Err::invariant_violation, "public_key_type must be the ECDH id"};
    if (c.parameter_specifier == 0)
        return Error{Err::invariant_violation, "parameter_specifier is zero"};
    if (c.public_key.empty() || c.public_key.size() > 254)
        return Error{Err::invariant_violation, "public_key bytes out of range"};
    return {};
}

Result<void> validate_unsigned(const RevocationList& c) {
    WPKI_CHECK(check_text(c.issuer, "issuer"));
    if (c.this_update >= c.next_update)
        return Error{Err::invariant_violation, "this_update must precede next_update"};
    std::uint64_t prev = 0;
    bool first = true;
    for (const auto& e : c.entries) {
        if (!first && e.serial <= prev)
            return Error{Err::invariant_violation, "revoked entries must ascend by serial"};
        if (e.reason > 2) return Error{Err::invariant_violation, "unknown revocation reason"};
        prev = e.serial;
        first = false;
    }
    return {};
}

Result<void> validate_unsigned(const StatusResponse& c) {
    if (static_cast<std::uint8_t>(c.status) > 2)
        return Error{Err::invariant_violation, "unknown status code"};
    bool good = c.status == CertStatus::good;
    if (good && c.failure_detail)
        return Error{Err::invariant_violation, "good status must not carry failure detail"};
    if (!good && !c.failure_detail)
        return Error{Err::invariant_violation, "non-good status requires failure detail"};
    if (c.failure_detail) WPKI_CHECK(check_text(*c.failure_detail, "failure_detail"));
    return {};
}

// ---- entity writers -------------------------------------------------------

Result<Bytes> write_wireless(const WirelessCertificate& c, bool with_sig) {
    WPKI_CHECK(validate_unsigned(c));
    if (with_sig) WPKI_CHECK(check_sig(c.signature, "signature"));
    TlvWriter w;
    WPKI_CHECK(w.put_u8(Tag::version, c.version));
    WPKI_CHECK(w.put_u64(Tag::serial, c.serial));
    WPKI_CHECK(w.put_u8(Tag::signature_algorithm_id, c.signature_algorithm_id));
    WPKI_CHECK(w.put_text(Tag::issuer, c.issuer));
    WPKI_CHECK(w.put_u64(Tag::valid_not_before, c.valid_not_before));
    WPKI_CHECK(w.put_u64(Tag::valid_not_after, c.valid_not_after));
    WPKI_CHECK(w.put_text(Tag::subject, c.subject));
    WPKI_CHECK(w.put(Tag::public_key_info, pki_value(c.public_key_info)));
    const auto& e = c.extensions;
    if (e.authority_key_id) WPKI_CHECK(w.put(Tag::authority_key_id, *e.authority_key_id));
    if (e.subject_key_id) WPKI_CHECK(w.put(Tag::subject_key_id, *e.subject_key_id));
    if (e.key_usage) WPKI_CHECK(w.put_u8(Tag::key_usage, *e.key_usage));
    if (e.certificate_policy) WPKI_CHECK(w.put_text(Tag::certificate_policy, *e.certificate_policy));
    if (e.subject_alt_names)
        WPKI_CHECK(w.put(Tag::subject_alt_names, text_list_value(*e.subject_alt_names)));
    if (e.issuer_alt_names)
        WPKI_CHECK(w.put(Tag::issuer_alt_names, text_list_value(*e.issuer_alt_names)));
    if (e.extended_key_usage) WPKI_CHECK(w.put_u8(Tag::extended_key_usage, *e.extended_key_usage));
    if (e.crl_distribution_points)
        WPKI_CHECK(w.put_text(Tag::crl_distribution_points, *e.crl_distribution_points));
    if (e.domain_information)
        WPKI_CHECK(w.put_text(Tag::domain_information, *e.domain_information));
    if (e.authority_info_access)
        WPKI_CHECK(w.put_text(Tag::authority_info_access, *e.authority_info_access));
    if (with_sig) WPKI_CHECK(w.put(Tag::signature_value, sig_value(c.signature)));
    return w.take();
}

Result<Bytes> write_short_lived(const ShortLivedCertificate& c, bool with_sig) {
    WPKI_CHECK(validate_unsigned(c));
    if (with_sig) WPKI_CHECK(check_sig(c.signature, "signature"));
    TlvWriter w;
    WPKI_CHECK(w.put_u8(Tag::version, c.certificate_version));
    WPKI_CHECK(w.put_u8(Tag::signature_algorithm_id, c.signature_algorithm_id));
    WPKI_CHECK(w.put_text(Tag::issuer, c.issuer));
    WPKI_CHECK(w.put_u64(Tag::valid_not_before, c.valid_not_before));
    WPKI_CHECK(w.put_u64(Tag::valid_not_after, c.valid_not_after));
    WPKI_CHECK(w.put_text(Tag::subject, c.subject));
    WPKI_CHECK(w.put(Tag::public_key_info, c.public_key));
    if (with_sig) WPKI_CHECK(w.put(Tag::signature_value, sig_value(c.signature)));
    WPKI_CHECK(w.put_u8(Tag::public_key_type, c.public_key_type));
    WPKI_CHECK(w.put_u8(Tag::parameter_specifier, c.parameter_specifier));
    return w.take();
}

Result<Bytes> write_revocation_list(const RevocationList& c, bool with_sig) {
    WPKI_CHECK(validate_unsigned(c));
    if (with_sig) WPKI_CHECK(check_sig(c.signature, "signature"));
    TlvWriter w;
    WPKI_CHECK(w.put_text(Tag::issuer, c.issuer));
    if (with_sig) WPKI_CHECK(w.put(Tag::signature_value, sig_value(c.signature)));
    if (!c.entries.empty()) WPKI_CHECK(w.put(Tag::revoked_entry, entries_value(c.entries)));
    WPKI_CHECK(w.put_u64(Tag::this_update, c.this_update));
    WPKI_CHECK(w.put_u64(Tag::next_update, c.next_update));
    return w.take();
}

Result<Bytes> write_status_response(const StatusResponse& c, bool with_sig) {
    WPKI_CHECK(validate_unsigned(c));
    if (with_sig) WPKI_CHECK(check_sig(c.signature, "signature"));
    TlvWriter w;
    WPKI_CHECK(w.put_u64(Tag::serial, c.serial));
    if (with_sig) WPKI_CHECK(w.put(Tag::signature_value, sig_value(c.signature)));
    WPKI_CHECK(w.put_u8(Tag::status_code, static_cast<std::uint8_t>(c.status)));
    WPKI_CHECK(w.put_u64(Tag::produced_at, c.produced_at));
    WPKI_CHECK(w.put(Tag::nonce, c.nonce));
    if (c.failure_detail) WPKI_CHECK(w.put_text(Tag::failure_detail, *c.failure_detail));
    return w.take();
}

// level: 0 = proof-of-possession input, 1 = request-mac input, 2 = full message
Result<Bytes> write_cert_request(const CertificateRequest& r, int level) {
    WPKI_CHECK(check_text(r.reference_number, "reference_number"));
    WPKI_CHECK(check_text(r.subject, "subject"));
    WPKI_CHECK(check_pki(r.public_key_info, "public_key_info"));
    if (level >= 1) WPKI_CHECK(check_sig(r.pop_signature, "pop_signature"));
    TlvWriter w;
    WPKI_CHECK(w.put_text(Tag::subject, r.subject));
    WPKI_CHECK(w.put(Tag::public_key_info, pki_value(r.public_key_info)));
    WPKI_CHECK(w.put_text(Tag::reference_number, r.reference_number));
    if (level >= 1) WPKI_CHECK(w.put(Tag::pop_signature, sig_value(r.pop_signature)));
    if (level >= 2) WPKI_CHECK(w.put(Tag::request_mac, r.request_mac.bytes));
    return w.take();
}

Result<Bytes> embedded_value(const WirelessCertificate& c) {
    WPKI_TRY(body, encode(c));
    Bytes v{raw(Kind::wireless_certificate)};
    append(v, body);
    return v;
}

Result<Bytes> embedded_value(const ShortLivedCertificate& c) {
    WPKI_TRY(body, encode(c));
    Bytes v{raw(Kind::short_lived_certificate)};
    append(v, body);
    return v;
}

}  // namespace

// ---- validate --------------------------------------------------------------

Result<void> validate(const RegistrationRequest& r) {
    if (r.device_id.empty()) return Error{Err::empty_device_id, "device id is empty"};
    if (r.device_id.size() > 64) return Error{Err::empty_device_id, "device id exceeds 64 bytes"};
    return {};
}

Result<void> validate(const Credentials& c) {
    WPKI_CHECK(check_text(c.username, "username"));
    WPKI_CHECK(check_text(c.password, "password"));
    if (c.random_code.size() != 16)
        return Error{Err::invariant_violation, "random code must be 16 characters"};
    for (char ch : c.random_code)
        if (!((ch >= 'A' && ch <= 'Z') || (ch >= '0' && ch <= '9')))
            return Error{Err::invariant_violation, "random code must match [A-Z0-9]"};
    return {};
}

Result<void> validate(const CertificateRequest& r) {
    WPKI_CHECK(check_text(r.reference_number, "reference_number"));
    WPKI_CHECK(check_text(r.subject, "subject"));
    WPKI_CHECK(check_pki(r.public_key_info, "public_key_info"));
    WPKI_CHECK(check_sig(r.pop_signature, "pop_signature"));
    return {};
}

Result<void> validate(const CertificateResponse& r) {
    WPKI_CHECK(validate(r.certificate));
    WPKI_CHECK(check_url_text(r.cert_url, "cert_url"));
    return {};
}

Result<void> validate(const WirelessCertificate& c) {
    WPKI_CHECK(validate_unsigned(c));
    return check_sig(c.signature, "signature");
}

Result<void> validate(const ShortLivedCertificate& c) {
    WPKI_CHECK(validate_unsigned(c));
    return check_sig(c.signature, "signature");
}

Result<void> validate(const RevocationList& c) {
    WPKI_CHECK(validate_unsigned(c));
    return check_sig(c.signature, "signature");
}

Result<void> validate(const StatusRequest& r) {
    if (const auto* cert = std::get_if<WirelessCertificate>(&r.target)) return validate(*cert);
    if (const auto* cert = std::get_if<ShortLivedCertificate>(&r.target)) return validate(*cert);
    return check_url_text(std::get<std::string>(r.target), "cert_url");
}

Result<void> validate(const StatusResponse& c) {
    WPKI_CHECK(validate_unsigned(c));
    return check_sig(c.signature, "signature");
}

Result<void> validate(const ErrorReply& e) {
    if (e.detail) WPKI_CHECK(check_text(*e.detail, "detail"));
    return {};
}

Result<void> validate(const RevokeCommand& c) {
    if (c.reason > 2) return Error{Err::invariant_violation, "unknown revocation reason"};
    return {};
}

Result<void> validate(const FetchCommand&) { return {}; }

Result<void> validate(const ClientState& s) {
    if (s.curve_id == 0) return Error{Err::invariant_violation, "curve id is zero"};
    if (s.private_key.empty() || s.private_key.size() > 254)
        return Error{Err::invariant_violation, "private key bytes out of range"};
    WPKI_CHECK(validate(s.credentials));
    return check_url_text(s.cert_url, "cert_url");
}

Result<void> validate(const CertUrlPresentation& p) {
    return check_url_text(p.cert_url, "cert_url");
}

// ---- encode -----------------------------------------------------------------

Result<Bytes> encode(const RegistrationRequest& r) {
    WPKI_CHECK(validate(r));
    TlvWriter w;
    WPKI_CHECK(w.put_text(Tag::device_id, r.device_id));
    return w.take();
}

Result<Bytes> encode(const Credentials& c) {
    WPKI_CHECK(validate(c));
    TlvWriter w;
    WPKI_CHECK(w.put_text(Tag::reference_number, c.username));
    WPKI_CHECK(w.put_text(Tag::random_code, c.random_code));
    WPKI_CHECK(w.put_text(Tag::password, c.password));
    return w.take();
}

Result<Bytes> encode(const CertificateRequest& r) { return write_cert_request(r, 2); }

Result<Bytes> encode(const CertificateResponse& r) {
    WPKI_CHECK(check_url_text(r.cert_url, "cert_url"));
    TlvWriter w;
    WPKI_TRY(cert, embedded_value(r.certificate));
    WPKI_CHECK(w.put(Tag::embedded_certificate, cert));
    WPKI_CHECK(w.put_text(Tag::cert_url, r.cert_url));
    return w.take();
}

Result<Bytes> encode(const WirelessCertificate& c) { return write_wireless(c, true); }

Result<Bytes> encode(const ShortLivedCertificate& c) { return write_short_lived(c, true); }

Result<Bytes> encode(const RevocationList& c) { return write_revocation_list(c, true); }

Result<Bytes> encode(const StatusRequest& r) {
    TlvWriter w;
    if (const auto* cert = std::get_if<WirelessCertificate>(&r.target)) {
        WPKI_TRY(v, embedded_value(*cert));
        WPKI_CHECK(w.put(Tag::embedded_certificate, v));
    } else if (const auto* cert = std::get_if<ShortLivedCertificate>(&r.target)) {
        WPKI_TRY(v, embedded_value(*cert));
        WPKI_CHECK(w.put(Tag::embedded_certificate, v));
    } else {
        const auto& url = std::get<std::string>(r.target);
        WPKI_CHECK(check_url_text(url, "cert_url"));
        WPKI_CHECK(w.put_text(Tag::cert_url, url));
    }
    WPKI_CHECK(w.put(Tag::nonce, r.nonce));
    return w.take();
}

Result<Bytes> encode(const StatusResponse& c) { return write_status_response(c, true); }

Result<Bytes> encode(const ErrorReply& e) {
    WPKI_CHECK(validate(e));
    TlvWriter w;
    WPKI_CHECK(w.put_u8(Tag::status_code, e.code));
    if (e.detail) WPKI_CHECK(w.put_text(Tag::failure_detail, *e.detail));
    return w.take();
}

Result<Bytes> encode(const RevokeCommand& c) {
    WPKI_CHECK(validate(c));
    TlvWriter w;
    WPKI_CHECK(w.put_u64(Tag::serial, c.serial));
    WPKI_CHECK(w.put_u8(Tag::revocation_reason, c.reason));
    return w.take();
}

Result<Bytes> encode(const FetchCommand& c) {
    TlvWriter w;
    if (c.serial) WPKI_CHECK(w.put_u64(Tag::serial, *c.serial));
    return w.take();
}

Result<Bytes> encode(const ClientState& s) {
    WPKI_CHECK(validate(s));
    TlvWriter w;
    WPKI_CHECK(w.put_u8(Tag::parameter_specifier, s.curve_id));
    WPKI_CHECK(w.put_text(Tag::reference_number, s.credentials.username));
    WPKI_CHECK(w.put_text(Tag::random_code, s.credentials.random_code));
    WPKI_CHECK(w.put_text(Tag::password, s.credentials.password));
    WPKI_CHECK(w.put_text(Tag::cert_url, s.cert_url));
    WPKI_CHECK(w.put(Tag::private_key, s.private_key));
    return w.take();
}

Result<Bytes> encode(const CertUrlPresentation& p) {
    WPKI_CHECK(validate(p));
    TlvWriter w;
    WPKI_CHECK(w.put_text(Tag::cert_url, p.cert_url));
    return w.take();
}

// ---- to-be-signed views -------------------------------------------------------

Result<Bytes> tbs_bytes(const WirelessCertificate& c) { return write_wireless(c, false); }
Result<Bytes> tbs_bytes(const ShortLivedCertificate& c) { return write_short_lived(c, false); }
Result<Bytes> tbs_bytes(const RevocationList& c) { return write_revocation_list(c, false); }
Result<Bytes> tbs_bytes(const StatusResponse& c) { return write_status_response(c, false); }

Result<Bytes> pop_bytes(const CertificateRequest& r) { return write_cert_request(r, 0); }
Result<Bytes> mac_bytes(const CertificateRequest& r) { return write_cert_request(r, 1); }

// ---- decode ---------------------------------------------------------------------

namespace {

Result<CertTarget> parse_embedded(BytesView v, bool allow_short_lived) {
    if (v.size() < 2) return Error{Err::malformed, "embedded certificate too short"};
    std::uint8_t kind = v[0];
    BytesView body = v.subspan(1);
    if (kind == raw(Kind::wireless_certificate)) {
        WPKI_TRY(cert, decode<WirelessCertificate>(body));
        return CertTarget{std::move(cert)};
    }
    if (allow_short_lived && kind == raw(Kind::short_lived_certificate)) {
        WPKI_TRY(cert, decode<ShortLivedCertificate>(body));
        return CertTarget{std::move(cert)};
    }
    return Error{Err::unknown_kind, "embedded certificate kind " + std::to_string(unsigned(kind))};
}

}  // namespace

template <>
Result<RegistrationRequest> decode<RegistrationRequest>(BytesView payload) {
    static constexpr std::uint8_t allowed[] = {0x33};
    WPKI_TRY(raw_fields, split(payload, allowed));
    Fields f(std::move(raw_fields));
    RegistrationRequest r;
    WPKI_TRY(v, f.need(Tag::device_id, "device_id"));
    WPKI_TRY(id, as_text(v, "device_id"));
    r.device_id = std::move(id);
    WPKI_CHECK(f.finish());
    WPKI_CHECK(validate(r));
    return r;
}

template <>
Result<Credentials> decode<Credentials>(BytesView payload) {
    static constexpr std::uint8_t allowed[] = {0x30, 0x34, 0x35};
    WPKI_TRY(raw_fields, split(payload, allowed));
    Fields f(std::move(raw_fields));
    Credentials c;
    WPKI_TRY(u, f.need(Tag::reference_number, "username"));
    WPKI_TRY(uu, as_text(u, "username"));
    c.username = std::move(uu);
    WPKI_TRY(rc, f.need(Tag::random_code, "random_code"));
    WPKI_TRY(rcv, as_text(rc, "random_code"));
    c.random_code = std::move(rcv);
    WPKI_TRY(p, f.need(Tag::password, "password"));
    WPKI_TRY(pv, as_text(p, "password"));
    c.password = std::move(pv);
    WPKI_CHECK(f.finish());
    WPKI_CHECK(validate(c));
    return c;
}

template <>
Result<CertificateRequest> decode<CertificateRequest>(BytesView payload) {
    static constexpr std::uint8_t allowed[] = {0x07, 0x08, 0x30, 0x31, 0x32};
    WPKI_TRY(raw_fields, split(payload, allowed));
    Fields f(std::move(raw_fields));
    CertificateRequest r;
    WPKI_TRY(s, f.need(Tag::subject, "subject"));
    WPKI_TRY(sv, as_text(s, "subject"));
    r.subject = std::move(sv);
    WPKI_TRY(k, f.need(Tag::public_key_info, "public_key_info"));
    WPKI_TRY(kv, as_pki(k, "public_key_info"));
    r.public_key_info = std::move(kv);
    WPKI_TRY(rn, f.need(Tag::reference_number, "reference_number"));
    WPKI_TRY(rnv, as_text(rn, "reference_number"));
    r.reference_number = std::move(rnv);
    WPKI_TRY(ps, f.need(Tag::pop_signature, "pop_signature"));
    WPKI_TRY(psv, as_sig(ps, "pop_signature"));
    r.pop_signature = std::move(psv);
    WPKI_TRY(m, f.need(Tag::request_mac, "request_mac"));
    WPKI_TRY(mv, as_fixed<32>(m, "request_mac"));
    r.request_mac.bytes = mv;
    WPKI_CHECK(f.finish());
    WPKI_CHECK(validate(r));
    return r;
}

template <>
Result<WirelessCertificate> decode<WirelessCertificate>(BytesView payload) {
    static constexpr std::uint8_t allowed[] = {0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07,
                                               0x08, 0x10, 0x11, 0x12, 0x13, 0x14, 0x15,
                                               0x16, 0x17, 0x18, 0x19, 0x20};
    WPKI_TRY(raw_fields, split(payload, allowed));
    Fields f(std::move(raw_fields));
    WirelessCertificate c;
    WPKI_TRY(ver, f.need(Tag::version, "version"));
    WPKI_TRY(verv, as_u8(ver, "version"));
    c.version = verv;
    WPKI_TRY(ser, f.need(Tag::serial, "serial"));
    WPKI_TRY(serv, as_u64(ser, "serial"));
    c.serial = serv;
    WPKI_TRY(alg, f.need(Tag::signature_algorithm_id, "signature_algorithm_id"));
    WPKI_TRY(algv, as_u8(alg, "signature_algorithm_id"));
    c.signature_algorithm_id = algv;
    WPKI_TRY(iss, f.need(Tag::issuer, "issuer"));
    WPKI_TRY(issv, as_text(iss, "issuer"));
    c.issuer = std::move(issv);
    WPKI_TRY(nb, f.need(Tag::valid_not_before, "valid_not_before"));
    WPKI_TRY(nbv, as_u64(nb, "valid_not_before"));
    c.valid_not_before = nbv;
    WPKI_TRY(na, f.need(Tag::valid_not_after, "valid_not_after"));
    WPKI_TRY(nav, as_u64(na, "valid_not_after"));
    c.valid_not_after = nav;
    WPKI_TRY(sub, f.need(Tag::subject, "subject"));
    WPKI_TRY(subv, as_text(sub, "subject"));
    c.subject = std::move(subv);
    WPKI_TRY(pki, f.need(Tag::public_key_info, "public_key_info"));
    WPKI_TRY(pkiv, as_pki(pki, "public_key_info"));
    c.public_key_info = std::move(pkiv);

    auto& e = c.extensions;
    if (auto v = f.take(Tag::authority_key_id)) {
        WPKI_TRY(x, as_fixed<20>(*v, "authority_key_id"));
        e.authority_key_id = x;
    }
    if (auto v = f.take(Tag::subject_key_id)) {
        WPKI_TRY(x, as_fixed<20>(*v, "subject_key_id"));
        e.subject_key_id = x;
    }
    if (auto v = f.take(Tag::key_usage)) {
        WPKI_TRY(x, as_u8(*v, "key_usage"));
        e.key_usage = x;
    }
    if (auto v = f.take(Tag::certificate_policy)) {
        WPKI_TRY(x, as_text(*v, "certificate_policy"));
        e.certificate_policy = std::move(x);
    }
    if (auto v = f.take(Tag::subject_alt_names)) {
        WPKI_TRY(x, as_text_list(*v, "subject_alt_names"));
        e.subject_alt_names = std::move(x);
    }
    if (auto v = f.take(Tag::issuer_alt_names)) {
        WPKI_TRY(x, as_text_list(*v, "issuer_alt_names"));
        e.issuer_alt_names = std::move(x);
    }
    if (auto v = f.take(Tag::extended_key_usage)) {
        WPKI_TRY(x, as_u8(*v, "extended_key_usage"));
        e.extended_key_usage = x;
    }
    if (auto v = f.take(Tag::crl_distribution_points)) {
        WPKI_TRY(x, as_text(*v, "crl_distribution_points"));
        e.crl_distribution_points = std::move(x);
    }
    if (auto v = f.take(Tag::domain_information)) {
        WPKI_TRY(x, as_text(*v, "domain_information"));
        e.domain_information = std::move(x);
    }
    if (auto v = f.take(Tag::authority_info_access)) {
        WPKI_TRY(x, as_text(*v, "authority_info_access"));
        e.authority_info_access = std::move(x);
    }

    WPKI_TRY(sig, f.need(Tag::signature_value, "signature"));
    WPKI_TRY(sigv, as_sig(sig, "signature"));
    c.signature = std::move(sigv);
    WPKI_CHECK(f.finish());
    WPKI_CHECK(validate(c));
    return c;
}

template <>
Result<ShortLivedCertificate> decode<ShortLivedCertificate>(BytesView payload) {
    static constexpr std::uint8_t allowed[] = {0x01, 0x03, 0x04, 0x05, 0x06,
                                               0x07, 0x08, 0x20, 0x21, 0x22};
    WPKI_TRY(raw_fields, split(payload, allowed));
    Fields f(std::move(raw_fields));
    ShortLivedCertificate c;
    WPKI_TRY(ver, f.need(Tag::version, "certificate_version"));
    WPKI_TRY(verv, as_u8(ver, "certificate_version"));
    c.certificate_version = verv;
    WPKI_TRY(alg, f.need(Tag::signature_algorithm_id, "signature_algorithm_id"));
    WPKI_TRY(algv, as_u8(alg, "signature_algorithm_id"));
    c.signature_algorithm_id = algv;
    WPKI_TRY(iss, f.need(Tag::issuer, "issuer"));
    WPKI_TRY(issv, as_text(iss, "issuer"));
    c.issuer = std::move(issv);
    WPKI_TRY(nb, f.need(Tag::valid_not_before, "valid_not_before"));
    WPKI_TRY(nbv, as_u64(nb, "valid_not_before"));
    c.valid_not_before = nbv;
    WPKI_TRY(na, f.need(Tag::valid_not_after, "valid_not_after"));
    WPKI_TRY(nav, as_u64(na, "valid_not_after"));
    c.valid_not_after = nav;
    WPKI_TRY(sub, f.need(Tag::subject, "subject"));
    WPKI_TRY(subv, as_text(sub, "subject"));
    c.subject = std::move(subv);
    WPKI_TRY(pk, f.need(Tag::public_key_info, "public_key"));
    if (pk.empty()) return Error{Err::malformed, "public_key must not be empty"};
    c.public_key = copy_bytes(pk);
    WPKI_TRY(sig, f.need(Tag::signature_value, "signature"));
    WPKI_TRY(sigv, as_sig(sig, "signature"));
    c.signature = std::move(sigv);
    WPKI_TRY(pkt, f.need(Tag::public_key_type, "public_key_type"));
    WPKI_TRY(pktv, as_u8(pkt, "public_key_type"));
    c.public_key_type = pktv;
    WPKI_TRY(ps, f.need(Tag::parameter_specifier, "parameter_specifier"));
    WPKI_TRY(psv, as_u8(ps, "parameter_specifier"));
    c.parameter_specifier = psv;
    WPKI_CHECK(f.finish());
    WPKI_CHECK(validate(c));
    return c;
}

template <>
Result<CertificateResponse> decode<CertificateResponse>(BytesView payload) {
    static constexpr std::uint8_t allowed[] = {0x36, 0x50};
    WPKI_TRY(raw_fields, split(payload, allowed));
    Fields f(std::move(raw_fields));
    CertificateResponse r;
    WPKI_TRY(cv, f.need(Tag::embedded_certificate, "certificate"));
    WPKI_TRY(target, parse_embedded(cv, /*allow_short_lived=*/false));
    r.certificate = std::get<WirelessCertificate>(std::move(target));
    WPKI_TRY(u, f.need(Tag::cert_url, "cert_url"));
    WPKI_TRY(uv, as_text(u, "cert_url"));
    r.cert_url = std::move(uv);
    WPKI_CHECK(f.finish());
    WPKI_CHECK(validate(r));
    return r;
}

template <>
Result<RevocationList> decode<RevocationList>(BytesView payload) {
    static constexpr std::uint8_t allowed[] = {0x04, 0x20, 0x40, 0x41, 0x42};
    WPKI_TRY(raw_fields, split(payload, allowed));
    Fields f(std::move(raw_fields));
    RevocationList c;
    WPKI_TRY(iss, f.need(Tag::issuer, "issuer"));
    WPKI_TRY(issv, as_text(iss, "issuer"));
    c.issuer = std::move(issv);
    WPKI_TRY(sig, f.need(Tag::signature_value, "signature"));
    WPKI_TRY(sigv, as_sig(sig, "signature"));
    c.signature = std::move(sigv);
    if (auto v = f.take(Tag::revoked_entry)) {
        WPKI_TRY(entries, as_entries(*v));
        c.entries = std::move(entries);
    }
    WPKI_TRY(tu, f.need(Tag::this_update, "this_update"));
    WPKI_TRY(tuv, as_u64(tu, "this_update"));
    c.this_update = tuv;
    WPKI_TRY(nu, f.need(Tag::next_update, "next_update"));
    WPKI_TRY(nuv, as_u64(nu, "next_update"));
    c.next_update = nuv;
    WPKI_CHECK(f.finish());
    WPKI_CHECK(validate(c));
    return c;
}

template <>
Result<StatusRequest> decode<StatusRequest>(BytesView payload) {
    static constexpr std::uint8_t allowed[] = {0x36, 0x50, 0x53};
    WPKI_TRY(raw_fields, split(payload, allowed));
    Fields f(std::move(raw_fields));
    StatusRequest r;
    bool have_target = false;
    if (auto v = f.take(Tag::embedded_certificate)) {
        WPKI_TRY(target, parse_embedded(*v, /*allow_short_lived=*/true));
        r.target = std::move(target);
        have_target = true;
    }
    if (auto v = f.take(Tag::cert_url)) {
        if (have_target)
            return Error{Err::malformed, "status request carries two targets"};
        WPKI_TRY(url, as_text(*v, "cert_url"));
        r.target = std::move(url);
        have_target = true;
    }
    if (!have_target) return Error{Err::malformed, "status request carries no target"};
    WPKI_TRY(n, f.need(Tag::nonce, "nonce"));
    WPKI_TRY(nv, as_fixed<16>(n, "nonce"));
    r.nonce = nv;
    WPKI_CHECK(f.finish());
    WPKI_CHECK(validate(r));
    return r;
}

template <>
Result<StatusResponse> decode<StatusResponse>(BytesView payload) {
    static constexpr std::uint8_t allowed[] = {0x02, 0x20, 0x51, 0x52, 0x53, 0x54};
    WPKI_TRY(raw_fields, split(payload, allowed));
    Fields f(std::move(raw_fields));
    StatusResponse c;
    WPKI_TRY(ser, f.need(Tag::serial, "serial"));
    WPKI_TRY(serv, as_u64(ser, "serial"));
    c.serial = serv;
    WPKI_TRY(sig, f.need(Tag::signature_value, "signature"));
    WPKI_TRY(sigv, as_sig(sig, "signature"));
    c.signature = std::move(sigv);
    WPKI_TRY(st, f.need(Tag::status_code, "status"));
    WPKI_TRY(stv, as_u8(st, "status"));
    if (stv > 2) return Error{Err::malformed, "unknown status code"};
    c.status = static_cast<CertStatus>(stv);
    WPKI_TRY(pa, f.need(Tag::produced_at, "produced_at"));
    WPKI_TRY(pav, as_u64(pa, "produced_at"));
    c.produced_at = pav;
    WPKI_TRY(n, f.need(Tag::nonce, "nonce"));
    WPKI_TRY(nv, as_fixed<16>(n, "nonce"));
    c.nonce = nv;
    if (auto v = f.take(Tag::failure_detail)) {
        WPKI_TRY(d, as_text(*v, "failure_detail"));
        c.failure_detail = std::move(d);
    }
    WPKI_CHECK(f.finish());
    WPKI_CHECK(validate(c));
    return c;
}

template <>
Result<ErrorReply> decode<ErrorReply>(BytesView payload) {
    static constexpr std::uint8_t allowed[] = {0x51, 0x54};
    WPKI_TRY(raw_fields, split(payload, allowed));
    Fields f(std::move(raw_fields));
    ErrorReply e;
    WPKI_TRY(cv, f.need(Tag::status_code, "code"));
    WPKI_TRY(c, as_u8(cv, "code"));
    e.code = c;
    if (auto v = f.take(Tag::failure_detail)) {
        WPKI_TRY(d, as_text(*v, "detail"));
        e.detail = std::move(d);
    }
    WPKI_CHECK(f.finish());
    WPKI_CHECK(validate(e));
    return e;
}

template <>
Result<RevokeCommand> decode<RevokeCommand>(BytesView payload) {
    static constexpr std::uint8_t allowed[] = {0x02, 0x43};
    WPKI_TRY(raw_fields, split(payload, allowed));
    Fields f(std::move(raw_fields));
    RevokeCommand c;
    WPKI_TRY(ser, f.need(Tag::serial, "serial"));
    WPKI_TRY(serv, as_u64(ser, "serial"));
    c.serial = serv;
    WPKI_TRY(rv, f.need(Tag::revocation_reason, "reason"));
    WPKI_TRY(r, as_u8(rv, "reason"));
    c.reason = r;
    WPKI_CHECK(f.finish());
    WPKI_CHECK(validate(c));
    return c;
}

template <>
Result<FetchCommand> decode<FetchCommand>(BytesView payload) {
    static constexpr std::uint8_t allowed[] = {0x02};
    WPKI_TRY(raw_fields, split(payload, allowed));
    Fields f(std::move(raw_fields));
    FetchCommand c;
    if (auto v = f.take(Tag::serial)) {
        WPKI_TRY(s, as_u64(*v, "serial"));
        c.serial = s;
    }
    WPKI_CHECK(f.finish());
    return c;
}

template <>
Result<ClientState> decode<ClientState>(BytesView payload) {
    static constexpr std::uint8_t allowed[] = {0x22, 0x30, 0x34, 0x35, 0x50, 0x60};
    WPKI_TRY(raw_fields, split(payload, allowed));
    Fields f(std::move(raw_fields));
    ClientState s;
    WPKI_TRY(cv, f.need(Tag::parameter_specifier, "curve_id"));
    WPKI_TRY(c, as_u8(cv, "curve_id"));
    s.curve_id = c;
    WPKI_TRY(u, f.need(Tag::reference_number, "username"));
    WPKI_TRY(uv, as_text(u, "username"));
    s.credentials.username = std::move(uv);
    WPKI_TRY(rc, f.need(Tag::random_code, "random_code"));
    WPKI_TRY(rcv, as_text(rc, "random_code"));
    s.credentials.random_code = std::move(rcv);
    WPKI_TRY(p, f.need(Tag::password, "password"));
    WPKI_TRY(pv, as_text(p, "password"));
    s.credentials.password = std::move(pv);
    WPKI_TRY(url, f.need(Tag::cert_url, "cert_url"));
    WPKI_TRY(urlv, as_text(url, "cert_url"));
    s.cert_url = std::move(urlv);
    WPKI_TRY(pk, f.need(Tag::private_key, "private_key"));
    if (pk.empty()) return Error{Err::malformed, "private_key must not be empty"};
    s.private_key = copy_bytes(pk);
    WPKI_CHECK(f.finish());
    WPKI_CHECK(validate(s));
    return s;
}

template <>
Result<CertUrlPresentation> decode<CertUrlPresentation>(BytesView payload) {
    static constexpr std::uint8_t allowed[] = {0x50};
    WPKI_TRY(raw_fields, split(payload, allowed));
    Fields f(std::move(raw_fields));
    CertUrlPresentation p;
    WPKI_TRY(u, f.need(Tag::cert_url, "cert_url"));
    WPKI_TRY(uv, as_text(u, "cert_url"));
    p.cert_url = std::move(uv);
    WPKI_CHECK(f.finish());
    WPKI_CHECK(validate(p));
    return p;
}

// ---- framing -------------------------------------------------------------------

Result<Bytes> frame(std::uint8_t kind, BytesView payload) {
    if (payload.size() > 0xFFFFFFFFull - 1)
        return Error{Err::payload_too_large, "payload does not fit a 4-byte length"};
    Bytes out;
    out.reserve(5 + payload.size());
    put_u32_be(out, static_cast<std::uint32_t>(payload.size() + 1));
    out.push_back(kind);
    append(out, payload);
    return out;
}

Result<std::size_t> MemorySource::read(std::span<std::uint8_t> buf) {
    std::size_t n = std::min(buf.size(), data_.size() - pos_);
    std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(pos_), n, buf.begin());
    pos_ += n;
    return n;
}

namespace {

Result<void> read_exact(ByteSource& src, std::span<std::uint8_t> buf, const char* what) {
    std::size_t got = 0;
    while (got < buf.size()) {
        WPKI_TRY(n, src.read(buf.subspan(got)));
        if (n == 0) return Error{Err::truncated, std::string("stream ended reading ") + what};
        got += n;
    }
    return {};
}

}  // namespace

Result<Frame> deframe(ByteSource& src, std::size_t max_payload) {
    std::array<std::uint8_t, 4> header{};
    WPKI_CHECK(read_exact(src, header, "frame length"));
    std::uint32_t total = get_u32_be(header.data());
    if (total == 0) return Error{Err::malformed, "zero-length frame"};
    if (static_cast<std::size_t>(total) - 1 > max_payload)
        return Error{Err::payload_too_large,
                     "declared payload of " + std::to_string(total - 1) + " bytes exceeds limit"};
    std::array<std::uint8_t, 1> kind{};
    WPKI_CHECK(read_exact(src, kind, "frame kind"));
    Frame f;
    f.kind = kind[0];
    f.payload.resize(total - 1);
    WPKI_CHECK(read_exact(src, f.payload, "frame payload"));
    return f;
}

}  // namespace wpki::codec
