#pragma once

#include <cstdint>
#include <utility>

#include "wpki/bytes.hpp"
#include "wpki/entities.hpp"
#include "wpki/result.hpp"

namespace wpki::codec {

// Wire format
// -----------
// Every entity is a flat TLV sequence:
//
//   field  = tag(1) length(2, big-endian) value(length)
//   entity = field*           fields in strictly ascending tag order
//
// Absent optional fields are emitted as nothing, so each entity has
// exactly one canonical encoding. Decoding rejects out-of-order or
// duplicate tags, tags outside the entity's field set, truncated or
// oversized lengths, and trailing bytes.
//
// Integers are fixed-width big-endian (u8 / u64). Timestamps are u64
// seconds since 1970-01-01T00:00:00 UTC. Text is UTF-8, 1..255 bytes,
// no terminator. Text lists are (len(1) bytes)+ per entry. Signed
// entities carry their signature under tag 0x20; the to-be-signed bytes
// are the canonical encoding with that one field omitted.
//
// Stream framing:
//
//   frame = total(4, big-endian) kind(1) payload(total-1)
//
// where total counts the kind byte plus the payload.

enum class Tag : std::uint8_t {
    version = 0x01,
    serial = 0x02,
    signature_algorithm_id = 0x03,
    issuer = 0x04,
    valid_not_before = 0x05,
    valid_not_after = 0x06,
    subject = 0x07,
    public_key_info = 0x08,
    authority_key_id = 0x10,
    subject_key_id = 0x11,
    key_usage = 0x12,
    certificate_policy = 0x13,
    subject_alt_names = 0x14,
    issuer_alt_names = 0x15,
    extended_key_usage = 0x16,
    crl_distribution_points = 0x17,
    domain_information = 0x18,
    authority_info_access = 0x19,
    signature_value = 0x20,
    public_key_type = 0x21,
    parameter_specifier = 0x22,
    reference_number = 0x30,
    pop_signature = 0x31,
    request_mac = 0x32,
    device_id = 0x33,
    random_code = 0x34,
    password = 0x35,
    embedded_certificate = 0x36,
    revoked_entry = 0x40,
    this_update = 0x41,
    next_update = 0x42,
    revocation_reason = 0x43,
    cert_url = 0x50,
    status_code = 0x51,
    produced_at = 0x52,
    nonce = 0x53,
    failure_detail = 0x54,
    // local persistence only
    private_key = 0x60,
    derived_key = 0x61,
};

enum class Kind : std::uint8_t {
    registration_request = 0x01,
    credentials = 0x02,
    certificate_request = 0x03,
    certificate_response = 0x04,
    wireless_certificate = 0x05,
    short_lived_certificate = 0x06,
    revocation_list = 0x07,
    status_request = 0x08,
    status_response = 0x09,
    error_reply = 0x0A,
    revoke_command = 0x0B,
    fetch_command = 0x0C,
    client_state = 0x0D,           // local persistence, never served
    cert_url_presentation = 0x0E,  // client → transaction peer
};

inline constexpr std::size_t kMaxFieldValue = 65535;
inline constexpr std::size_t kMaxFramePayload = 1 << 20;  // CRLs grow; certificates do not

// ---- per-entity encode / decode ---------------------------------------

Result<Bytes> encode(const RegistrationRequest&);
Result<Bytes> encode(const Credentials&);
Result<Bytes> encode(const CertificateRequest&);
Result<Bytes> encode(const CertificateResponse&);
Result<Bytes> encode(const WirelessCertificate&);
Result<Bytes> encode(const ShortLivedCertificate&);
Result<Bytes> encode(const RevocationList&);
Result<Bytes> encode(const StatusRequest&);
Result<Bytes> encode(const StatusResponse&);
Result<Bytes> encode(const ErrorReply&);
Result<Bytes> encode(const RevokeCommand&);
Result<Bytes> encode(const FetchCommand&);
Result<Bytes> encode(const ClientState&);
Result<Bytes> encode(const CertUrlPresentation&);

template <typename T>
Result<T> decode(BytesView payload);

// clang-format off
template <> Result<RegistrationRequest> decode<RegistrationRequest>(BytesView);
template <> Result<Credentials> decode<Credentials>(BytesView);
template <> Result<CertificateRequest> decode<CertificateRequest>(BytesView);
template <> Result<CertificateResponse> decode<CertificateResponse>(BytesView);
template <> Result<WirelessCertificate> decode<WirelessCertificate>(BytesView);
template <> Result<ShortLivedCertificate> decode<ShortLivedCertificate>(BytesView);
template <> Result<RevocationList> decode<RevocationList>(BytesView);
template <> Result<StatusRequest> decode<StatusRequest>(BytesView);
template <> Result<StatusResponse> decode<StatusResponse>(BytesView);
template <> Result<ErrorReply> decode<ErrorReply>(BytesView);
template <> Result<RevokeCommand> decode<RevokeCommand>(BytesView);
template <> Result<FetchCommand> decode<FetchCommand>(BytesView);
template <> Result<ClientState> decode<ClientState>(BytesView);
template <> Result<CertUrlPresentation> decode<CertUrlPresentation>(BytesView);

template <typename T> constexpr Kind kind_of();
template <> constexpr Kind kind_of<RegistrationRequest>() { return Kind::registration_request; }
template <> constexpr Kind kind_of<Credentials>() { return Kind::credentials; }
template <> constexpr Kind kind_of<CertificateRequest>() { return Kind::certificate_request; }
template <> constexpr Kind kind_of<CertificateResponse>() { return Kind::certificate_response; }
template <> constexpr Kind kind_of<WirelessCertificate>() { return Kind::wireless_certificate; }
template <> constexpr Kind kind_of<ShortLivedCertificate>() { return Kind::short_lived_certificate; }
template <> constexpr Kind kind_of<RevocationList>() { return Kind::revocation_list; }
template <> constexpr Kind kind_of<StatusRequest>() { return Kind::status_request; }
template <> constexpr Kind kind_of<StatusResponse>() { return Kind::status_response; }
template <> constexpr Kind kind_of<ErrorReply>() { return Kind::error_reply; }
template <> constexpr Kind kind_of<RevokeCommand>() { return Kind::revoke_command; }
template <> constexpr Kind kind_of<FetchCommand>() { return Kind::fetch_command; }
template <> constexpr Kind kind_of<ClientState>() { return Kind::client_state; }
template <> constexpr Kind kind_of<CertUrlPresentation>() { return Kind::cert_url_presentation; }
// clang-format on

// Checks the frame kind before decoding; a wrong kind is kind_mismatch.
template <typename T>
Result<T> expect(std::uint8_t kind, BytesView payload) {
    if (kind != static_cast<std::uint8_t>(kind_of<T>()))
        return Error{Err::kind_mismatch, "expected kind " +
                                             std::to_string(static_cast<unsigned>(kind_of<T>())) +
                                             ", got " + std::to_string(unsigned(kind))};
    return decode<T>(payload);
}

// Structural (context-free) invariant checks; encode runs them before
// writing and decode runs them after mapping, so decodable bytes and
// encodable values describe the same set.
Result<void> validate(const RegistrationRequest&);
Result<void> validate(const Credentials&);
Result<void> validate(const CertificateRequest&);
Result<void> validate(const CertificateResponse&);
Result<void> validate(const WirelessCertificate&);
Result<void> validate(const ShortLivedCertificate&);
Result<void> validate(const RevocationList&);
Result<void> validate(const StatusRequest&);
Result<void> validate(const StatusResponse&);
Result<void> validate(const ErrorReply&);
Result<void> validate(const RevokeCommand&);
Result<void> validate(const FetchCommand&);
Result<void> validate(const ClientState&);
Result<void> validate(const CertUrlPresentation&);

// ---- to-be-signed / authenticated byte strings -------------------------

Result<Bytes> tbs_bytes(const WirelessCertificate&);
Result<Bytes> tbs_bytes(const ShortLivedCertificate&);
Result<Bytes> tbs_bytes(const RevocationList&);
Result<Bytes> tbs_bytes(const StatusResponse&);

// Proof-of-possession input: canonical (subject, public key, reference).
Result<Bytes> pop_bytes(const CertificateRequest&);
// Request-MAC input: pop input plus the proof-of-possession signature.
Result<Bytes> mac_bytes(const CertificateRequest&);

// ---- framing ------------------------------------------------------------

struct Frame {
    std::uint8_t kind = 0;
    Bytes payload;
    bool operator==(const Frame&) const = default;
};

Result<Bytes> frame(std::uint8_t kind, BytesView payload);

class ByteSource {
public:
    virtual ~ByteSource() = default;
    // Reads up to buf.size() bytes; returns 0 at end of stream.
    virtual Result<std::size_t> read(std::span<std::uint8_t> buf) = 0;
};

class MemorySource final : public ByteSource {
public:
    explicit MemorySource(BytesView data) : data_(data) {}
    Result<std::size_t> read(std::span<std::uint8_t> buf) override;
    std::size_t consumed() const { return pos_; }

private:
    BytesView data_;
    std::size_t pos_ = 0;
};

// Reads exactly one frame; bytes after it stay unread.
Result<Frame> deframe(ByteSource& src, std::size_t max_payload = kMaxFramePayload);

}  // namespace wpki::codec
