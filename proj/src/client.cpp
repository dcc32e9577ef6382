#include "wpki/client.hpp"

#include <json.hpp>

#include <ctime>

#include "wpki/enrollment.hpp"
#include "wpki/profiles.hpp"
#include "wpki/repository.hpp"
#include "wpki/storage.hpp"

namespace wpki::client {
namespace {

std::uint64_t now_gmt() { return static_cast<std::uint64_t>(std::time(nullptr)); }

Error reply_error(const codec::Frame& frame, Err fallback) {
    auto err = codec::decode<ErrorReply>(frame.payload);
    if (!err.ok()) return Error{fallback, "undecodable error reply"};
    return Error{static_cast<Err>(err->code), err->detail.value_or("")};
}

}  // namespace

std::uint64_t TrafficReport::total_sent() const {
    std::uint64_t total = 0;
    for (const auto& [peer, bytes] : sent_bytes) total += bytes;
    return total;
}

std::uint64_t TrafficReport::total_received() const {
    std::uint64_t total = 0;
    for (const auto& [peer, bytes] : received_bytes) total += bytes;
    return total;
}

std::string TrafficReport::to_text() const {
    std::string out = "traffic report\n";
    for (const auto& [peer, bytes] : sent_bytes)
        out += "  sent to " + peer + ": " + std::to_string(bytes) + " B\n";
    for (const auto& [peer, bytes] : received_bytes)
        out += "  received from " + peer + ": " + std::to_string(bytes) + " B\n";
    out += "  crl bytes received: " + std::to_string(received_crl_bytes) + "\n";
    out += "  certificate frames sent: " + std::to_string(sent_wireless_cert_frames) + "\n";
    out += "  state at rest: " + std::to_string(persisted_bytes) + " B\n";
    return out;
}

std::string TrafficReport::to_json() const {
    nlohmann::json j;
    j["sent_bytes"] = sent_bytes;
    j["received_bytes"] = received_bytes;
    j["received_crl_bytes"] = received_crl_bytes;
    j["persisted_bytes"] = persisted_bytes;
    j["sent_wireless_cert_frames"] = sent_wireless_cert_frames;
    return j.dump(2);
}

Result<CountingChannel> CountingChannel::open(const net::Endpoint& to, std::string label,
                                              TrafficReport& report) {
    auto sock = net::Socket::connect(to);
    if (!sock.ok()) return sock.error();
    return CountingChannel(std::move(sock).value(), std::move(label), report);
}

Result<void> CountingChannel::send(codec::Kind kind, BytesView payload) {
    WPKI_CHECK(net::send_frame(sock_, static_cast<std::uint8_t>(kind), payload));
    report_->sent_bytes[label_] += 5 + payload.size();
    if (kind == codec::Kind::wireless_certificate) ++report_->sent_wireless_cert_frames;
    return {};
}

Result<codec::Frame> CountingChannel::recv() {
    WPKI_TRY(frame, net::recv_frame(sock_));
    report_->received_bytes[label_] += 5 + frame.payload.size();
    if (frame.kind == static_cast<std::uint8_t>(codec::Kind::revocation_list))
        report_->received_crl_bytes += 5 + frame.payload.size();
    return frame;
}

WpkiClient::WpkiClient(std::filesystem::path state_dir, std::string device_id)
    : state_dir_(std::move(state_dir)), device_id_(std::move(device_id)) {
    if (device_id_.empty()) device_id_ = "IMEI-" + crypto::random_token("0123456789", 15);
}

Result<TrafficReport> WpkiClient::run_enrollment(const net::Endpoint& ca,
                                                 const net::Endpoint& repo,
                                                 std::uint8_t curve_id) {
    WPKI_CHECK(storage::ensure_dir(state_dir_));

    auto channel = CountingChannel::open(ca, "ca", report_);
    if (!channel.ok()) return Error{Err::transport, "CA unreachable: " + channel.error().detail};

    WPKI_TRY(registration, enrollment::client_begin_registration(device_id_));
    WPKI_CHECK(channel->send_entity(registration));
    WPKI_TRY(creds_frame, channel->recv());
    if (creds_frame.kind == static_cast<std::uint8_t>(codec::Kind::error_reply))
        return reply_error(creds_frame, Err::transport);
    WPKI_TRY(creds, codec::expect<Credentials>(creds_frame.kind, creds_frame.payload));

    WPKI_TRY(keypair, crypto::generate_keypair(curve_id));
    WPKI_TRY(request, enrollment::client_build_request(creds, keypair, creds.username));
    WPKI_CHECK(channel->send_entity(request));
    WPKI_TRY(response_frame, channel->recv());
    if (response_frame.kind == static_cast<std::uint8_t>(codec::Kind::error_reply))
        return reply_error(response_frame, Err::transport);
    WPKI_TRY(response,
             codec::expect<CertificateResponse>(response_frame.kind, response_frame.payload));

    // The URL must point at the configured repository; the certificate
    // itself is deliberately not re-fetched.
    WPKI_TRY(parsed_url, repository::parse_cert_url(response.cert_url));
    if (parsed_url.host != repo.host || parsed_url.port != repo.port)
        return Error{Err::bad_url, "certificate URL does not target the repository"};

    WPKI_TRY(state, enrollment::client_complete(response, keypair, creds, now_gmt()));
    WPKI_TRY(encoded, codec::encode(state));
    WPKI_CHECK(storage::atomic_write(state_file(), encoded));
    report_.persisted_bytes = encoded.size();
    return report_;
}

Result<ClientState> WpkiClient::load_state() const {
    WPKI_TRY(bytes, storage::read_file(state_file()));
    return codec::decode<ClientState>(bytes);
}

Result<TransactionOutcome> WpkiClient::run_transaction(const net::Endpoint& peer,
                                                       const net::Endpoint& ocsp_addr,
                                                       const crypto::PublicKeyInfo& responder_key,
                                                       std::uint64_t freshness_s) {
    WPKI_TRY(state, load_state());

    auto peer_channel = CountingChannel::open(peer, "peer", report_);
    if (!peer_channel.ok())
        return Error{Err::peer_unreachable, peer_channel.error().detail};

    // The peer opens by presenting its certificate, either profile.
    WPKI_TRY(hello, peer_channel->recv());
    TransactionOutcome outcome;
    StatusRequest status_request;
    if (hello.kind == static_cast<std::uint8_t>(codec::Kind::short_lived_certificate)) {
        WPKI_TRY(cert, codec::decode<ShortLivedCertificate>(hello.payload));
        outcome.peer_subject = cert.subject;
        status_request.target = std::move(cert);
    } else {
        WPKI_TRY(cert, codec::expect<WirelessCertificate>(hello.kind, hello.payload));
        outcome.peer_subject = cert.subject;
        status_request.target = std::move(cert);
    }

    // Delegated validation: the certificate goes to the responder as-is.
    auto nonce_bytes = crypto::random_bytes(16);
    std::copy(nonce_bytes.begin(), nonce_bytes.end(), status_request.nonce.begin());

    auto ocsp_channel = CountingChannel::open(ocsp_addr, "ocsp", report_);
    if (!ocsp_channel.ok())
        return Error{Err::ocsp_unreachable, ocsp_channel.error().detail};
    WPKI_CHECK(ocsp_channel->send_entity(status_request));
    WPKI_TRY(status_frame, ocsp_channel->recv());
    if (status_frame.kind == static_cast<std::uint8_t>(codec::Kind::error_reply))
        return reply_error(status_frame, Err::ocsp_unreachable);
    WPKI_TRY(status, codec::expect<StatusResponse>(status_frame.kind, status_frame.payload));

    auto verdict =
        ocsp::client_validate(status, status_request.nonce, responder_key, now_gmt(), freshness_s);
    outcome.peer_status = status.status;
    if (!verdict.ok) {
        // An authentic non-good status is an outcome; an untrustworthy
        // response is an error.
        if (verdict.reason == Err::validation_failed && status.status != CertStatus::good) {
            outcome.proceeded = false;
            outcome.report = report_;
            return outcome;
        }
        return Error{Err::validation_failed, verdict.detail};
    }

    // Proceed: the peer learns this client's certificate URL, nothing more.
    outcome.proceeded = true;
    WPKI_CHECK(peer_channel->send_entity(CertUrlPresentation{state.cert_url}));
    WPKI_TRY(ack_frame, peer_channel->recv());
    if (ack_frame.kind == static_cast<std::uint8_t>(codec::Kind::error_reply)) {
        auto ack = codec::decode<ErrorReply>(ack_frame.payload);
        outcome.peer_accepted = ack.ok() && ack->code == 0;
    }
    outcome.report = report_;
    return outcome;
}

}  // namespace wpki::client
