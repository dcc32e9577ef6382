#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "wpki/entities.hpp"
#include "wpki/net.hpp"
#include "wpki/ocsp.hpp"
#include "wpki/result.hpp"

namespace wpki::client {

// Byte accounting measured at the framing layer (length prefix + kind +
// payload), per peer label. received_crl_bytes counts only frames of kind
// RevocationList — the suite's invariant is that it stays zero.
struct TrafficReport {
    std::map<std::string, std::uint64_t> sent_bytes;
    std::map<std::string, std::uint64_t> received_bytes;
    std::uint64_t received_crl_bytes = 0;
    std::uint64_t persisted_bytes = 0;
    std::uint64_t sent_wireless_cert_frames = 0;  // full certificates leaving the client

    std::uint64_t total_sent() const;
    std::uint64_t total_received() const;
    std::string to_text() const;
    std::string to_json() const;
};

// Framed connection that feeds the report as a side effect.
class CountingChannel {
public:
    static Result<CountingChannel> open(const net::Endpoint& to, std::string label,
                                        TrafficReport& report);

    Result<void> send(codec::Kind kind, BytesView payload);
    template <typename T>
    Result<void> send_entity(const T& entity) {
        WPKI_TRY(payload, codec::encode(entity));
        return send(codec::kind_of<T>(), payload);
    }
    Result<codec::Frame> recv();

private:
    CountingChannel(net::Socket sock, std::string label, TrafficReport& report)
        : sock_(std::move(sock)), label_(std::move(label)), report_(&report) {}

    net::Socket sock_;
    std::string label_;
    TrafficReport* report_;
};

struct TransactionOutcome {
    std::string peer_subject;
    CertStatus peer_status = CertStatus::unknown;
    bool proceeded = false;
    bool peer_accepted = false;  // the peer's mirror validation of this client
    TrafficReport report;
};

// The constrained-device model: enrollment and transaction flows with
// every byte accounted. State at rest is the private key, credentials and
// certificate URL in a single file.
class WpkiClient {
public:
    explicit WpkiClient(std::filesystem::path state_dir, std::string device_id = {});

    Result<TrafficReport> run_enrollment(const net::Endpoint& ca, const net::Endpoint& repo,
                                         std::uint8_t curve_id);

    Result<TransactionOutcome> run_transaction(const net::Endpoint& peer,
                                               const net::Endpoint& ocsp,
                                               const crypto::PublicKeyInfo& responder_key,
                                               std::uint64_t freshness_s = ocsp::kDefaultFreshnessS);

    Result<ClientState> load_state() const;
    const TrafficReport& report() const { return report_; }
    const std::string& device_id() const { return device_id_; }

private:
    std::filesystem::path state_file() const { return state_dir_ / "state"; }

    std::filesystem::path state_dir_;
    std::string device_id_;
    TrafficReport report_;
};

}  // namespace wpki::client
