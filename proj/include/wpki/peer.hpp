#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <variant>
#include <vector>

#include "wpki/entities.hpp"
#include "wpki/net.hpp"
#include "wpki/ocsp.hpp"

namespace wpki::peer {

using PeerCertificate = std::variant<ShortLivedCertificate, WirelessCertificate>;

// Scripted transaction counterpart: presents its certificate on connect,
// accepts the client's certificate URL, and mirror-validates that URL
// through the status responder. One transaction per connection.
class TransactionPeer {
public:
    struct Config {
        PeerCertificate certificate;
        crypto::PublicKeyInfo responder_key;
        net::Endpoint ocsp;
        std::uint64_t freshness_s = ocsp::kDefaultFreshnessS;
    };

    struct MirrorOutcome {
        std::string client_url;
        CertStatus status = CertStatus::unknown;
        bool accepted = false;
    };

    static Result<std::unique_ptr<TransactionPeer>> start(const net::Endpoint& bind_to,
                                                          Config config);
    ~TransactionPeer() { stop(); }

    net::Endpoint endpoint() const { return {host_, port_}; }
    void set_certificate(PeerCertificate cert);
    std::optional<MirrorOutcome> last_mirror() const;
    void stop();

private:
    TransactionPeer() = default;
    void accept_loop();
    void serve_connection(int fd);

    Config config_;
    std::string host_;
    std::uint16_t port_ = 0;
    int listen_fd_ = -1;
    std::thread accept_thread_;
    mutable std::mutex mu_;
    std::vector<std::thread> workers_;
    std::optional<MirrorOutcome> last_mirror_;
    bool stopping_ = false;
};

}  // namespace wpki::peer
