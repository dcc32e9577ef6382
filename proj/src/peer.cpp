#include "wpki/peer.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cstring>
#include <ctime>

#include "wpki/codec.hpp"

namespace wpki::peer {

Result<std::unique_ptr<TransactionPeer>> TransactionPeer::start(const net::Endpoint& bind_to,
                                                                Config config) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(bind_to.port);
    if (inet_pton(AF_INET, bind_to.host.c_str(), &addr.sin_addr) != 1)
        return Error{Err::bind_failure, "bad address " + bind_to.host};
    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) return Error{Err::bind_failure, std::strerror(errno)};
    int one = 1;
    setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0 ||
        ::listen(fd, 16) != 0) {
        int e = errno;
        ::close(fd);
        return Error{Err::bind_failure, std::strerror(e)};
    }
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);

    auto peer = std::unique_ptr<TransactionPeer>(new TransactionPeer());
    peer->config_ = std::move(config);
    peer->host_ = bind_to.host;
    peer->port_ = ntohs(bound.sin_port);
    peer->listen_fd_ = fd;
    peer->accept_thread_ = std::thread([p = peer.get()] { p->accept_loop(); });
    return peer;
}

void TransactionPeer::set_certificate(PeerCertificate cert) {
    std::lock_guard lock(mu_);
    config_.certificate = std::move(cert);
}

std::optional<TransactionPeer::MirrorOutcome> TransactionPeer::last_mirror() const {
    std::lock_guard lock(mu_);
    return last_mirror_;
}

void TransactionPeer::accept_loop() {
    for (;;) {
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) return;
        timeval tv{10, 0};
        setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
        setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
        std::lock_guard lock(mu_);
        if (stopping_) {
            ::close(fd);
            return;
        }
        workers_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void TransactionPeer::serve_connection(int fd) {
    net::Socket sock(fd);

    // Open by presenting the configured certificate.
    PeerCertificate cert;
    std::uint64_t freshness;
    crypto::PublicKeyInfo responder_key;
    net::Endpoint ocsp_addr;
    {
        std::lock_guard lock(mu_);
        cert = config_.certificate;
        freshness = config_.freshness_s;
        responder_key = config_.responder_key;
        ocsp_addr = config_.ocsp;
    }
    Result<void> sent = std::visit(
        [&sock](const auto& c) { return net::send_entity(sock, c); }, cert);
    if (!sent.ok()) return;

    // The client either proceeds with its URL or walks away.
    auto presentation_frame = net::recv_frame(sock);
    if (!presentation_frame.ok()) return;
    auto presentation = codec::expect<CertUrlPresentation>(presentation_frame->kind,
                                                           presentation_frame->payload);
    if (!presentation.ok()) return;

    // Mirror validation: this side delegates the client's URL to the
    // responder exactly like the client delegated ours.
    MirrorOutcome outcome;
    outcome.client_url = presentation->cert_url;
    StatusRequest request;
    request.target = presentation->cert_url;
    auto nonce = crypto::random_bytes(16);
    std::copy(nonce.begin(), nonce.end(), request.nonce.begin());

    ErrorReply ack{static_cast<std::uint8_t>(Err::validation_failed), std::string("unvalidated")};
    auto ocsp_sock = net::Socket::connect(ocsp_addr);
    if (ocsp_sock.ok() && net::send_entity(ocsp_sock.value(), request).ok()) {
        auto frame = net::recv_frame(ocsp_sock.value());
        if (frame.ok()) {
            auto response = codec::expect<StatusResponse>(frame->kind, frame->payload);
            if (response.ok()) {
                outcome.status = response->status;
                auto verdict = ocsp::client_validate(
                    response.value(), request.nonce, responder_key,
                    static_cast<std::uint64_t>(std::time(nullptr)), freshness);
                outcome.accepted = verdict.ok;
                ack.code = verdict.ok ? 0 : static_cast<std::uint8_t>(verdict.reason);
                ack.detail = verdict.ok ? std::string("welcome") : verdict.detail;
            }
        }
    }
    {
        std::lock_guard lock(mu_);
        last_mirror_ = outcome;
    }
    if (auto payload = codec::encode(ack); payload.ok())
        (void)net::send_frame(sock, static_cast<std::uint8_t>(codec::Kind::error_reply),
                              payload.value());
}

void TransactionPeer::stop() {
    {
        std::lock_guard lock(mu_);
        if (stopping_) {
            if (accept_thread_.joinable()) accept_thread_.join();
            return;
        }
        stopping_ = true;
    }
    if (listen_fd_ >= 0) {
        ::shutdown(listen_fd_, SHUT_RDWR);
        ::close(listen_fd_);
        listen_fd_ = -1;
    }
    std::vector<std::thread> workers;
    {
        std::lock_guard lock(mu_);
        workers.swap(workers_);
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    for (auto& w : workers)
        if (w.joinable()) w.join();
}

}  // namespace wpki::peer
