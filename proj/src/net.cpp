#include "wpki/net.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include "wpki/entities.hpp"

namespace wpki::net {
namespace {

void set_timeouts(int fd, int ms) {
    timeval tv{ms / 1000, (ms % 1000) * 1000};
    setsockopt(fd, SOL_SOCKET, SO_RCVTIMEO, &tv, sizeof(tv));
    setsockopt(fd, SOL_SOCKET, SO_SNDTIMEO, &tv, sizeof(tv));
}

class SocketSource final : public codec::ByteSource {
public:
    explicit SocketSource(Socket& sock) : sock_(sock) {}
    Result<std::size_t> read(std::span<std::uint8_t> buf) override { return sock_.recv_some(buf); }

private:
    Socket& sock_;
};

}  // namespace

Socket& Socket::operator=(Socket&& o) noexcept {
    if (this != &o) {
        close();
        fd_ = o.fd_;
        o.fd_ = -1;
    }
    return *this;
}

void Socket::close() {
    if (fd_ >= 0) {
        ::close(fd_);
        fd_ = -1;
    }
}

Result<Socket> Socket::connect(const Endpoint& to, int timeout_ms) {
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(to.port);
    if (inet_pton(AF_INET, to.host.c_str(), &addr.sin_addr) != 1)
        return Error{Err::transport, "bad address " + to.host};

    int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    if (fd < 0) return Error{Err::transport, std::strerror(errno)};
    set_timeouts(fd, timeout_ms);
    if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
        int e = errno;
        ::close(fd);
        return Error{Err::transport, "connect " + to.str() + ": " + std::strerror(e)};
    }
    int one = 1;
    setsockopt(fd, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
    return Socket(fd);
}

Result<void> Socket::send_all(BytesView data) {
    std::size_t sent = 0;
    while (sent < data.size()) {
        ssize_t n = ::send(fd_, data.data() + sent, data.size() - sent, MSG_NOSIGNAL);
        if (n <= 0) return Error{Err::transport, std::string("send: ") + std::strerror(errno)};
        sent += static_cast<std::size_t>(n);
    }
    return {};
}

Result<std::size_t> Socket::recv_some(std::span<std::uint8_t> buf) {
    ssize_t n = ::recv(fd_, buf.data(), buf.size(), 0);
    if (n < 0) return Error{Err::transport, std::string("recv: ") + std::strerror(errno)};
    return static_cast<std::size_t>(n);
}

Result<void> send_frame(Socket& sock, std::uint8_t kind, BytesView payload) {
    WPKI_TRY(framed, codec::frame(kind, payload));
    return sock.send_all(framed);
}

Result<codec::Frame> recv_frame(Socket& sock, std::size_t max_payload) {
    SocketSource src(sock);
    return codec::deframe(src, max_payload);
}

Result<std::unique_ptr<FramedServer>> FramedServer::start(const Endpoint& bind_to,
                                                          Handler handler) {
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
        ::listen(fd, 64) != 0) {
        int e = errno;
        ::close(fd);
        return Error{Err::bind_failure, "bind " + bind_to.str() + ": " + std::strerror(e)};
    }
    sockaddr_in bound{};
    socklen_t len = sizeof(bound);
    getsockname(fd, reinterpret_cast<sockaddr*>(&bound), &len);

    auto server = std::unique_ptr<FramedServer>(new FramedServer());
    server->handler_ = std::move(handler);
    server->host_ = bind_to.host;
    server->port_ = ntohs(bound.sin_port);
    server->listen_fd_ = fd;
    server->accept_thread_ = std::thread([s = server.get()] { s->accept_loop(); });
    return server;
}

void FramedServer::accept_loop() {
    for (;;) {
        int fd = ::accept(listen_fd_, nullptr, nullptr);
        if (fd < 0) return;  // listener closed on stop
        set_timeouts(fd, 30000);
        std::lock_guard lock(mu_);
        if (stopping_) {
            ::close(fd);
            return;
        }
        live_fds_.push_back(fd);
        workers_.emplace_back([this, fd] { serve_connection(fd); });
    }
}

void FramedServer::serve_connection(int fd) {
    Socket sock(fd);
    for (;;) {
        auto request = recv_frame(sock);
        if (!request.ok()) {
            // Length overruns cannot be skipped; answer once and drop the
            // connection. Everything else here is EOF or a dead peer.
            if (request.code() == Err::payload_too_large) {
                ErrorReply reply{static_cast<std::uint8_t>(Err::payload_too_large),
                                 request.error().detail};
                if (auto payload = codec::encode(reply); payload.ok())
                    (void)send_frame(sock, static_cast<std::uint8_t>(codec::Kind::error_reply),
                                     payload.value());
            }
            break;
        }
        codec::Frame reply;
        auto handled = handler_(request.value());
        if (handled.ok()) {
            reply = std::move(handled).value();
        } else {
            ErrorReply err{static_cast<std::uint8_t>(handled.error().code),
                           handled.error().detail};
            auto payload = codec::encode(err);
            if (!payload.ok()) break;
            reply.kind = static_cast<std::uint8_t>(codec::Kind::error_reply);
            reply.payload = std::move(payload).value();
        }
        if (!send_frame(sock, reply.kind, reply.payload).ok()) break;
    }
    {
        std::lock_guard lock(mu_);
        std::erase(live_fds_, fd);
    }
    sock.close();
}

void FramedServer::stop() {
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
        for (int fd : live_fds_) ::shutdown(fd, SHUT_RDWR);
        live_fds_.clear();
        workers.swap(workers_);
    }
    if (accept_thread_.joinable()) accept_thread_.join();
    for (auto& w : workers)
        if (w.joinable()) w.join();
}

}  // namespace wpki::net
