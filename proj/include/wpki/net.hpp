#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "wpki/codec.hpp"
#include "wpki/result.hpp"

namespace wpki::net {

struct Endpoint {
    std::string host = "127.0.0.1";
    std::uint16_t port = 0;
    std::string str() const { return host + ":" + std::to_string(port); }
};

// Blocking TCP socket with send/receive timeouts. Move-only RAII handle.
class Socket {
public:
    Socket() = default;
    explicit Socket(int fd) : fd_(fd) {}
    Socket(Socket&& o) noexcept : fd_(o.fd_) { o.fd_ = -1; }
    Socket& operator=(Socket&& o) noexcept;
    Socket(const Socket&) = delete;
    Socket& operator=(const Socket&) = delete;
    ~Socket() { close(); }

    static Result<Socket> connect(const Endpoint& to, int timeout_ms = 10000);

    Result<void> send_all(BytesView data);
    // Returns 0 at orderly end of stream.
    Result<std::size_t> recv_some(std::span<std::uint8_t> buf);

    bool valid() const { return fd_ >= 0; }
    int fd() const { return fd_; }
    void close();

private:
    int fd_ = -1;
};

Result<void> send_frame(Socket& sock, std::uint8_t kind, BytesView payload);
Result<codec::Frame> recv_frame(Socket& sock, std::size_t max_payload = codec::kMaxFramePayload);

template <typename T>
Result<void> send_entity(Socket& sock, const T& entity) {
    WPKI_TRY(payload, codec::encode(entity));
    return send_frame(sock, static_cast<std::uint8_t>(codec::kind_of<T>()), payload);
}

// One request frame in, one reply frame out. Handler errors are turned
// into ErrorReply frames by the server; the connection stays open.
using Handler = std::function<Result<codec::Frame>(const codec::Frame&)>;

class FramedServer {
public:
    static Result<std::unique_ptr<FramedServer>> start(const Endpoint& bind_to, Handler handler);
    ~FramedServer() { stop(); }

    std::uint16_t port() const { return port_; }
    Endpoint endpoint() const { return {host_, port_}; }
    void stop();

private:
    FramedServer() = default;
    void accept_loop();
    void serve_connection(int fd);

    Handler handler_;
    std::string host_;
    std::uint16_t port_ = 0;
    int listen_fd_ = -1;
    std::thread accept_thread_;
    std::mutex mu_;
    std::vector<std::thread> workers_;
    std::vector<int> live_fds_;
    bool stopping_ = false;
};

}  // namespace wpki::net
