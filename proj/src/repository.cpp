#include "wpki/repository.hpp"

#include <charconv>

#include "wpki/codec.hpp"
#include "wpki/profiles.hpp"
#include "wpki/storage.hpp"

namespace wpki::repository {

namespace fs = std::filesystem;

Result<CertUrl> parse_cert_url(std::string_view url) {
    constexpr std::string_view scheme = "wpki://";
    if (url.substr(0, scheme.size()) != scheme)
        return Error{Err::bad_url, "expected wpki:// scheme: " + std::string(url)};
    std::string_view rest = url.substr(scheme.size());

    auto colon = rest.find(':');
    auto slash = rest.find('/');
    if (colon == std::string_view::npos || slash == std::string_view::npos || colon > slash ||
        colon == 0)
        return Error{Err::bad_url, "expected host:port/certs/serial"};

    CertUrl out;
    out.host = std::string(rest.substr(0, colon));
    std::string_view port_part = rest.substr(colon + 1, slash - colon - 1);
    auto [pp, pec] = std::from_chars(port_part.data(), port_part.data() + port_part.size(),
                                     out.port);
    if (pec != std::errc{} || pp != port_part.data() + port_part.size() || out.port == 0)
        return Error{Err::bad_url, "bad port"};

    constexpr std::string_view certs = "/certs/";
    std::string_view path = rest.substr(slash);
    if (path.substr(0, certs.size()) != certs)
        return Error{Err::bad_url, "expected /certs/ path"};
    std::string_view serial_part = path.substr(certs.size());
    if (serial_part.empty() || serial_part.size() > 20)
        return Error{Err::bad_url, "bad serial"};
    auto [sp, sec] = std::from_chars(serial_part.data(),
                                     serial_part.data() + serial_part.size(), out.serial);
    if (sec != std::errc{} || sp != serial_part.data() + serial_part.size())
        return Error{Err::bad_url, "serial must be decimal digits"};
    return out;
}

std::string format_cert_url(const std::string& host, std::uint16_t port, std::uint64_t serial) {
    return "wpki://" + host + ":" + std::to_string(port) + "/certs/" + std::to_string(serial);
}

Result<std::unique_ptr<RepositoryStore>> RepositoryStore::open(fs::path dir,
                                                               crypto::PublicKeyInfo ca_key,
                                                               std::string host,
                                                               std::uint16_t port) {
    WPKI_CHECK(storage::ensure_dir(dir / "certs"));
    WPKI_CHECK(storage::ensure_dir(dir / "crl"));
    return std::unique_ptr<RepositoryStore>(
        new RepositoryStore(std::move(dir), std::move(ca_key), std::move(host), port));
}

fs::path RepositoryStore::cert_path(std::uint64_t serial) const {
    return dir_ / "certs" / std::to_string(serial);
}

Result<std::string> RepositoryStore::store_certificate(const WirelessCertificate& cert) {
    auto generation = profiles::check_generation(cert);
    if (!generation.conformant())
        return Error{Err::invariant_violation,
                     "refusing non-conformant certificate: " + generation.to_text()};
    if (storage::exists(cert_path(cert.serial)))
        return Error{Err::duplicate_serial, "serial " + std::to_string(cert.serial)};
    WPKI_TRY(encoded, codec::encode(cert));
    WPKI_CHECK(storage::atomic_write(cert_path(cert.serial), encoded));
    return format_cert_url(host_, port_, cert.serial);
}

Result<Bytes> RepositoryStore::fetch_certificate_bytes(std::uint64_t serial) {
    auto data = storage::read_file(cert_path(serial));
    if (!data.ok() && data.code() == Err::not_found)
        return Error{Err::not_found, "no certificate with serial " + std::to_string(serial)};
    return data;
}

Result<WirelessCertificate> RepositoryStore::fetch_certificate(std::uint64_t serial) {
    WPKI_TRY(bytes, fetch_certificate_bytes(serial));
    auto cert = codec::decode<WirelessCertificate>(bytes);
    if (!cert.ok())
        return Error{Err::malformed, "stored certificate " + std::to_string(serial) +
                                         " is corrupt: " + cert.error().detail};
    return cert;
}

Result<void> RepositoryStore::publish_crl(const RevocationList& crl) {
    if (ca_key_.point.empty())
        return Error{Err::bad_signature, "no CA key configured for publication"};
    WPKI_TRY(tbs, codec::tbs_bytes(crl));
    WPKI_TRY(good, crypto::verify(tbs, crl.signature, ca_key_));
    if (!good)
        return Error{Err::bad_signature, "revocation list not signed by the configured CA"};
    WPKI_TRY(encoded, codec::encode(crl));
    std::lock_guard lock(publish_mu_);
    return storage::atomic_write(dir_ / "crl" / "latest", encoded);
}

Result<Bytes> RepositoryStore::fetch_latest_crl_bytes() {
    auto data = storage::read_file(dir_ / "crl" / "latest");
    if (!data.ok() && data.code() == Err::not_found)
        return Error{Err::no_crl_yet, "no revocation list published yet"};
    return data;
}

Result<RevocationList> RepositoryStore::fetch_latest_crl() {
    WPKI_TRY(bytes, fetch_latest_crl_bytes());
    auto crl = codec::decode<RevocationList>(bytes);
    if (!crl.ok())
        return Error{Err::malformed, "stored revocation list is corrupt: " + crl.error().detail};
    return crl;
}

std::uint64_t RepositoryStore::max_serial() const {
    std::uint64_t max = 0;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir_ / "certs", ec)) {
        std::uint64_t serial = 0;
        std::string name = entry.path().filename().string();
        auto [p, perr] = std::from_chars(name.data(), name.data() + name.size(), serial);
        if (perr == std::errc{} && p == name.data() + name.size() && serial > max) max = serial;
    }
    return max;
}

Result<WirelessCertificate> RepositoryClient::fetch_certificate(std::string_view url) {
    WPKI_TRY(parsed, parse_cert_url(url));
    RepositoryClient at_url(net::Endpoint{parsed.host, parsed.port});
    return at_url.fetch_by_serial(parsed.serial);
}

namespace {

Result<codec::Frame> roundtrip(const net::Endpoint& to, const FetchCommand& cmd) {
    auto sock = net::Socket::connect(to);
    if (!sock.ok()) return Error{Err::transport, sock.error().detail};
    WPKI_CHECK(net::send_entity(sock.value(), cmd));
    return net::recv_frame(sock.value());
}

Error reply_error(const codec::Frame& frame) {
    auto err = codec::decode<ErrorReply>(frame.payload);
    if (!err.ok()) return Error{Err::malformed, "undecodable error reply"};
    return Error{static_cast<Err>(err->code), err->detail.value_or("")};
}

}  // namespace

Result<WirelessCertificate> RepositoryClient::fetch_by_serial(std::uint64_t serial) {
    FetchCommand cmd;
    cmd.serial = serial;
    WPKI_TRY(frame, roundtrip(repo_, cmd));
    if (frame.kind == static_cast<std::uint8_t>(codec::Kind::error_reply))
        return reply_error(frame);
    return codec::expect<WirelessCertificate>(frame.kind, frame.payload);
}

Result<RevocationList> RepositoryClient::fetch_latest_crl() {
    WPKI_TRY(frame, roundtrip(repo_, FetchCommand{}));
    if (frame.kind == static_cast<std::uint8_t>(codec::Kind::error_reply))
        return reply_error(frame);
    return codec::expect<RevocationList>(frame.kind, frame.payload);
}

Result<std::unique_ptr<net::FramedServer>> serve(const net::Endpoint& bind_to,
                                                 RepositoryStore& store) {
    auto handler = [&store](const codec::Frame& request) -> Result<codec::Frame> {
        if (request.kind != static_cast<std::uint8_t>(codec::Kind::fetch_command))
            return Error{Err::unknown_kind,
                         "repository answers FetchCommand only, got kind " +
                             std::to_string(unsigned(request.kind))};
        auto cmd = codec::decode<FetchCommand>(request.payload);
        if (!cmd.ok()) return Error{Err::malformed, cmd.error().detail};
        codec::Frame reply;
        if (cmd->serial) {
            WPKI_TRY(bytes, store.fetch_certificate_bytes(*cmd->serial));
            reply.kind = static_cast<std::uint8_t>(codec::Kind::wireless_certificate);
            reply.payload = std::move(bytes);
        } else {
            WPKI_TRY(bytes, store.fetch_latest_crl_bytes());
            reply.kind = static_cast<std::uint8_t>(codec::Kind::revocation_list);
            reply.payload = std::move(bytes);
        }
        return reply;
    };
    return net::FramedServer::start(bind_to, handler);
}

}  // namespace wpki::repository
