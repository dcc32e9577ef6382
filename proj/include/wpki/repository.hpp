#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <string>

#include "wpki/entities.hpp"
#include "wpki/net.hpp"
#include "wpki/result.hpp"

namespace wpki::repository {

// wpki://<host>:<port>/certs/<serial>
struct CertUrl {
    std::string host;
    std::uint16_t port = 0;
    std::uint64_t serial = 0;
};

Result<CertUrl> parse_cert_url(std::string_view url);
std::string format_cert_url(const std::string& host, std::uint16_t port, std::uint64_t serial);

// File-backed directory: one file per certificate named by serial, plus a
// latest-CRL file. The CA publishes through this store directly; the wire
// service below is fetch-only.
class RepositoryStore {
public:
    static Result<std::unique_ptr<RepositoryStore>> open(std::filesystem::path dir,
                                                         crypto::PublicKeyInfo ca_key,
                                                         std::string host, std::uint16_t port);

    Result<std::string> store_certificate(const WirelessCertificate& cert);
    Result<Bytes> fetch_certificate_bytes(std::uint64_t serial);
    Result<WirelessCertificate> fetch_certificate(std::uint64_t serial);

    Result<void> publish_crl(const RevocationList& crl);
    Result<RevocationList> fetch_latest_crl();
    Result<Bytes> fetch_latest_crl_bytes();

    // Highest serial with a stored certificate; 0 when empty. Used by the
    // issuing side to step over files orphaned by an interrupted issuance.
    std::uint64_t max_serial() const;

    const std::string& host() const { return host_; }
    std::uint16_t port() const { return port_; }
    void set_port(std::uint16_t port) { port_ = port; }
    // The publication key is configured once the CA identity exists; until
    // then every publish is rejected.
    void set_ca_key(crypto::PublicKeyInfo key) { ca_key_ = std::move(key); }

private:
    RepositoryStore(std::filesystem::path dir, crypto::PublicKeyInfo ca_key, std::string host,
                    std::uint16_t port)
        : dir_(std::move(dir)), ca_key_(std::move(ca_key)), host_(std::move(host)), port_(port) {}

    std::filesystem::path cert_path(std::uint64_t serial) const;

    std::filesystem::path dir_;
    crypto::PublicKeyInfo ca_key_;
    std::string host_;
    std::uint16_t port_;
    std::mutex publish_mu_;
};

// Wire access for parties without filesystem access to the directory.
class RepositoryClient {
public:
    explicit RepositoryClient(net::Endpoint repo) : repo_(std::move(repo)) {}

    // BadUrl for non-wpki schemes; the URL names the endpoint to contact.
    Result<WirelessCertificate> fetch_certificate(std::string_view url);
    Result<WirelessCertificate> fetch_by_serial(std::uint64_t serial);
    Result<RevocationList> fetch_latest_crl();

private:
    net::Endpoint repo_;
};

// FetchCommand in; WirelessCertificate / RevocationList / ErrorReply out.
Result<std::unique_ptr<net::FramedServer>> serve(const net::Endpoint& bind_to,
                                                 RepositoryStore& store);

}  // namespace wpki::repository
