#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <ctime>
#include <thread>

#include "wpki/authority.hpp"
#include "wpki/client.hpp"
#include "wpki/config.hpp"
#include "wpki/enrollment.hpp"
#include "wpki/ocsp.hpp"
#include "wpki/peer.hpp"
#include "wpki/repository.hpp"
#include "wpki/storage.hpp"

using namespace wpki;

namespace {

// exit codes: 0 success, 1 scenario failure, 2 config/usage error
constexpr int kOk = 0;
constexpr int kScenarioFailure = 1;
constexpr int kConfigError = 2;

std::atomic<bool> g_stop{false};
bool g_verbose = false;

void on_signal(int) { g_stop = true; }

void vlog(const std::string& line) {
    if (g_verbose) std::fprintf(stderr, "wpki: %s\n", line.c_str());
}

int fail(const Error& e, int code = kScenarioFailure) {
    std::fprintf(stderr, "error: %s (%s)\n", e.detail.c_str(), err_name(e.code));
    return code;
}

std::uint64_t now_gmt() { return static_cast<std::uint64_t>(std::time(nullptr)); }

int wait_for_signal() {
    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(200));
    return kOk;
}

// CA public key as stored with the CA state; repository and responder
// processes on the same host read it from there.
Result<crypto::PublicKeyInfo> read_ca_public_key(const config::SuiteConfig& cfg) {
    auto bytes = storage::read_file(std::filesystem::path(cfg.ca_state_dir) / "cert");
    if (!bytes.ok())
        return Error{Err::config,
                     "cannot read the CA certificate from " + cfg.ca_state_dir +
                         " (run ca-init first)"};
    WPKI_TRY(cert, codec::decode<WirelessCertificate>(bytes.value()));
    return cert.public_key_info;
}

Result<std::unique_ptr<repository::RepositoryStore>> open_repo(const config::SuiteConfig& cfg,
                                                               bool need_ca_key) {
    crypto::PublicKeyInfo ca_key;
    if (need_ca_key) {
        WPKI_TRY(key, read_ca_public_key(cfg));
        ca_key = std::move(key);
    }
    return repository::RepositoryStore::open(cfg.repo_state_dir, std::move(ca_key), cfg.repo_host,
                                             cfg.repo_port);
}

Result<std::unique_ptr<authority::CertificationAuthority>> open_ca(
    const config::SuiteConfig& cfg, repository::RepositoryStore& repo) {
    authority::AuthorityConfig acfg;
    acfg.state_dir = cfg.ca_state_dir;
    acfg.name = cfg.ca_name;
    acfg.curve_id = cfg.curve_id;
    acfg.cert_lifetime_s = cfg.cert_lifetime_s;
    acfg.crl_validity_s = cfg.crl_validity_s;
    acfg.short_lived_max_s = cfg.short_lived_max_s;
    return authority::CertificationAuthority::open(std::move(acfg), repo);
}

// Responder identity lives under the ocsp state dir; first start issues it
// through the CA state on this host (there is no issuance wire surface for
// service identities).
struct ResponderIdentity {
    crypto::KeyPair key;
    WirelessCertificate cert;
};

Result<ResponderIdentity> load_or_issue_responder(const config::SuiteConfig& cfg) {
    std::filesystem::path dir(cfg.ocsp_state_dir);
    WPKI_CHECK(storage::ensure_dir(dir));
    if (storage::exists(dir / "key") && storage::exists(dir / "cert")) {
        WPKI_TRY(key, storage::load_keypair(dir / "key"));
        WPKI_TRY(bytes, storage::read_file(dir / "cert"));
        WPKI_TRY(cert, codec::decode<WirelessCertificate>(bytes));
        return ResponderIdentity{std::move(key), std::move(cert)};
    }
    WPKI_TRY(repo, open_repo(cfg, /*need_ca_key=*/true));
    WPKI_TRY(ca, open_ca(cfg, *repo));
    WPKI_TRY(key, crypto::generate_keypair(cfg.curve_id));
    WPKI_TRY(issued, ca->issue_direct("WPKI Status Responder", key.public_info(),
                                      profiles::kEkuOcspSigning, now_gmt()));
    WPKI_CHECK(storage::save_keypair(dir / "key", key));
    WPKI_TRY(cert_bytes, codec::encode(issued.certificate));
    WPKI_CHECK(storage::atomic_write(dir / "cert", cert_bytes));
    vlog("issued responder certificate, serial " + std::to_string(issued.certificate.serial));
    return ResponderIdentity{std::move(key), issued.certificate};
}

Result<crypto::PublicKeyInfo> read_responder_public_key(const config::SuiteConfig& cfg) {
    auto key = storage::load_keypair(std::filesystem::path(cfg.ocsp_state_dir) / "key");
    if (!key.ok())
        return Error{Err::config, "cannot read the responder key from " + cfg.ocsp_state_dir +
                                      " (run ocsp-serve once first)"};
    return key->public_info();
}

int cmd_ca_init(const config::SuiteConfig& cfg) {
    auto repo = open_repo(cfg, /*need_ca_key=*/false);
    if (!repo.ok()) return fail(repo.error());
    auto ca = open_ca(cfg, *repo.value());
    if (!ca.ok()) return fail(ca.error());
    const auto& cert = ca.value()->certificate();
    std::printf("CA ready: %s\n", cert.subject.c_str());
    std::printf("  curve id: %u\n", unsigned(cert.public_key_info.curve_id));
    std::printf("  public key: %s\n", to_hex(cert.public_key_info.point).c_str());
    std::printf("  state dir: %s\n", cfg.ca_state_dir.c_str());
    return kOk;
}

int cmd_ca_serve(const config::SuiteConfig& cfg) {
    auto repo = open_repo(cfg, /*need_ca_key=*/false);
    if (!repo.ok()) return fail(repo.error());
    auto ca = open_ca(cfg, *repo.value());
    if (!ca.ok()) return fail(ca.error());
    repo.value()->set_ca_key(ca.value()->public_key());
    auto server = authority::serve(net::Endpoint{cfg.ca_host, cfg.ca_port}, *ca.value());
    if (!server.ok()) return fail(server.error());
    std::printf("CA serving on %s\n", server.value()->endpoint().str().c_str());
    return wait_for_signal();
}

int cmd_repo_serve(const config::SuiteConfig& cfg) {
    auto repo = open_repo(cfg, /*need_ca_key=*/true);
    if (!repo.ok()) return fail(repo.error());
    auto server = repository::serve(net::Endpoint{cfg.repo_host, cfg.repo_port}, *repo.value());
    if (!server.ok()) return fail(server.error());
    std::printf("repository serving on %s\n", server.value()->endpoint().str().c_str());
    return wait_for_signal();
}

int cmd_ocsp_serve(const config::SuiteConfig& cfg) {
    auto identity = load_or_issue_responder(cfg);
    if (!identity.ok()) return fail(identity.error());
    auto ca_key = read_ca_public_key(cfg);
    if (!ca_key.ok()) return fail(ca_key.error(), kConfigError);
    auto responder = std::make_shared<ocsp::Responder>(
        identity->key, identity->cert, ca_key.value(),
        net::Endpoint{cfg.repo_host, cfg.repo_port});
    auto server = ocsp::serve(net::Endpoint{cfg.ocsp_host, cfg.ocsp_port}, responder);
    if (!server.ok()) return fail(server.error());
    std::printf("status responder serving on %s\n", server.value()->endpoint().str().c_str());
    return wait_for_signal();
}

int write_report_files(const config::SuiteConfig& cfg, const client::TrafficReport& report,
                       const char* stem) {
    std::filesystem::path dir(cfg.client_state_dir);
    auto text = report.to_text();
    auto json = report.to_json();
    (void)storage::atomic_write(dir / (std::string(stem) + ".txt"), to_bytes(text));
    (void)storage::atomic_write(dir / (std::string(stem) + ".json"), to_bytes(json));
    std::fputs(text.c_str(), stdout);
    return kOk;
}

int cmd_client_enroll(const config::SuiteConfig& cfg) {
    client::WpkiClient client(cfg.client_state_dir, cfg.device_id);
    auto report = client.run_enrollment(net::Endpoint{cfg.ca_host, cfg.ca_port},
                                        net::Endpoint{cfg.repo_host, cfg.repo_port},
                                        cfg.curve_id);
    if (!report.ok()) {
        write_report_files(cfg, client.report(), "enrollment-report");
        return fail(report.error());
    }
    std::printf("enrolled; state at %s/state\n", cfg.client_state_dir.c_str());
    return write_report_files(cfg, report.value(), "enrollment-report");
}

int cmd_client_transact(const config::SuiteConfig& cfg, const std::string& peer_profile) {
    // The transaction counterpart is scripted in-process: it needs a
    // CA-issued certificate, which has no wire surface by design.
    auto repo = open_repo(cfg, /*need_ca_key=*/true);
    if (!repo.ok()) return fail(repo.error(), kConfigError);
    auto ca = open_ca(cfg, *repo.value());
    if (!ca.ok()) return fail(ca.error(), kConfigError);
    auto responder_key = read_responder_public_key(cfg);
    if (!responder_key.ok()) return fail(responder_key.error(), kConfigError);

    peer::PeerCertificate peer_cert;
    if (peer_profile == "short-lived") {
        auto key = crypto::generate_keypair(cfg.curve_id);
        if (!key.ok()) return fail(key.error());
        auto cert = ca.value()->issue_short_lived("Acme Shop", key->public_info(), now_gmt(),
                                                  cfg.short_lived_lifetime_s);
        if (!cert.ok()) return fail(cert.error());
        peer_cert = cert.value();
    } else {
        auto key = crypto::generate_keypair(cfg.curve_id);
        if (!key.ok()) return fail(key.error());
        auto cert = ca.value()->issue_direct("Acme Shop", key->public_info(),
                                             profiles::kEkuServerAuth, now_gmt());
        if (!cert.ok()) return fail(cert.error());
        peer_cert = cert->certificate;
    }

    peer::TransactionPeer::Config pcfg{std::move(peer_cert), responder_key.value(),
                                       net::Endpoint{cfg.ocsp_host, cfg.ocsp_port},
                                       cfg.freshness_s};
    auto peer = peer::TransactionPeer::start(net::Endpoint{"127.0.0.1", 0}, std::move(pcfg));
    if (!peer.ok()) return fail(peer.error());

    client::WpkiClient client(cfg.client_state_dir, cfg.device_id);
    auto outcome = client.run_transaction(peer.value()->endpoint(),
                                          net::Endpoint{cfg.ocsp_host, cfg.ocsp_port},
                                          responder_key.value(), cfg.freshness_s);
    peer.value()->stop();
    if (!outcome.ok()) {
        write_report_files(cfg, client.report(), "transaction-report");
        return fail(outcome.error());
    }
    std::printf("peer %s: status %s, %s\n", outcome->peer_subject.c_str(),
                status_name(outcome->peer_status),
                outcome->proceeded ? "proceeded" : "stopped");
    write_report_files(cfg, outcome->report, "transaction-report");
    return outcome->proceeded ? kOk : kScenarioFailure;
}

int cmd_revoke(const config::SuiteConfig& cfg, std::uint64_t serial, std::uint8_t reason) {
    auto sock = net::Socket::connect(net::Endpoint{cfg.ca_host, cfg.ca_port});
    if (!sock.ok()) return fail(sock.error());
    RevokeCommand cmd{serial, reason};
    if (auto sent = net::send_entity(sock.value(), cmd); !sent.ok()) return fail(sent.error());
    auto reply = net::recv_frame(sock.value());
    if (!reply.ok()) return fail(reply.error());
    auto ack = codec::decode<ErrorReply>(reply->payload);
    if (!ack.ok()) return fail(ack.error());
    if (ack->code != 0)
        return fail(Error{static_cast<Err>(ack->code), ack->detail.value_or("")});
    std::printf("revoked serial %llu; revocation list republished\n",
                static_cast<unsigned long long>(serial));
    return kOk;
}

int cmd_crl_publish(const config::SuiteConfig& cfg) {
    // Offline administrative path: regenerates from the CA state directly.
    auto repo = open_repo(cfg, /*need_ca_key=*/false);
    if (!repo.ok()) return fail(repo.error());
    auto ca = open_ca(cfg, *repo.value());
    if (!ca.ok()) return fail(ca.error());
    repo.value()->set_ca_key(ca.value()->public_key());
    auto crl = ca.value()->generate_crl(now_gmt());
    if (!crl.ok()) return fail(crl.error());
    std::printf("published revocation list: %zu entries, next update %llu\n",
                crl->entries.size(), static_cast<unsigned long long>(crl->next_update));
    return kOk;
}

int cmd_demo(config::SuiteConfig cfg, const std::string& state_root_flag) {
    // Fresh state root, ephemeral ports: the demo is self-contained.
    std::filesystem::path root;
    if (!state_root_flag.empty()) {
        root = state_root_flag;
    } else {
        char tmpl[] = "/tmp/wpki-demo-XXXXXX";
        if (!mkdtemp(tmpl)) return fail(Error{Err::storage_failure, "mkdtemp failed"});
        root = tmpl;
    }
    cfg.ca_state_dir = (root / "ca").string();
    cfg.repo_state_dir = (root / "repo").string();
    cfg.ocsp_state_dir = (root / "ocsp").string();
    cfg.client_state_dir = (root / "client").string();
    std::printf("demo state root: %s\n", root.c_str());

    // Services on loopback.
    auto repo = repository::RepositoryStore::open(cfg.repo_state_dir, crypto::PublicKeyInfo{},
                                                  "127.0.0.1", 0);
    if (!repo.ok()) return fail(repo.error());
    auto repo_server = repository::serve(net::Endpoint{"127.0.0.1", 0}, *repo.value());
    if (!repo_server.ok()) return fail(repo_server.error());
    repo.value()->set_port(repo_server.value()->endpoint().port);
    vlog("repository on " + repo_server.value()->endpoint().str());

    auto ca = open_ca(cfg, *repo.value());
    if (!ca.ok()) return fail(ca.error());
    repo.value()->set_ca_key(ca.value()->public_key());
    auto ca_server = authority::serve(net::Endpoint{"127.0.0.1", 0}, *ca.value());
    if (!ca_server.ok()) return fail(ca_server.error());
    vlog("certification authority on " + ca_server.value()->endpoint().str());

    auto responder_key = crypto::generate_keypair(cfg.curve_id);
    if (!responder_key.ok()) return fail(responder_key.error());
    auto responder_cert = ca.value()->issue_direct("WPKI Status Responder",
                                                   responder_key->public_info(),
                                                   profiles::kEkuOcspSigning, now_gmt());
    if (!responder_cert.ok()) return fail(responder_cert.error());
    auto responder = std::make_shared<ocsp::Responder>(responder_key.value(),
                                                       responder_cert->certificate,
                                                       ca.value()->public_key(),
                                                       repo_server.value()->endpoint());
    auto ocsp_server = ocsp::serve(net::Endpoint{"127.0.0.1", 0}, responder);
    if (!ocsp_server.ok()) return fail(ocsp_server.error());
    vlog("status responder on " + ocsp_server.value()->endpoint().str());

    if (auto crl = ca.value()->generate_crl(now_gmt()); !crl.ok()) return fail(crl.error());

    // Enroll the mobile client over the wire.
    client::WpkiClient mobile(cfg.client_state_dir, cfg.device_id);
    auto enrollment_report = mobile.run_enrollment(ca_server.value()->endpoint(),
                                                   repo_server.value()->endpoint(),
                                                   cfg.curve_id);
    if (!enrollment_report.ok()) return fail(enrollment_report.error());
    std::printf("\n[1] enrollment complete (%s)\n", mobile.device_id().c_str());
    std::fputs(enrollment_report->to_text().c_str(), stdout);

    // Server-side identities: a short-lived certificate for the good phase
    // and a revocable one for the second phase.
    auto peer_ecdh = crypto::generate_keypair(cfg.curve_id);
    if (!peer_ecdh.ok()) return fail(peer_ecdh.error());
    auto short_lived = ca.value()->issue_short_lived("Acme Shop", peer_ecdh->public_info(),
                                                     now_gmt(), cfg.short_lived_lifetime_s);
    if (!short_lived.ok()) return fail(short_lived.error());

    auto peer_key = crypto::generate_keypair(cfg.curve_id);
    if (!peer_key.ok()) return fail(peer_key.error());
    auto peer_wireless = ca.value()->issue_direct("Acme Shop", peer_key->public_info(),
                                                  profiles::kEkuServerAuth, now_gmt());
    if (!peer_wireless.ok()) return fail(peer_wireless.error());

    peer::TransactionPeer::Config pcfg{short_lived.value(), responder->public_key(),
                                       ocsp_server.value()->endpoint(), cfg.freshness_s};
    auto peer = peer::TransactionPeer::start(net::Endpoint{"127.0.0.1", 0}, std::move(pcfg));
    if (!peer.ok()) return fail(peer.error());

    auto good_phase = mobile.run_transaction(peer.value()->endpoint(),
                                             ocsp_server.value()->endpoint(),
                                             responder->public_key(), cfg.freshness_s);
    if (!good_phase.ok()) return fail(good_phase.error());
    std::printf("\n[2] transaction with %s: status %s, %s\n",
                good_phase->peer_subject.c_str(), status_name(good_phase->peer_status),
                good_phase->proceeded ? "proceeded" : "stopped");

    // Revoke the peer's revocable certificate and republish.
    std::uint64_t victim = peer_wireless->certificate.serial;
    if (auto r = ca.value()->revoke(victim, 1, now_gmt()); !r.ok()) return fail(r.error());
    if (auto crl = ca.value()->generate_crl(now_gmt()); !crl.ok()) return fail(crl.error());
    responder->invalidate_cache();  // stand-in for waiting out next_update
    std::printf("\n[3] revoked serial %llu and republished the revocation list\n",
                static_cast<unsigned long long>(victim));

    peer.value()->set_certificate(peer_wireless->certificate);
    auto revoked_phase = mobile.run_transaction(peer.value()->endpoint(),
                                                ocsp_server.value()->endpoint(),
                                                responder->public_key(), cfg.freshness_s);
    if (!revoked_phase.ok()) return fail(revoked_phase.error());
    std::printf("\n[4] transaction with %s: status %s, %s\n",
                revoked_phase->peer_subject.c_str(), status_name(revoked_phase->peer_status),
                revoked_phase->proceeded ? "proceeded" : "stopped");
    write_report_files(cfg, revoked_phase->report, "demo-report");

    peer.value()->stop();
    ca_server.value()->stop();
    ocsp_server.value()->stop();
    repo_server.value()->stop();

    // Scripted expectations plus the two hard invariants.
    bool outcomes_ok = good_phase->proceeded && good_phase->peer_status == CertStatus::good &&
                       !revoked_phase->proceeded &&
                       revoked_phase->peer_status == CertStatus::revoked;
    const auto& final_report = revoked_phase->report;
    bool zero_crl = final_report.received_crl_bytes == 0;
    bool url_only = final_report.sent_wireless_cert_frames == 0;
    std::printf("\nscenario outcomes: %s\n", outcomes_ok ? "as scripted" : "NOT as scripted");
    std::printf("zero-crl invariant: %s\n", zero_crl ? "held" : "VIOLATED");
    std::printf("certificate-url-only invariant: %s\n", url_only ? "held" : "VIOLATED");
    return (outcomes_ok && zero_crl && url_only) ? kOk : kScenarioFailure;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Compact wireless PKI suite: certification authority, certificate repository, "
                 "delegated status responder and constrained client"};
    app.require_subcommand(1);

    std::string config_path;
    app.add_option("--config", config_path, "key=value configuration file")
        ->envname("WPKI_CONFIG");
    app.add_flag("--verbose", g_verbose, "log service wiring to stderr");

    // per-command overrides
    std::string state_dir_flag;
    std::uint16_t port_flag = 0;
    std::uint8_t curve_flag = 0;
    std::string peer_profile = "short-lived";
    std::uint64_t revoke_serial = 0;
    std::uint8_t revoke_reason = 0;
    std::string demo_root;

    auto add_common = [&](CLI::App* cmd, bool with_curve = false) {
        cmd->add_option("--port", port_flag, "listening port override");
        cmd->add_option("--state-dir", state_dir_flag, "state directory override");
        if (with_curve) cmd->add_option("--curve", curve_flag, "named-curve id (1 or 2)");
    };

    auto* ca_init = app.add_subcommand("ca-init", "create or resume the CA state");
    add_common(ca_init, true);
    auto* ca_serve = app.add_subcommand("ca-serve", "run the certification authority");
    add_common(ca_serve, true);
    auto* repo_serve = app.add_subcommand("repo-serve", "run the certificate repository");
    add_common(repo_serve);
    auto* ocsp_serve = app.add_subcommand("ocsp-serve", "run the status responder");
    add_common(ocsp_serve);
    auto* client_enroll = app.add_subcommand("client-enroll", "enroll the client end to end");
    add_common(client_enroll, true);
    auto* client_transact =
        app.add_subcommand("client-transact", "run one transaction against a scripted peer");
    add_common(client_transact);
    client_transact->add_option("--peer-profile", peer_profile,
                                "certificate the peer presents: short-lived or wireless")
        ->check(CLI::IsMember({"short-lived", "wireless"}));
    auto* revoke = app.add_subcommand("revoke", "revoke an issued certificate via the CA");
    revoke->add_option("serial", revoke_serial, "serial number")->required();
    revoke->add_option("--reason", revoke_reason,
                       "0 unspecified, 1 key compromise, 2 superseded")
        ->check(CLI::Range(0, 2));
    auto* crl_publish =
        app.add_subcommand("crl-publish", "regenerate and publish the revocation list offline");
    auto* demo = app.add_subcommand(
        "demo", "run the full scenario: enroll, transact, revoke, transact again");
    demo->add_option("--state-dir", demo_root, "state root (default: a fresh temp dir)");
    demo->add_option("--curve", curve_flag, "named-curve id (1 or 2)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kOk : kConfigError;
    }

    config::SuiteConfig cfg;
    if (!config_path.empty()) {
        auto parsed = config::parse_file(config_path);
        if (!parsed.ok()) return fail(parsed.error(), kConfigError);
        cfg = parsed.value();
    }
    if (curve_flag != 0) cfg.curve_id = curve_flag;
    if (!state_dir_flag.empty()) {
        if (ca_init->parsed() || ca_serve->parsed()) cfg.ca_state_dir = state_dir_flag;
        if (repo_serve->parsed()) cfg.repo_state_dir = state_dir_flag;
        if (ocsp_serve->parsed()) cfg.ocsp_state_dir = state_dir_flag;
        if (client_enroll->parsed() || client_transact->parsed())
            cfg.client_state_dir = state_dir_flag;
    }
    if (port_flag != 0) {
        if (ca_serve->parsed()) cfg.ca_port = port_flag;
        if (repo_serve->parsed()) cfg.repo_port = port_flag;
        if (ocsp_serve->parsed()) cfg.ocsp_port = port_flag;
    }
    if (auto checked = config::check(cfg); !checked.ok())
        return fail(checked.error(), kConfigError);

    if (ca_init->parsed()) return cmd_ca_init(cfg);
    if (ca_serve->parsed()) return cmd_ca_serve(cfg);
    if (repo_serve->parsed()) return cmd_repo_serve(cfg);
    if (ocsp_serve->parsed()) return cmd_ocsp_serve(cfg);
    if (client_enroll->parsed()) return cmd_client_enroll(cfg);
    if (client_transact->parsed()) return cmd_client_transact(cfg, peer_profile);
    if (revoke->parsed()) return cmd_revoke(cfg, revoke_serial, revoke_reason);
    if (crl_publish->parsed()) return cmd_crl_publish(cfg);
    if (demo->parsed()) return cmd_demo(cfg, demo_root);
    return kConfigError;
}
