#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <ctime>

#include "oracles/fixtures.hpp"
#include "wpki/client.hpp"
#include "wpki/codec.hpp"
#include "wpki/enrollment.hpp"
#include "wpki/peer.hpp"
#include "wpki/storage.hpp"

using namespace wpki;
using namespace wpki::client;

namespace {

std::uint64_t live_now() { return static_cast<std::uint64_t>(std::time(nullptr)); }

// Everything a wire scenario needs: CA + repository + responder services on
// loopback, a scripted peer, and a client state dir.
struct WireSuite {
    fixtures::Suite base;
    std::unique_ptr<net::FramedServer> ca_server;
    std::unique_ptr<net::FramedServer> repo_server;
    std::unique_ptr<net::FramedServer> ocsp_server;
    std::shared_ptr<ocsp::Responder> responder;
    std::filesystem::path client_dir;

    net::Endpoint ca() const { return ca_server->endpoint(); }
    net::Endpoint repo() const { return repo_server->endpoint(); }
    net::Endpoint ocsp_ep() const { return ocsp_server->endpoint(); }

    WireSuite() = default;
    WireSuite(WireSuite&&) = default;
    ~WireSuite() {
        if (ca_server) ca_server->stop();
        if (ocsp_server) ocsp_server->stop();
        if (repo_server) repo_server->stop();
    }
};

WireSuite make_wire_suite() {
    WireSuite s;
    s.base = fixtures::make_suite();
    s.client_dir = s.base.root / "client";

    auto repo_server = repository::serve(net::Endpoint{"127.0.0.1", 0}, *s.base.repo);
    REQUIRE(repo_server.ok());
    s.repo_server = std::move(repo_server).value();
    s.base.repo->set_port(s.repo_server->endpoint().port);

    auto ca_server = authority::serve(net::Endpoint{"127.0.0.1", 0}, *s.base.ca);
    REQUIRE(ca_server.ok());
    s.ca_server = std::move(ca_server).value();

    auto responder_key = crypto::generate_keypair(crypto::kCurveSect163k1);
    REQUIRE(responder_key.ok());
    auto responder_cert =
        s.base.ca->issue_direct("Status Responder", responder_key->public_info(),
                                profiles::kEkuOcspSigning, live_now());
    REQUIRE(responder_cert.ok());
    s.responder = std::make_shared<ocsp::Responder>(responder_key.value(),
                                                    responder_cert->certificate,
                                                    s.base.ca->public_key(),
                                                    s.repo_server->endpoint());
    auto ocsp_server = ocsp::serve(net::Endpoint{"127.0.0.1", 0}, s.responder);
    REQUIRE(ocsp_server.ok());
    s.ocsp_server = std::move(ocsp_server).value();

    REQUIRE(s.base.ca->generate_crl(live_now(), 600).ok());
    return s;
}

bool contains_bytes(BytesView haystack, BytesView needle) {
    return std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end()) !=
           haystack.end();
}

}  // namespace

TEST_CASE("enrollment over loopback: minimal state, zero CRL bytes") {
    auto suite = make_wire_suite();
    WpkiClient client(suite.client_dir);

    auto report = client.run_enrollment(suite.ca(), suite.repo(), crypto::kCurveSect163k1);
    REQUIRE_MESSAGE(report.ok(), report.error().detail);

    CHECK(report->persisted_bytes > 0);
    CHECK(report->persisted_bytes < 1024);
    CHECK(report->received_crl_bytes == 0);
    CHECK(report->sent_wireless_cert_frames == 0);
    CHECK(report->total_sent() > 0);
    CHECK(report->total_received() > 0);

    auto state = client.load_state();
    REQUIRE(state.ok());
    auto url = repository::parse_cert_url(state->cert_url);
    REQUIRE(url.ok());
    CHECK(url->port == suite.repo().port);

    // the state file holds no certificate encoding
    auto raw = storage::read_file(suite.client_dir / "state");
    REQUIRE(raw.ok());
    auto stored_cert = suite.base.repo->fetch_certificate_bytes(url->serial);
    REQUIRE(stored_cert.ok());
    CHECK_FALSE(contains_bytes(raw.value(), stored_cert.value()));
    CHECK(raw->size() < 1024);
}

TEST_CASE("enrollment against an unreachable CA fails with an empty report") {
    auto dir = fixtures::fresh_dir("client-noca");
    WpkiClient client(dir);
    auto report = client.run_enrollment(net::Endpoint{"127.0.0.1", 1},
                                        net::Endpoint{"127.0.0.1", 2},
                                        crypto::kCurveSect163k1);
    REQUIRE_FALSE(report.ok());
    CHECK(client.report().total_received() == 0);
    std::filesystem::remove_all(dir);
}

TEST_CASE("transaction with a short-lived peer proceeds url-only") {
    auto suite = make_wire_suite();
    WpkiClient client(suite.client_dir);
    REQUIRE(client.run_enrollment(suite.ca(), suite.repo(), crypto::kCurveSect163k1).ok());

    auto ecdh = crypto::generate_keypair(crypto::kCurveSect163k1);
    REQUIRE(ecdh.ok());
    auto peer_cert =
        suite.base.ca->issue_short_lived("Acme Shop", ecdh->public_info(), live_now(), 3600);
    REQUIRE(peer_cert.ok());

    peer::TransactionPeer::Config cfg{peer_cert.value(), suite.responder->public_key(),
                                      suite.ocsp_ep(), 60};
    auto peer = peer::TransactionPeer::start(net::Endpoint{"127.0.0.1", 0}, std::move(cfg));
    REQUIRE(peer.ok());

    auto outcome = client.run_transaction(peer.value()->endpoint(), suite.ocsp_ep(),
                                          suite.responder->public_key());
    REQUIRE_MESSAGE(outcome.ok(), outcome.error().detail);
    CHECK(outcome->peer_subject == "Acme Shop");
    CHECK(outcome->peer_status == CertStatus::good);
    CHECK(outcome->proceeded);
    CHECK(outcome->peer_accepted);

    // url-only invariant: no certificate frame left the client, and the
    // bytes to the peer contain the url text
    CHECK(outcome->report.received_crl_bytes == 0);
    CHECK(outcome->report.sent_wireless_cert_frames == 0);
    auto state = client.load_state();
    REQUIRE(state.ok());
    auto mirror = peer.value()->last_mirror();
    REQUIRE(mirror.has_value());
    CHECK(mirror->client_url == state->cert_url);
    CHECK(mirror->status == CertStatus::good);
    CHECK(mirror->accepted);
    peer.value()->stop();
}

TEST_CASE("transaction with a revoked wireless peer stops before the url") {
    auto suite = make_wire_suite();
    WpkiClient client(suite.client_dir);
    REQUIRE(client.run_enrollment(suite.ca(), suite.repo(), crypto::kCurveSect163k1).ok());

    auto peer_key = crypto::generate_keypair(crypto::kCurveSect163k1);
    REQUIRE(peer_key.ok());
    auto peer_cert = suite.base.ca->issue_direct("Acme Shop", peer_key->public_info(),
                                                 profiles::kEkuServerAuth, live_now());
    REQUIRE(peer_cert.ok());
    REQUIRE(suite.base.ca->revoke(peer_cert->certificate.serial, 1, live_now()).ok());
    REQUIRE(suite.base.ca->generate_crl(live_now(), 600).ok());
    suite.responder->invalidate_cache();

    peer::TransactionPeer::Config cfg{peer_cert->certificate, suite.responder->public_key(),
                                      suite.ocsp_ep(), 60};
    auto peer = peer::TransactionPeer::start(net::Endpoint{"127.0.0.1", 0}, std::move(cfg));
    REQUIRE(peer.ok());

    auto outcome = client.run_transaction(peer.value()->endpoint(), suite.ocsp_ep(),
                                          suite.responder->public_key());
    REQUIRE_MESSAGE(outcome.ok(), outcome.error().detail);
    CHECK(outcome->peer_status == CertStatus::revoked);
    CHECK_FALSE(outcome->proceeded);
    CHECK(outcome->report.received_crl_bytes == 0);
    // the peer never saw a url
    CHECK_FALSE(peer.value()->last_mirror().has_value());
    peer.value()->stop();
}

TEST_CASE("stale or forged status responses abort the transaction") {
    auto suite = make_wire_suite();
    WpkiClient client(suite.client_dir);
    REQUIRE(client.run_enrollment(suite.ca(), suite.repo(), crypto::kCurveSect163k1).ok());

    // a hostile "responder" replaying an old pre-signed response
    auto attacker_key = crypto::generate_keypair(crypto::kCurveSect163k1);
    REQUIRE(attacker_key.ok());

    auto ecdh = crypto::generate_keypair(crypto::kCurveSect163k1);
    REQUIRE(ecdh.ok());
    auto peer_cert =
        suite.base.ca->issue_short_lived("Acme Shop", ecdh->public_info(), live_now(), 3600);
    REQUIRE(peer_cert.ok());
    peer::TransactionPeer::Config cfg{peer_cert.value(), suite.responder->public_key(),
                                      suite.ocsp_ep(), 60};
    auto peer = peer::TransactionPeer::start(net::Endpoint{"127.0.0.1", 0}, std::move(cfg));
    REQUIRE(peer.ok());

    SUBCASE("stale produced_at") {
        // a fake service that signs correctly but 10 minutes in the past
        ocsp::Responder stale(attacker_key.value(), suite.responder->certificate(),
                              suite.base.ca->public_key(), suite.repo());
        stale.seed_crl([&] {
            RevocationList crl;
            crl.issuer = "x";
            crl.this_update = live_now() + 3600;  // keep the cache warm
            crl.next_update = live_now() + 7200;
            auto tbs = codec::tbs_bytes(crl);
            auto sig = crypto::sign(tbs.value(), attacker_key.value());
            crl.signature = sig.value();
            return crl;
        }());
        auto handler = [&](const codec::Frame& frame) -> Result<codec::Frame> {
            auto req = codec::decode<StatusRequest>(frame.payload);
            if (!req.ok()) return Error{Err::malformed, ""};
            WPKI_TRY(resp, stale.respond(req.value(), live_now() - 600));
            WPKI_TRY(payload, codec::encode(resp));
            return codec::Frame{static_cast<std::uint8_t>(codec::Kind::status_response),
                                std::move(payload)};
        };
        auto fake = net::FramedServer::start(net::Endpoint{"127.0.0.1", 0}, handler);
        REQUIRE(fake.ok());

        // client trusts the attacker key here on purpose: freshness alone
        // must kill the replay
        auto outcome = client.run_transaction(peer.value()->endpoint(),
                                              fake.value()->endpoint(),
                                              attacker_key->public_info());
        CHECK(outcome.code() == Err::validation_failed);
        fake.value()->stop();
    }
    SUBCASE("signature from an untrusted key") {
        // honest service, but the client expects a different responder key
        auto outcome = client.run_transaction(peer.value()->endpoint(), suite.ocsp_ep(),
                                              attacker_key->public_info());
        CHECK(outcome.code() == Err::validation_failed);
    }
    peer.value()->stop();
}

TEST_CASE("traffic reports serialize to text and json") {
    TrafficReport report;
    report.sent_bytes["ca"] = 120;
    report.received_bytes["ca"] = 340;
    report.persisted_bytes = 99;
    auto text = report.to_text();
    CHECK(text.find("sent to ca: 120 B") != std::string::npos);
    auto json = report.to_json();
    CHECK(json.find("\"persisted_bytes\": 99") != std::string::npos);
}
