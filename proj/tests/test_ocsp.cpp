#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <ctime>
#include <thread>

#include "oracles/fixtures.hpp"
#include "oracles/gen.hpp"
#include "oracles/ocsp_oracle.hpp"
#include "wpki/codec.hpp"
#include "wpki/ocsp.hpp"

using namespace wpki;
using namespace wpki::ocsp;

namespace {

constexpr std::uint64_t kNow = 1700000000;

struct TestCa {
    profiles::CaIdentity identity;

    static TestCa make() {
        auto kp = crypto::generate_keypair(crypto::kCurveP256);
        REQUIRE(kp.ok());
        return {profiles::CaIdentity{"Oracle CA", kp.value(), "wpki://127.0.0.1:7002/crl",
                                     "wpki://127.0.0.1:7002/ca"}};
    }

    WirelessCertificate cert(std::uint64_t serial, const std::string& subject,
                             std::uint64_t not_before = kNow - 100,
                             std::uint64_t lifetime = 86400) const {
        profiles::CertificateTemplate tpl;
        tpl.subject = subject;
        tpl.not_before = not_before;
        tpl.lifetime_s = lifetime;
        tpl.extended_key_usage = profiles::kEkuServerAuth;
        tpl.issuer_alt_names = std::vector<std::string>{identity.name};
        auto key = crypto::generate_keypair(crypto::kCurveP256);
        REQUIRE(key.ok());
        auto built = profiles::build_certificate(tpl, key->public_info(), identity, serial);
        REQUIRE(built.ok());
        return built.value();
    }

    RevocationList crl(std::vector<std::uint64_t> serials, std::uint64_t now = kNow,
                       std::uint64_t validity = 600) const {
        RevocationList list;
        list.issuer = identity.name;
        list.this_update = now;
        list.next_update = now + validity;
        std::sort(serials.begin(), serials.end());
        for (auto s : serials) list.entries.push_back({s, now, 0});
        auto tbs = codec::tbs_bytes(list);
        REQUIRE(tbs.ok());
        auto sig = crypto::sign(tbs.value(), identity.keypair);
        REQUIRE(sig.ok());
        list.signature = sig.value();
        return list;
    }
};

Responder make_responder(const TestCa& ca, net::Endpoint repo = {"127.0.0.1", 1}) {
    auto key = crypto::generate_keypair(crypto::kCurveP256);
    REQUIRE(key.ok());
    profiles::CertificateTemplate tpl;
    tpl.subject = "Status Responder";
    tpl.not_before = kNow - 100;
    tpl.lifetime_s = 86400 * 30;
    tpl.extended_key_usage = profiles::kEkuOcspSigning;
    tpl.issuer_alt_names = std::vector<std::string>{ca.identity.name};
    auto cert = profiles::build_certificate(tpl, key->public_info(), ca.identity, 999);
    REQUIRE(cert.ok());
    return Responder(key.value(), cert.value(), ca.identity.keypair.public_info(),
                     std::move(repo));
}

std::array<std::uint8_t, 16> nonce16() {
    std::array<std::uint8_t, 16> n{};
    auto b = crypto::random_bytes(16);
    std::copy(b.begin(), b.end(), n.begin());
    return n;
}

}  // namespace

TEST_CASE("status reflects signature, period, conformance and revocation") {
    auto ca = TestCa::make();
    auto responder = make_responder(ca);
    responder.seed_crl(ca.crl({77}));

    SUBCASE("valid unrevoked certificate is good, nonce echoes") {
        StatusRequest req{ca.cert(5, "good.example"), nonce16()};
        auto resp = responder.respond(req, kNow);
        REQUIRE_MESSAGE(resp.ok(), resp.error().detail);
        CHECK(resp->status == CertStatus::good);
        CHECK(resp->serial == 5);
        CHECK(resp->nonce == req.nonce);
        CHECK_FALSE(resp->failure_detail.has_value());
        auto tbs = codec::tbs_bytes(resp.value());
        REQUIRE(tbs.ok());
        auto authentic = crypto::verify(tbs.value(), resp->signature, responder.public_key());
        REQUIRE(authentic.ok());
        CHECK(authentic.value());
    }
    SUBCASE("revoked serial is revoked") {
        StatusRequest req{ca.cert(77, "revoked.example"), nonce16()};
        auto resp = responder.respond(req, kNow);
        REQUIRE(resp.ok());
        CHECK(resp->status == CertStatus::revoked);
        CHECK(resp->failure_detail.value() == "revoked");
    }
    SUBCASE("tampered issuer signature is unknown") {
        auto cert = ca.cert(6, "tampered.example");
        cert.subject = "evil.example";
        StatusRequest req{cert, nonce16()};
        auto resp = responder.respond(req, kNow);
        REQUIRE(resp.ok());
        CHECK(resp->status == CertStatus::unknown);
        CHECK(resp->failure_detail.value() == "bad-signature");
    }
    SUBCASE("expired certificate is unknown") {
        StatusRequest req{ca.cert(7, "old.example", kNow - 10000, 5000), nonce16()};
        auto resp = responder.respond(req, kNow);
        REQUIRE(resp.ok());
        CHECK(resp->status == CertStatus::unknown);
        CHECK(resp->failure_detail.value() == "expired");
    }
    SUBCASE("process-nonconformant certificate is unknown") {
        profiles::CertificateTemplate tpl;
        tpl.subject = "lean.example";
        tpl.not_before = kNow - 100;
        tpl.lifetime_s = 86400;  // no EKU, no issuer alt names: generation-clean only
        auto key = crypto::generate_keypair(crypto::kCurveP256);
        REQUIRE(key.ok());
        auto cert = profiles::build_certificate(tpl, key->public_info(), ca.identity, 8);
        REQUIRE(cert.ok());
        StatusRequest req{cert.value(), nonce16()};
        auto resp = responder.respond(req, kNow);
        REQUIRE(resp.ok());
        CHECK(resp->status == CertStatus::unknown);
        CHECK(resp->failure_detail->find("non-conformant") == 0);
    }
    SUBCASE("short-lived targets skip revocation and report serial 0") {
        auto key = crypto::generate_keypair(crypto::kCurveSect163k1);
        REQUIRE(key.ok());
        auto cert = profiles::build_short_lived("shop.example", key->public_info(), kNow - 10,
                                                3600, ca.identity);
        REQUIRE(cert.ok());
        StatusRequest req{cert.value(), nonce16()};
        auto resp = responder.respond(req, kNow);
        REQUIRE(resp.ok());
        CHECK(resp->status == CertStatus::good);
        CHECK(resp->serial == 0);
    }
    SUBCASE("expired short-lived target is unknown") {
        auto key = crypto::generate_keypair(crypto::kCurveSect163k1);
        REQUIRE(key.ok());
        auto cert = profiles::build_short_lived("shop.example", key->public_info(), kNow - 8000,
                                                3600, ca.identity);
        REQUIRE(cert.ok());
        StatusRequest req{cert.value(), nonce16()};
        auto resp = responder.respond(req, kNow);
        REQUIRE(resp.ok());
        CHECK(resp->status == CertStatus::unknown);
    }
}

TEST_CASE("responder status equals the brute-force oracle over random pairs") {
    auto ca = TestCa::make();
    auto responder = make_responder(ca);

    for (int i = 0; i < 60; ++i) {
        std::uint64_t serial = 10 + i;
        WirelessCertificate cert = ca.cert(serial, "case" + std::to_string(i) + ".example",
                                           kNow - 50 - gen::rnd_below(100),
                                           100 + gen::rnd_below(100000));
        // random damage
        switch (gen::rnd_below(5)) {
            case 0: cert.valid_not_after = cert.valid_not_before + 1; break;  // likely expired
            case 1: cert.subject += "-tampered"; break;
            case 2: cert.extensions.extended_key_usage.reset(); break;  // process violation
            default: break;
        }
        // random CRL, sometimes containing this serial
        std::vector<std::uint64_t> revoked;
        if (gen::coin()) revoked.push_back(serial);
        if (gen::coin()) revoked.push_back(serial + 1000);
        auto crl = ca.crl(revoked);
        responder.seed_crl(crl);

        StatusRequest req{cert, nonce16()};
        auto resp = responder.respond(req, kNow);
        REQUIRE(resp.ok());
        CHECK(resp->status == oracle::status_of(cert, crl, ca.identity.keypair.public_info(),
                                                kNow));
    }
}

TEST_CASE("client_validate accepts only fresh, authentic good responses") {
    auto ca = TestCa::make();
    auto responder = make_responder(ca);
    responder.seed_crl(ca.crl({77}));

    StatusRequest req{ca.cert(5, "good.example"), nonce16()};
    auto resp = responder.respond(req, kNow);
    REQUIRE(resp.ok());

    SUBCASE("fresh good response validates") {
        auto v = client_validate(resp.value(), req.nonce, responder.public_key(), kNow + 5);
        CHECK(v.ok);
    }
    SUBCASE("mismatched nonce is a replay") {
        auto v = client_validate(resp.value(), nonce16(), responder.public_key(), kNow + 5);
        CHECK_FALSE(v.ok);
        CHECK(v.reason == Err::validation_failed);
    }
    SUBCASE("stale response is rejected") {
        auto v = client_validate(resp.value(), req.nonce, responder.public_key(), kNow + 61);
        CHECK_FALSE(v.ok);
        CHECK(v.reason == Err::expired);
    }
    SUBCASE("future-dated response is rejected") {
        auto v = client_validate(resp.value(), req.nonce, responder.public_key(), kNow - 1);
        CHECK_FALSE(v.ok);
        CHECK(v.reason == Err::expired);
    }
    SUBCASE("tampered signature is rejected") {
        StatusResponse forged = resp.value();
        forged.signature.bytes[3] ^= 0x40;
        auto v = client_validate(forged, req.nonce, responder.public_key(), kNow + 5);
        CHECK_FALSE(v.ok);
        CHECK(v.reason == Err::bad_signature);
    }
    SUBCASE("authentic revoked response does not validate") {
        StatusRequest revoked_req{ca.cert(77, "revoked.example"), nonce16()};
        auto revoked_resp = responder.respond(revoked_req, kNow);
        REQUIRE(revoked_resp.ok());
        auto v = client_validate(revoked_resp.value(), revoked_req.nonce,
                                 responder.public_key(), kNow + 5);
        CHECK_FALSE(v.ok);
        CHECK(v.reason == Err::validation_failed);
    }
}

TEST_CASE("url targets resolve through the repository") {
    auto suite = fixtures::make_suite();
    auto server = repository::serve(net::Endpoint{"127.0.0.1", 0}, *suite.repo);
    REQUIRE(server.ok());
    auto repo_endpoint = server.value()->endpoint();
    suite.repo->set_port(repo_endpoint.port);

    auto key = crypto::generate_keypair(crypto::kCurveSect163k1);
    REQUIRE(key.ok());
    auto issued =
        suite.ca->issue_direct("url.example", key->public_info(), profiles::kEkuServerAuth, kNow);
    REQUIRE(issued.ok());
    REQUIRE(suite.ca->generate_crl(kNow, 600).ok());

    auto responder_key = crypto::generate_keypair(crypto::kCurveSect163k1);
    REQUIRE(responder_key.ok());
    auto responder_cert = suite.ca->issue_direct("Status Responder",
                                                 responder_key->public_info(),
                                                 profiles::kEkuOcspSigning, kNow);
    REQUIRE(responder_cert.ok());
    Responder responder(responder_key.value(), responder_cert->certificate,
                        suite.ca->public_key(), repo_endpoint);

    SUBCASE("known serial resolves and validates") {
        auto url = repository::format_cert_url("127.0.0.1", repo_endpoint.port,
                                               issued->certificate.serial);
        StatusRequest req{url, nonce16()};
        auto resp = responder.respond(req, kNow);
        REQUIRE_MESSAGE(resp.ok(), resp.error().detail);
        CHECK(resp->status == CertStatus::good);
        CHECK(resp->serial == issued->certificate.serial);
    }
    SUBCASE("unknown serial is unknown/not-found") {
        auto url = repository::format_cert_url("127.0.0.1", repo_endpoint.port, 424242);
        StatusRequest req{url, nonce16()};
        auto resp = responder.respond(req, kNow);
        REQUIRE(resp.ok());
        CHECK(resp->status == CertStatus::unknown);
        CHECK(resp->failure_detail.value() == "not-found");
    }
    SUBCASE("unreachable repository is an error, not a status") {
        auto url = repository::format_cert_url("127.0.0.1", 1, 5);  // nothing listens there
        StatusRequest req{url, nonce16()};
        auto resp = responder.respond(req, kNow);
        CHECK(resp.code() == Err::repository_unreachable);
    }
    server.value()->stop();
}

TEST_CASE("crl cache: refresh on expiry, survive repository outages") {
    auto suite = fixtures::make_suite();
    auto server = repository::serve(net::Endpoint{"127.0.0.1", 0}, *suite.repo);
    REQUIRE(server.ok());
    auto repo_endpoint = server.value()->endpoint();
    suite.repo->set_port(repo_endpoint.port);

    auto key = crypto::generate_keypair(crypto::kCurveSect163k1);
    REQUIRE(key.ok());
    auto issued = suite.ca->issue_direct("cache.example", key->public_info(),
                                         profiles::kEkuServerAuth, kNow);
    REQUIRE(issued.ok());
    std::uint64_t serial = issued->certificate.serial;
    REQUIRE(suite.ca->generate_crl(kNow, 600).ok());

    auto responder_key = crypto::generate_keypair(crypto::kCurveSect163k1);
    REQUIRE(responder_key.ok());
    auto responder_cert = suite.ca->issue_direct(
        "Status Responder", responder_key->public_info(), profiles::kEkuOcspSigning, kNow);
    REQUIRE(responder_cert.ok());
    Responder responder(responder_key.value(), responder_cert->certificate,
                        suite.ca->public_key(), repo_endpoint);

    StatusRequest req{issued->certificate, nonce16()};
    auto before = responder.respond(req, kNow);
    REQUIRE(before.ok());
    CHECK(before->status == CertStatus::good);

    // revoke and republish: the cached copy is still valid, so the answer
    // only changes once the cache expires or is dropped
    REQUIRE(suite.ca->revoke(serial, 1, kNow + 1).ok());
    REQUIRE(suite.ca->generate_crl(kNow + 2, 600).ok());
    auto cached = responder.respond(req, kNow + 3);
    REQUIRE(cached.ok());
    CHECK(cached->status == CertStatus::good);

    responder.invalidate_cache();
    auto refreshed = responder.respond(req, kNow + 4);
    REQUIRE(refreshed.ok());
    CHECK(refreshed->status == CertStatus::revoked);

    // repository down, cache valid: answers from cache
    server.value()->stop();
    auto offline = responder.respond(req, kNow + 5);
    REQUIRE(offline.ok());
    CHECK(offline->status == CertStatus::revoked);

    // repository down, cache expired: the error is distinguishable
    auto expired_cache = responder.respond(req, kNow + 4000);
    CHECK(expired_cache.code() == Err::crl_unavailable);
}

TEST_CASE("wire service handles concurrent requests and bad kinds") {
    auto suite = fixtures::make_suite();
    auto repo_server = repository::serve(net::Endpoint{"127.0.0.1", 0}, *suite.repo);
    REQUIRE(repo_server.ok());
    suite.repo->set_port(repo_server.value()->endpoint().port);

    // this path runs against the real clock inside the service
    std::uint64_t live_now = static_cast<std::uint64_t>(std::time(nullptr));
    auto key = crypto::generate_keypair(crypto::kCurveSect163k1);
    REQUIRE(key.ok());
    auto issued = suite.ca->issue_direct("conc.example", key->public_info(),
                                         profiles::kEkuServerAuth, live_now);
    REQUIRE(issued.ok());
    REQUIRE(suite.ca->generate_crl(live_now, 600).ok());

    auto responder_key = crypto::generate_keypair(crypto::kCurveSect163k1);
    REQUIRE(responder_key.ok());
    auto responder_cert = suite.ca->issue_direct(
        "Status Responder", responder_key->public_info(), profiles::kEkuOcspSigning, live_now);
    REQUIRE(responder_cert.ok());
    auto responder = std::make_shared<Responder>(responder_key.value(),
                                                 responder_cert->certificate,
                                                 suite.ca->public_key(),
                                                 repo_server.value()->endpoint());
    auto server = serve(net::Endpoint{"127.0.0.1", 0}, responder);
    REQUIRE(server.ok());
    auto endpoint = server.value()->endpoint();

    // identical concurrent requests: same status everywhere
    constexpr int kClients = 6;
    std::vector<std::thread> threads;
    std::vector<std::optional<CertStatus>> statuses(kClients);
    for (int i = 0; i < kClients; ++i) {
        threads.emplace_back([&, i] {
            auto sock = net::Socket::connect(endpoint);
            if (!sock.ok()) return;
            StatusRequest req{issued->certificate, nonce16()};
            if (!net::send_entity(sock.value(), req).ok()) return;
            auto frame = net::recv_frame(sock.value());
            if (!frame.ok()) return;
            auto resp = codec::expect<StatusResponse>(frame->kind, frame->payload);
            if (resp.ok()) statuses[i] = resp->status;
        });
    }
    for (auto& t : threads) t.join();
    for (const auto& s : statuses) {
        REQUIRE(s.has_value());
        CHECK(*s == CertStatus::good);
    }

    // wrong kind gets an error reply
    auto sock = net::Socket::connect(endpoint);
    REQUIRE(sock.ok());
    REQUIRE(net::send_frame(sock.value(), 0x7F, {}).ok());
    auto reply = net::recv_frame(sock.value());
    REQUIRE(reply.ok());
    auto err = codec::decode<ErrorReply>(reply->payload);
    REQUIRE(err.ok());
    CHECK(err->code == static_cast<std::uint8_t>(Err::unknown_kind));

    server.value()->stop();
    repo_server.value()->stop();
}
