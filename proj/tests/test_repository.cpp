#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <thread>

#include "oracles/fixtures.hpp"
#include "wpki/codec.hpp"

using namespace wpki;
using namespace wpki::repository;

namespace {

constexpr std::uint64_t kNow = 1700000000;

WirelessCertificate issue(fixtures::Suite& suite, const std::string& subject) {
    auto key = crypto::generate_keypair(crypto::kCurveSect163k1);
    REQUIRE(key.ok());
    auto r = suite.ca->issue_direct(subject, key->public_info(), profiles::kEkuServerAuth, kNow);
    REQUIRE(r.ok());
    return r->certificate;
}

}  // namespace

TEST_CASE("certificate url parsing and formatting") {
    CHECK(format_cert_url("127.0.0.1", 7002, 42) == "wpki://127.0.0.1:7002/certs/42");

    auto parsed = parse_cert_url("wpki://127.0.0.1:7002/certs/42");
    REQUIRE(parsed.ok());
    CHECK(parsed->host == "127.0.0.1");
    CHECK(parsed->port == 7002);
    CHECK(parsed->serial == 42);

    CHECK(parse_cert_url("http://x/y").code() == Err::bad_url);
    CHECK(parse_cert_url("wpki://host/certs/1").code() == Err::bad_url);        // no port
    CHECK(parse_cert_url("wpki://host:7002/other/1").code() == Err::bad_url);   // wrong path
    CHECK(parse_cert_url("wpki://host:7002/certs/x1").code() == Err::bad_url);  // non-decimal
    CHECK(parse_cert_url("wpki://host:7002/certs/").code() == Err::bad_url);    // empty serial
    CHECK(parse_cert_url("wpki://:7002/certs/1").code() == Err::bad_url);       // empty host
}

TEST_CASE("store and fetch round trip, duplicate refusal") {
    auto suite = fixtures::make_suite();
    auto cert = issue(suite, "store.example");  // issue_direct already stored it

    auto encoded = codec::encode(cert);
    REQUIRE(encoded.ok());
    auto fetched = suite.repo->fetch_certificate_bytes(cert.serial);
    REQUIRE(fetched.ok());
    CHECK(fetched.value() == encoded.value());

    // immutability: a second fetch returns the identical bytes
    auto again = suite.repo->fetch_certificate_bytes(cert.serial);
    REQUIRE(again.ok());
    CHECK(again.value() == fetched.value());

    CHECK(suite.repo->store_certificate(cert).code() == Err::duplicate_serial);
    CHECK(suite.repo->fetch_certificate_bytes(99999).code() == Err::not_found);
}

TEST_CASE("store refuses certificates that fail generation conformance") {
    auto suite = fixtures::make_suite();
    auto cert = issue(suite, "broken.example");
    cert.serial += 1;
    cert.extensions.key_usage.reset();
    CHECK(suite.repo->store_certificate(cert).code() == Err::invariant_violation);
}

TEST_CASE("crl publication is authenticated and latest-wins") {
    auto suite = fixtures::make_suite();

    CHECK(suite.repo->fetch_latest_crl().code() == Err::no_crl_yet);

    auto v1 = suite.ca->generate_crl(kNow, 300);
    REQUIRE(v1.ok());
    auto v2 = suite.ca->generate_crl(kNow + 10, 300);
    REQUIRE(v2.ok());
    auto latest = suite.repo->fetch_latest_crl();
    REQUIRE(latest.ok());
    CHECK(latest.value() == v2.value());
    CHECK(latest->this_update == kNow + 10);

    // a list signed by a stranger key is refused
    auto stranger = crypto::generate_keypair(crypto::kCurveSect163k1);
    REQUIRE(stranger.ok());
    RevocationList forged = v2.value();
    forged.this_update += 1;
    auto tbs = codec::tbs_bytes(forged);
    REQUIRE(tbs.ok());
    auto sig = crypto::sign(tbs.value(), stranger.value());
    REQUIRE(sig.ok());
    forged.signature = sig.value();
    CHECK(suite.repo->publish_crl(forged).code() == Err::bad_signature);
}

TEST_CASE("concurrent publish and fetch never tears a list") {
    auto suite = fixtures::make_suite();
    REQUIRE(suite.ca->generate_crl(kNow, 300).ok());

    std::atomic<bool> done{false};
    std::thread publisher([&] {
        for (int i = 1; i <= 40; ++i)
            REQUIRE(suite.ca->generate_crl(kNow + i, 300).ok());
        done = true;
    });
    std::thread reader([&] {
        while (!done) {
            auto crl = suite.repo->fetch_latest_crl();
            REQUIRE(crl.ok());  // decodes means not torn
            auto tbs = codec::tbs_bytes(crl.value());
            REQUIRE(tbs.ok());
            auto good = crypto::verify(tbs.value(), crl->signature, suite.ca->public_key());
            REQUIRE(good.ok());
            REQUIRE(good.value());
        }
    });
    publisher.join();
    reader.join();
}

TEST_CASE("wire service answers fetches and rejects everything else") {
    auto suite = fixtures::make_suite();
    auto cert = issue(suite, "wire.example");
    REQUIRE(suite.ca->generate_crl(kNow, 300).ok());

    auto server = serve(net::Endpoint{"127.0.0.1", 0}, *suite.repo);
    REQUIRE_MESSAGE(server.ok(), server.error().detail);
    auto endpoint = server.value()->endpoint();
    suite.repo->set_port(endpoint.port);

    SUBCASE("certificate by serial") {
        RepositoryClient client(endpoint);
        auto fetched = client.fetch_by_serial(cert.serial);
        REQUIRE_MESSAGE(fetched.ok(), fetched.error().detail);
        CHECK(fetched.value() == cert);
    }
    SUBCASE("certificate by url") {
        RepositoryClient client(endpoint);
        auto url = format_cert_url("127.0.0.1", endpoint.port, cert.serial);
        auto fetched = client.fetch_certificate(url);
        REQUIRE(fetched.ok());
        CHECK(fetched.value() == cert);

        CHECK(client.fetch_certificate("http://x/y").code() == Err::bad_url);
    }
    SUBCASE("unknown serial becomes a not-found error reply") {
        RepositoryClient client(endpoint);
        CHECK(client.fetch_by_serial(424242).code() == Err::not_found);
    }
    SUBCASE("latest crl") {
        RepositoryClient client(endpoint);
        auto crl = client.fetch_latest_crl();
        REQUIRE(crl.ok());
        CHECK(crl->issuer == suite.ca->certificate().issuer);
    }
    SUBCASE("non-fetch kinds get unknown-kind, connection stays usable") {
        auto sock = net::Socket::connect(endpoint);
        REQUIRE(sock.ok());
        REQUIRE(net::send_frame(sock.value(), 0x7F, {}).ok());
        auto reply = net::recv_frame(sock.value());
        REQUIRE(reply.ok());
        CHECK(reply->kind == static_cast<std::uint8_t>(codec::Kind::error_reply));
        auto err = codec::decode<ErrorReply>(reply->payload);
        REQUIRE(err.ok());
        CHECK(err->code == static_cast<std::uint8_t>(Err::unknown_kind));

        // same connection, now a real request
        FetchCommand cmd;
        cmd.serial = cert.serial;
        REQUIRE(net::send_entity(sock.value(), cmd).ok());
        auto ok_reply = net::recv_frame(sock.value());
        REQUIRE(ok_reply.ok());
        CHECK(ok_reply->kind == static_cast<std::uint8_t>(codec::Kind::wireless_certificate));
    }
    server.value()->stop();
}
