#pragma once

// Shared test scaffolding: a temp state root with a repository store and an
// opened certification authority.

#include <doctest.h>

#include <filesystem>
#include <memory>
#include <random>

#include "wpki/authority.hpp"
#include "wpki/repository.hpp"

namespace fixtures {

using namespace wpki;

inline std::filesystem::path fresh_dir(const std::string& hint) {
    auto base = std::filesystem::temp_directory_path() /
                ("wpki-test-" + hint + "-" + crypto::random_token("abcdefghij0123456789", 10));
    std::filesystem::create_directories(base);
    return base;
}

struct Suite {
    std::filesystem::path root;
    std::unique_ptr<repository::RepositoryStore> repo;
    std::unique_ptr<authority::CertificationAuthority> ca;

    Suite() = default;
    Suite(Suite&&) = default;
    Suite& operator=(Suite&&) = default;
    ~Suite() {
        std::error_code ec;
        if (!root.empty()) std::filesystem::remove_all(root, ec);
    }
};

inline Suite make_suite(std::uint8_t curve = crypto::kCurveSect163k1,
                        std::uint16_t repo_port = 7002) {
    Suite s;
    s.root = fresh_dir("suite");

    // The repository learns the CA key only once the CA identity exists;
    // until then publication is rejected. Same order as the CLI.
    auto repo = repository::RepositoryStore::open(s.root / "repo", crypto::PublicKeyInfo{},
                                                  "127.0.0.1", repo_port);
    REQUIRE(repo.ok());
    s.repo = std::move(repo).value();

    authority::AuthorityConfig cfg;
    cfg.state_dir = s.root / "ca";
    cfg.curve_id = curve;
    auto ca = authority::CertificationAuthority::open(cfg, *s.repo);
    REQUIRE_MESSAGE(ca.ok(), ca.error().detail);
    s.ca = std::move(ca).value();
    s.repo->set_ca_key(s.ca->public_key());
    return s;
}

}  // namespace fixtures
