#pragma once

#include <cstdint>
#include <string>

#include "wpki/result.hpp"

namespace wpki::config {

// Flat key=value configuration ('#' starts a comment). Flags override file
// values; the file path falls back to the WPKI_CONFIG environment variable.
struct SuiteConfig {
    // ca
    std::string ca_host = "127.0.0.1";
    std::uint16_t ca_port = 7001;
    std::string ca_state_dir = "state/ca";
    std::string ca_name = "WPKI Root CA";
    std::uint64_t crl_validity_s = 300;
    std::uint64_t cert_lifetime_s = 30 * 86400;
    std::uint8_t curve_id = 1;
    // repository
    std::string repo_host = "127.0.0.1";
    std::uint16_t repo_port = 7002;
    std::string repo_state_dir = "state/repo";
    // ocsp
    std::string ocsp_host = "127.0.0.1";
    std::uint16_t ocsp_port = 7003;
    std::string ocsp_state_dir = "state/ocsp";
    std::uint64_t freshness_s = 60;
    // client
    std::string client_state_dir = "state/client";
    std::string device_id;  // generated when empty
    // short-lived profile
    std::uint64_t short_lived_lifetime_s = 3600;
    std::uint64_t short_lived_max_s = 86400;
};

Result<SuiteConfig> parse_file(const std::string& path);

// Applies one key=value pair; unknown keys are config errors.
Result<void> apply(SuiteConfig& cfg, const std::string& key, const std::string& value);

// Distinct ports, positive lifetimes, supported curve.
Result<void> check(const SuiteConfig& cfg);

}  // namespace wpki::config
