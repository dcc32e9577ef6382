#include "wpki/config.hpp"

#include <charconv>
#include <fstream>

#include "wpki/crypto.hpp"

namespace wpki::config {
namespace {

template <typename T>
Result<T> parse_number(const std::string& key, const std::string& value) {
    T out{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size())
        return Error{Err::config, key + ": not a valid number: " + value};
    return out;
}

std::string trim(std::string_view s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    std::size_t e = s.find_last_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

Result<void> apply(SuiteConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "ca.host") { cfg.ca_host = value; return {}; }
    if (key == "ca.port") { WPKI_TRY(v, parse_number<std::uint16_t>(key, value)); cfg.ca_port = v; return {}; }
    if (key == "ca.state_dir") { cfg.ca_state_dir = value; return {}; }
    if (key == "ca.name") { cfg.ca_name = value; return {}; }
    if (key == "ca.crl_validity_s") { WPKI_TRY(v, parse_number<std::uint64_t>(key, value)); cfg.crl_validity_s = v; return {}; }
    if (key == "ca.cert_lifetime_s") { WPKI_TRY(v, parse_number<std::uint64_t>(key, value)); cfg.cert_lifetime_s = v; return {}; }
    if (key == "ca.curve_id") { WPKI_TRY(v, parse_number<std::uint8_t>(key, value)); cfg.curve_id = v; return {}; }
    if (key == "repo.host") { cfg.repo_host = value; return {}; }
    if (key == "repo.port") { WPKI_TRY(v, parse_number<std::uint16_t>(key, value)); cfg.repo_port = v; return {}; }
    if (key == "repo.state_dir") { cfg.repo_state_dir = value; return {}; }
    if (key == "ocsp.host") { cfg.ocsp_host = value; return {}; }
    if (key == "ocsp.port") { WPKI_TRY(v, parse_number<std::uint16_t>(key, value)); cfg.ocsp_port = v; return {}; }
    if (key == "ocsp.state_dir") { cfg.ocsp_state_dir = value; return {}; }
    if (key == "ocsp.freshness_s") { WPKI_TRY(v, parse_number<std::uint64_t>(key, value)); cfg.freshness_s = v; return {}; }
    if (key == "client.state_dir") { cfg.client_state_dir = value; return {}; }
    if (key == "client.device_id") { cfg.device_id = value; return {}; }
    if (key == "short_lived.lifetime_s") { WPKI_TRY(v, parse_number<std::uint64_t>(key, value)); cfg.short_lived_lifetime_s = v; return {}; }
    if (key == "short_lived.max_s") { WPKI_TRY(v, parse_number<std::uint64_t>(key, value)); cfg.short_lived_max_s = v; return {}; }
    return Error{Err::config, "unknown configuration key: " + key};
}

Result<SuiteConfig> parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) return Error{Err::config, "cannot open config file " + path};
    SuiteConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        auto eq = stripped.find('=');
        if (eq == std::string::npos)
            return Error{Err::config,
                         path + ":" + std::to_string(lineno) + ": expected key=value"};
        WPKI_CHECK(apply(cfg, trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1))));
    }
    return cfg;
}

Result<void> check(const SuiteConfig& cfg) {
    // port 0 requests an ephemeral port and never collides
    auto taken = {cfg.ca_port, cfg.repo_port, cfg.ocsp_port};
    for (auto a = taken.begin(); a != taken.end(); ++a)
        for (auto b = a + 1; b != taken.end(); ++b)
            if (*a != 0 && *a == *b)
                return Error{Err::config,
                             "two services configured on port " + std::to_string(*a)};
    if (cfg.cert_lifetime_s == 0 || cfg.crl_validity_s == 0 || cfg.short_lived_lifetime_s == 0 ||
        cfg.short_lived_max_s == 0 || cfg.freshness_s == 0)
        return Error{Err::config, "lifetimes must be positive"};
    if (cfg.short_lived_lifetime_s > cfg.short_lived_max_s)
        return Error{Err::config, "short_lived.lifetime_s exceeds short_lived.max_s"};
    if (!crypto::curve_supported(cfg.curve_id))
        return Error{Err::config, "unsupported curve id " + std::to_string(cfg.curve_id)};
    return {};
}

}  // namespace wpki::config
