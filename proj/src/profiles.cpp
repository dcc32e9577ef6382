#include "wpki/profiles.hpp"

#include <algorithm>

#include "wpki/codec.hpp"

namespace wpki::profiles {
namespace {

constexpr Requirement M = Requirement::mandatory;
constexpr Requirement O = Requirement::optional_;
constexpr Requirement X = Requirement::not_recommended;
constexpr Requirement ND = Requirement::not_defined;

// Wireless profile rule matrix: (field, extension?, generation, process,
// representable). Rows the profile excludes (x / not defined) carry no
// field in WirelessCertificate and no tag on the wire; they are listed so
// the checker, the builder, and the tests all agree on the full matrix.
constexpr ProfileRule kRules[] = {
    {"version", false, M, M, true},
    {"serial_number", false, M, M, true},
    {"signature", false, M, M, true},
    {"issuer", false, M, M, true},
    {"validity", false, M, M, true},
    {"subject", false, M, M, true},
    {"subject_public_key_info", false, M, M, true},
    {"issuer_unique_identifier", false, X, X, false},
    {"subject_unique_identifier", false, X, X, false},
    {"authority_key_id", true, M, O, true},
    {"subject_key_id", true, M, O, true},
    {"key_usage", true, M, M, true},
    {"private_key_usage_period", true, X, X, false},
    {"certificate_policy", true, M, M, true},
    {"policy_mapping", true, ND, ND, false},
    {"subject_alt_names", true, M, M, true},
    {"issuer_alt_names", true, O, M, true},
    {"subject_directory_attributes", true, X, X, false},
    {"basic_constraints", true, X, X, false},
    {"name_constraints", true, ND, ND, false},
    {"policy_constraints", true, ND, ND, false},
    {"extended_key_usage", true, O, M, true},
    {"crl_distribution_points", true, M, O, true},
    {"domain_information", true, O, O, true},
    {"authority_info_access", true, M, O, true},
};

}  // namespace

std::span<const ProfileRule> rule_table() { return kRules; }

namespace {

// Present/structurally-sound probes per representable extension row.
struct ExtensionProbe {
    const char* field;
    bool (*present)(const CertificateExtensions&);
    // empty string = sound; otherwise a structural complaint
    std::string (*structural)(const CertificateExtensions&);
};

std::string sound(const CertificateExtensions&) { return {}; }

std::string list_sound(const std::optional<std::vector<std::string>>& list) {
    if (!list) return {};
    if (list->empty()) return "present but empty";
    for (const auto& s : *list)
        if (s.empty() || s.size() > 255) return "list entry length out of range";
    return {};
}

std::string text_sound(const std::optional<std::string>& s) {
    if (!s) return {};
    if (s->empty()) return "present but empty";
    if (s->size() > 255) return "exceeds 255 bytes";
    return {};
}

constexpr ExtensionProbe kProbes[] = {
    {"authority_key_id", [](const CertificateExtensions& e) { return e.authority_key_id.has_value(); },
     sound},
    {"subject_key_id", [](const CertificateExtensions& e) { return e.subject_key_id.has_value(); },
     sound},
    {"key_usage", [](const CertificateExtensions& e) { return e.key_usage.has_value(); }, sound},
    {"certificate_policy",
     [](const CertificateExtensions& e) { return e.certificate_policy.has_value(); },
     [](const CertificateExtensions& e) { return text_sound(e.certificate_policy); }},
    {"subject_alt_names",
     [](const CertificateExtensions& e) { return e.subject_alt_names.has_value(); },
     [](const CertificateExtensions& e) { return list_sound(e.subject_alt_names); }},
    {"issuer_alt_names",
     [](const CertificateExtensions& e) { return e.issuer_alt_names.has_value(); },
     [](const CertificateExtensions& e) { return list_sound(e.issuer_alt_names); }},
    {"extended_key_usage",
     [](const CertificateExtensions& e) { return e.extended_key_usage.has_value(); }, sound},
    {"crl_distribution_points",
     [](const CertificateExtensions& e) { return e.crl_distribution_points.has_value(); },
     [](const CertificateExtensions& e) { return text_sound(e.crl_distribution_points); }},
    {"domain_information",
     [](const CertificateExtensions& e) { return e.domain_information.has_value(); },
     [](const CertificateExtensions& e) { return text_sound(e.domain_information); }},
    {"authority_info_access",
     [](const CertificateExtensions& e) { return e.authority_info_access.has_value(); },
     [](const CertificateExtensions& e) { return text_sound(e.authority_info_access); }},
};

const ProfileRule* rule_for(const char* field) {
    for (const auto& r : kRules)
        if (std::string_view(r.field) == field) return &r;
    return nullptr;
}

ConformanceReport check(const WirelessCertificate& cert, CheckMode mode) {
    ConformanceReport report;
    report.mode = mode;
    for (const auto& probe : kProbes) {
        const ProfileRule* rule = rule_for(probe.field);
        Requirement req = mode == CheckMode::generation ? rule->generation : rule->process;
        bool present = probe.present(cert.extensions);
        if (!present) {
            if (req == Requirement::mandatory)
                report.violations.push_back(
                    {probe.field, ViolationRule::missing_mandatory, "required field is absent"});
            continue;
        }
        if (auto complaint = probe.structural(cert.extensions); !complaint.empty())
            report.violations.push_back({probe.field, ViolationRule::undefined_present, complaint});
    }
    return report;
}

}  // namespace

std::string ConformanceReport::to_text() const {
    if (violations.empty()) return "conformant";
    std::string out;
    for (const auto& v : violations) {
        if (!out.empty()) out += "; ";
        out += v.field;
        out += ": ";
        switch (v.rule) {
            case ViolationRule::missing_mandatory: out += "missing-mandatory"; break;
            case ViolationRule::forbidden_present: out += "forbidden-present"; break;
            case ViolationRule::undefined_present: out += "undefined-present"; break;
        }
        if (!v.detail.empty()) {
            out += " (";
            out += v.detail;
            out += ")";
        }
    }
    return out;
}

ConformanceReport check_generation(const WirelessCertificate& cert) {
    return check(cert, CheckMode::generation);
}

ConformanceReport check_process(const WirelessCertificate& cert) {
    return check(cert, CheckMode::process);
}

std::array<std::uint8_t, 20> key_id(BytesView public_point) {
    auto digest = crypto::hash(public_point);
    std::array<std::uint8_t, 20> id{};
    std::copy_n(digest.begin(), id.size(), id.begin());
    return id;
}

Result<WirelessCertificate> build_certificate(const CertificateTemplate& tpl,
                                              const crypto::PublicKeyInfo& subject_key,
                                              const CaIdentity& ca, std::uint64_t serial) {
    ConformanceReport refused;
    refused.mode = CheckMode::generation;
    auto refuse = [&refused](const char* field, ViolationRule rule) {
        refused.violations.push_back({field, rule, "profile excludes this field"});
    };
    if (tpl.issuer_unique_id) refuse("issuer_unique_identifier", ViolationRule::forbidden_present);
    if (tpl.subject_unique_id) refuse("subject_unique_identifier", ViolationRule::forbidden_present);
    if (tpl.private_key_usage_period)
        refuse("private_key_usage_period", ViolationRule::forbidden_present);
    if (tpl.subject_directory_attributes)
        refuse("subject_directory_attributes", ViolationRule::forbidden_present);
    if (tpl.basic_constraints) refuse("basic_constraints", ViolationRule::forbidden_present);
    if (tpl.policy_mapping) refuse("policy_mapping", ViolationRule::undefined_present);
    if (tpl.name_constraints) refuse("name_constraints", ViolationRule::undefined_present);
    if (tpl.policy_constraints) refuse("policy_constraints", ViolationRule::undefined_present);
    if (!refused.violations.empty())
        return Error{Err::non_conformant, refused.to_text()};

    if (tpl.lifetime_s == 0) return Error{Err::non_conformant, "lifetime must be positive"};

    WirelessCertificate cert;
    cert.serial = serial;
    cert.issuer = ca.name;
    cert.valid_not_before = tpl.not_before;
    cert.valid_not_after = tpl.not_before + tpl.lifetime_s;
    cert.subject = tpl.subject;
    cert.public_key_info = subject_key;

    auto& e = cert.extensions;
    e.authority_key_id = key_id(ca.keypair.public_key);
    e.subject_key_id = key_id(subject_key.point);
    e.key_usage = tpl.key_usage.value_or(kKuDigitalSignature);
    e.certificate_policy = tpl.certificate_policy.value_or(ca.policy);
    e.subject_alt_names = tpl.subject_alt_names.value_or(std::vector<std::string>{tpl.subject});
    e.issuer_alt_names = tpl.issuer_alt_names;
    e.extended_key_usage = tpl.extended_key_usage;
    e.crl_distribution_points = ca.crl_distribution_url;
    e.domain_information = tpl.domain_information;
    e.authority_info_access = ca.authority_info_url;

    auto generation = check_generation(cert);
    if (!generation.conformant())
        return Error{Err::non_conformant, generation.to_text()};

    WPKI_TRY(tbs, codec::tbs_bytes(cert));
    auto sig = crypto::sign(tbs, ca.keypair);
    if (!sig.ok()) return Error{Err::signing_failure, sig.error().detail};
    cert.signature = std::move(sig).value();
    return cert;
}

Result<ShortLivedCertificate> build_short_lived(std::string subject,
                                                const crypto::PublicKeyInfo& ecdh_public,
                                                std::uint64_t not_before, std::uint64_t lifetime_s,
                                                const CaIdentity& ca,
                                                std::uint64_t max_lifetime_s) {
    if (lifetime_s == 0) return Error{Err::lifetime_too_long, "lifetime must be positive"};
    if (lifetime_s > max_lifetime_s)
        return Error{Err::lifetime_too_long, "lifetime " + std::to_string(lifetime_s) +
                                                 " s exceeds maximum " +
                                                 std::to_string(max_lifetime_s) + " s"};
    ShortLivedCertificate cert;
    cert.issuer = ca.name;
    cert.valid_not_before = not_before;
    cert.valid_not_after = not_before + lifetime_s;
    cert.subject = std::move(subject);
    cert.parameter_specifier = ecdh_public.curve_id;
    cert.public_key = ecdh_public.point;

    WPKI_TRY(tbs, codec::tbs_bytes(cert));
    auto sig = crypto::sign(tbs, ca.keypair);
    if (!sig.ok()) return Error{Err::signing_failure, sig.error().detail};
    cert.signature = std::move(sig).value();
    return cert;
}

bool validate_period(const WirelessCertificate& cert, std::uint64_t now) {
    return cert.valid_not_before <= now && now <= cert.valid_not_after;
}

bool validate_period(const ShortLivedCertificate& cert, std::uint64_t now) {
    return cert.valid_not_before <= now && now <= cert.valid_not_after;
}

Result<bool> verify_certificate(const WirelessCertificate& cert,
                                const crypto::PublicKeyInfo& issuer_key) {
    WPKI_TRY(tbs, codec::tbs_bytes(cert));
    return crypto::verify(tbs, cert.signature, issuer_key);
}

Result<bool> verify_certificate(const ShortLivedCertificate& cert,
                                const crypto::PublicKeyInfo& issuer_key) {
    WPKI_TRY(tbs, codec::tbs_bytes(cert));
    return crypto::verify(tbs, cert.signature, issuer_key);
}

}  // namespace wpki::profiles
