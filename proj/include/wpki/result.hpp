#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>

namespace wpki {

// Stable error codes. The numeric values travel on the wire inside
// ErrorReply frames and in state files, so existing entries must not be
// renumbered.
enum class Err : std::uint8_t {
    ok = 0,
    // codec
    malformed = 1,
    unknown_tag = 2,
    non_canonical = 3,
    kind_mismatch = 4,
    invariant_violation = 5,
    field_too_large = 6,
    payload_too_large = 7,
    truncated = 8,
    unknown_kind = 9,
    // crypto
    unsupported_curve = 10,
    invalid_key = 11,
    malformed_signature = 12,
    malformed_key = 13,
    bad_key_length = 14,
    empty_credential = 15,
    // profiles
    lifetime_too_long = 16,
    non_conformant = 17,
    signing_failure = 18,
    // enrollment
    empty_device_id = 19,
    invalid_keypair = 20,
    unknown_reference = 21,
    mac_mismatch = 22,
    pop_failure = 23,
    key_mismatch = 24,
    expired = 25,
    // authority
    storage_failure = 26,
    repository_unavailable = 27,
    unknown_serial = 28,
    already_revoked = 29,
    corrupt_state = 30,
    bind_failure = 31,
    // repository
    duplicate_serial = 32,
    not_found = 33,
    bad_url = 34,
    bad_signature = 35,
    no_crl_yet = 36,
    // ocsp
    crl_unavailable = 37,
    repository_unreachable = 38,
    // client
    peer_unreachable = 39,
    ocsp_unreachable = 40,
    validation_failed = 41,
    // plumbing
    transport = 42,
    config = 43,
};

const char* err_name(Err e);

struct Error {
    Err code = Err::ok;
    std::string detail;
};

template <typename T>
class [[nodiscard]] Result {
public:
    Result(T value) : v_(std::move(value)) {}
    Result(Error e) : v_(std::move(e)) {}
    Result(Err code, std::string detail = {}) : v_(Error{code, std::move(detail)}) {}

    bool ok() const { return std::holds_alternative<T>(v_); }
    explicit operator bool() const { return ok(); }

    T& value() & { return std::get<T>(v_); }
    const T& value() const& { return std::get<T>(v_); }
    T&& value() && { return std::get<T>(std::move(v_)); }
    T* operator->() { return &value(); }
    const T* operator->() const { return &value(); }

    const Error& error() const { return std::get<Error>(v_); }
    Err code() const { return ok() ? Err::ok : error().code; }

private:
    std::variant<T, Error> v_;
};

template <>
class [[nodiscard]] Result<void> {
public:
    Result() = default;
    Result(Error e) : e_(std::move(e)) {}
    Result(Err code, std::string detail = {}) : e_(Error{code, std::move(detail)}) {}

    bool ok() const { return !e_.has_value(); }
    explicit operator bool() const { return ok(); }
    const Error& error() const { return *e_; }
    Err code() const { return ok() ? Err::ok : e_->code; }

private:
    std::optional<Error> e_;
};

inline Result<void> ok_result() { return {}; }

#define WPKI_CONCAT_INNER(a, b) a##b
#define WPKI_CONCAT(a, b) WPKI_CONCAT_INNER(a, b)

// Unwrap a Result into `var`, propagating the error to the caller.
#define WPKI_TRY(var, expr)                                        \
    auto WPKI_CONCAT(wpki_try_, __LINE__) = (expr);                \
    if (!WPKI_CONCAT(wpki_try_, __LINE__).ok())                    \
        return WPKI_CONCAT(wpki_try_, __LINE__).error();           \
    auto var = std::move(WPKI_CONCAT(wpki_try_, __LINE__)).value()

// Propagate the error of a Result<void> (or any Result whose value is unused).
#define WPKI_CHECK(expr)                             \
    do {                                             \
        auto wpki_chk_ = (expr);                     \
        if (!wpki_chk_.ok()) return wpki_chk_.error(); \
    } while (0)

}  // namespace wpki
