#pragma once

#include <cassert>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>

namespace forklab {

enum class ErrorCode {
    // enclave core
    DuplicateName,
    UnknownMeasurement,
    IntegrityFailure,
    CounterUnsupported,
    ProgramFault,
    // host / ledger
    NoConnections,
    ValidationFailed,
    DuplicateKind,
    BrokenChain,
    // mitigations
    PolicyViolation,
    StateMismatch,
    BadSignature,
    RejectStale,
    RejectForkMismatch,
    NotInRange,
    NoAck,
    StaleAnchor,
    WrongPredecessor,
    // protocols
    DecryptFail,
    AddressMismatch,
    CounterMismatch,
    ThrottleExceeded,
    UnregisteredEphemeralID,
    AttestationFailed,
    MalformedMessage,
    Aborted,
    // scenarios / cli
    ConfigError,
    IncompleteCorpus,
    IoError,
};

std::string_view to_string(ErrorCode code);

struct Error {
    ErrorCode code;
    std::string detail;
};

// Misuse and configuration problems surface as exceptions; modeled failure
// outcomes (unseal mismatch, decrypt failure, validator rejection, ...) are
// Result values so attack scripts can observe them.
class ForklabError : public std::runtime_error {
public:
    ForklabError(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}
    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

template <typename T>
class [[nodiscard]] Result {
public:
    Result(T value) : v_(std::move(value)) {}
    Result(Error err) : v_(std::move(err)) {}

    bool ok() const { return std::holds_alternative<T>(v_); }
    explicit operator bool() const { return ok(); }

    const T& value() const& {
        assert(ok());
        return std::get<T>(v_);
    }
    T&& value() && {
        assert(ok());
        return std::get<T>(std::move(v_));
    }
    const Error& error() const {
        assert(!ok());
        return std::get<Error>(v_);
    }
    ErrorCode code() const { return error().code; }

    // Throws on error; for call sites where failure would be a test bug.
    const T& expect(std::string_view what) const& {
        if (!ok()) throw ForklabError(error().code, std::string(what) + ": " + error().detail);
        return std::get<T>(v_);
    }

private:
    std::variant<T, Error> v_;
};

template <>
class [[nodiscard]] Result<void> {
public:
    Result() : err_() {}
    Result(Error err) : err_(std::move(err)) {}

    bool ok() const { return !err_.has_value(); }
    explicit operator bool() const { return ok(); }
    const Error& error() const {
        assert(!ok());
        return *err_;
    }
    ErrorCode code() const { return error().code; }
    void expect(std::string_view what) const {
        if (!ok()) throw ForklabError(error().code, std::string(what) + ": " + error().detail);
    }

private:
    std::optional<Error> err_;
};

inline Error make_error(ErrorCode code, std::string detail = {}) {
    return Error{code, std::move(detail)};
}

}  // namespace forklab
