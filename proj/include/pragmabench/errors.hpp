#pragma once

#include <stdexcept>
#include <string>

namespace pragmabench {

// Harness error categories. Each maps to a stable token printed by the CLI
// and to a process exit code (see cli.hpp).
enum class Errc {
    Argument,
    Config,
    Format,
    Data,
    Io,
    EmptyRun,
    EmptyReport,
    Script,
};

const char* errc_token(Errc code);

class Error : public std::runtime_error {
public:
    Error(Errc code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

// Provider failure classes. AuthError and BadRequest are never retried.
enum class ProviderErrorClass {
    AuthError,
    BadRequest,
    RateLimited,
    Transient,
    Timeout,
};

const char* to_string(ProviderErrorClass klass);

class ProviderError : public std::runtime_error {
public:
    ProviderError(ProviderErrorClass klass, std::string message)
        : std::runtime_error(std::move(message)), klass_(klass) {}

    ProviderErrorClass klass() const { return klass_; }

private:
    ProviderErrorClass klass_;
};

} // namespace pragmabench
