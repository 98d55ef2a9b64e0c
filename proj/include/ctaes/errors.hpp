#pragma once

#include <stdexcept>
#include <string>

namespace ctaes {

// Exit-code contract: 0 success, 1 usage/config, 2 data validation, 3 runtime.
enum class ExitCode : int {
    ok = 0,
    usage = 1,
    data = 2,
    runtime = 3,
};

class Error : public std::runtime_error {
public:
    Error(std::string msg, ExitCode code)
        : std::runtime_error(std::move(msg)), code_(code) {}
    ExitCode exit_code() const { return code_; }

private:
    ExitCode code_;
};

// Bad CLI flags, bad config keys/values, degenerate setups (n=0, empty split).
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error("config error: " + msg, ExitCode::usage) {}
};

// Malformed data rows; messages carry the 1-based line number.
struct ParseError : Error {
    explicit ParseError(const std::string& msg) : Error("parse error: " + msg, ExitCode::data) {}
};

// Topic missing from (or inconsistent with) the topic registry.
struct RegistryError : Error {
    explicit RegistryError(const std::string& msg) : Error("registry error: " + msg, ExitCode::data) {}
};

// Score outside its declared range.
struct RangeError : Error {
    explicit RangeError(const std::string& msg) : Error("range error: " + msg, ExitCode::data) {}
};

// Violated call contract between modules (shape mismatch, all-masked batch, ...).
struct ContractError : Error {
    explicit ContractError(const std::string& msg) : Error("contract error: " + msg, ExitCode::runtime) {}
};

// Filesystem failures.
struct FileError : Error {
    explicit FileError(const std::string& msg) : Error("file error: " + msg, ExitCode::runtime) {}
};

// Non-finite losses and other mid-run failures.
struct TrainingError : Error {
    explicit TrainingError(const std::string& msg) : Error("training error: " + msg, ExitCode::runtime) {}
};

// Checkpoint incompatible with the split/registry it is evaluated against.
struct VersionError : Error {
    explicit VersionError(const std::string& msg) : Error("version error: " + msg, ExitCode::runtime) {}
};

} // namespace ctaes
