#pragma once

#include <stdexcept>
#include <string>

namespace morphsim {

/// Base of every error the engine raises.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad configuration key, value, or unsupported resolution.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Deformation gradient with det(F) <= 0 (or non-finite).
class InvalidDeformation : public Error {
public:
    using Error::Error;
};

/// A particle left the active grid window.
class WindowViolation : public Error {
public:
    using Error::Error;
};

/// Non-finite value in grid or particle state. `dump()` holds the
/// per-particle diagnostics records for the offending state.
class PhysicsError : public Error {
public:
    PhysicsError(const std::string& what, std::string dump)
        : Error(what), dump_(std::move(dump)) {}
    const std::string& dump() const noexcept { return dump_; }

private:
    std::string dump_;
};

/// Operation requires state the caller did not provide (e.g. no robot particles).
class InvalidState : public Error {
public:
    using Error::Error;
};

/// Replay file was recorded against a different task configuration.
class StaleReplay : public Error {
public:
    using Error::Error;
};

}  // namespace morphsim
