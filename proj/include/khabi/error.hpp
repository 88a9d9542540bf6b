#pragma once

#include <stdexcept>
#include <string>

namespace khabi {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid parameters or arguments (maps to CLI exit code 1).
class DomainError : public Error {
public:
    using Error::Error;
};

/// An oracle pairing or invariant failed (maps to CLI exit code 2).
class OracleFailure : public Error {
public:
    using Error::Error;
};

/// An iterative numerical procedure did not converge (maps to CLI exit code 3).
class NonConvergence : public Error {
public:
    NonConvergence(const std::string& what, double partial_value = 0.0)
        : Error(what), partial_(partial_value) {}

    double partial_value() const noexcept { return partial_; }

private:
    double partial_;
};

} // namespace khabi
