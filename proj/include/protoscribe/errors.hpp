#pragma once

#include <stdexcept>
#include <string>

namespace protoscribe {

/// Malformed or inconsistent input data (bad manifest, unknown label,
/// geometry mismatch, unreadable file). CLI maps this to exit code 2.
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numeric breakdown (non-finite cost, degenerate solve). Exit code 3.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace protoscribe
