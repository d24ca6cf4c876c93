// =============================================================================
// common.hpp — shared error types and library version.
// =============================================================================
#pragma once

#include <cstdio>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace bpre {

inline constexpr const char* kVersion = "0.1.0";

/// Shortest decimal string that parses back to exactly the same double.
/// Keeps CSV output readable and byte-stable at full fidelity.
inline std::string format_double(double v) {
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    return buf;
}

/// Argument outside the mathematical domain of an operation
/// (e.g. a negative tilt exponent, a Legendre point outside the rate range).
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// The requested computation is outside the regime where the asymptotic
/// theory applies (wrong tilt regime, supercritical model, ...).  The CLI
/// maps this to exit code 2.
struct RegimeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A root finder could not bracket a solution.
struct NoRootError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed configuration or report data.  The CLI maps this to exit code 1.
struct SchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Filesystem failure (unwritable output, refusal to clobber without
/// --force).  The CLI maps this to exit code 1.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace bpre
