#pragma once

#include <stdexcept>
#include <string>

namespace mscale {

// Error identities. Each category maps to one CLI exit code.

/// Malformed or inconsistent input data (CSV parse failures, gaps, mismatched lengths).
class IngestError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or arguments (alpha outside (0,1), too few draws, bad family spec).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerically undefined quantity, e.g. overdispersion of an all-zero series.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filesystem failures while reading caches or writing results.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace mscale
