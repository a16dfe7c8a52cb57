#pragma once

#include <stdexcept>
#include <string>

namespace amcn {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed file contents: bad magic, bad header fields, inconsistent records.
struct FormatError : Error {
    explicit FormatError(const std::string& msg) : Error("format: " + msg) {}
};

// File ended before the declared payload was complete.
struct TruncatedFileError : Error {
    explicit TruncatedFileError(const std::string& msg) : Error("truncated: " + msg) {}
};

// Dimensions that violate invariants or would overflow allocation limits.
struct DimensionError : Error {
    explicit DimensionError(const std::string& msg) : Error("dimension: " + msg) {}
};

// Filesystem trouble: missing, unreadable or unwritable paths.
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error("io: " + msg) {}
};

// A caller violated an operation precondition.
struct InvalidArgument : Error {
    explicit InvalidArgument(const std::string& msg) : Error("invalid argument: " + msg) {}
};

// Numeric failure: NaN/Inf in a forward pass, failed gradient check,
// degenerate fits.
struct NumericError : Error {
    explicit NumericError(const std::string& msg) : Error("numeric: " + msg) {}
};

}  // namespace amcn
