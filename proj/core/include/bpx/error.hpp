// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bpx {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Broken CSR structure, dimension mismatch or invalid partition.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Malformed input text. line() is 1-based; 0 when not tied to a line.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Raised when an optimization or model-selection step cannot produce a result.
class OptimizationError : public Error {
public:
    using Error::Error;
};

}  // namespace bpx
