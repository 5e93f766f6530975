#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qtrap {

// Maps onto the CLI exit-code contract: validation -> 1, analysis -> 2, io -> 3.
enum class ErrorKind { validation, analysis, io };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

/// Schema or invariant violation in input data. Carries the offending
/// position when known (origin is usually a file path, line is 1-based).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& message, std::string field = {},
                             std::string origin = {}, std::size_t line = 0);

    const std::string& field() const noexcept { return field_; }
    const std::string& origin() const noexcept { return origin_; }
    std::size_t line() const noexcept { return line_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::string field_;
    std::string origin_;
    std::size_t line_;
    std::string detail_;
};

/// The inputs are well-formed but the requested analysis is undefined for
/// them (zero anchor, mismatched ladder key, underdetermined fit, ...).
class AnalysisError : public Error {
public:
    explicit AnalysisError(const std::string& message) : Error(ErrorKind::analysis, message) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& message) : Error(ErrorKind::io, message) {}
};

}  // namespace qtrap
