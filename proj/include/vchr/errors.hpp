#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vchr {

/// Caller violated a documented precondition (grid mismatch, nonzero mean, bad config value).
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Conjugate-gradient iteration did not reach the requested tolerance.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual, int iterations)
        : std::runtime_error(what), residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

/// A post-step self check found the scheme equations violated beyond tolerance.
class ConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed snapshot or config file. `offset()` is the byte offset (or line number for
/// text configs) where parsing stopped.
class FormatError : public std::runtime_error {
public:
    FormatError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

} // namespace vchr
