#pragma once

#include <stdexcept>
#include <string>

namespace oodkit {

/// Malformed or truncated file contents (bad magic, version, dtype, sizes).
struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid argument or invalid numeric input (NaN/Inf, shape mismatch, bad index).
struct InvalidInput : std::runtime_error {
    explicit InvalidInput(const std::string& msg) : std::runtime_error(msg) {}
};

/// A metric that is undefined for the given labels (single-class input).
struct UndefinedMetric : std::runtime_error {
    explicit UndefinedMetric(const std::string& msg) : std::runtime_error(msg) {}
};

/// Training produced a non-finite loss.
struct DivergenceError : std::runtime_error {
    DivergenceError(const std::string& msg, std::size_t epoch)
        : std::runtime_error(msg), epoch(epoch) {}
    std::size_t epoch;
};

}  // namespace oodkit
