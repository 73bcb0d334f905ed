#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace isofit {

/// Failure categories surfaced by every module. The CLI maps them to a
/// machine-readable error record.
enum class ErrorKind {
    DimensionMismatch,
    DegeneratePair,
    DomainViolation,
    StabilityViolation,
    NonFiniteState,
    NonFiniteValue,
    NoDescentDirection,
    EmptyChain,
    ZeroSignal,
    ConfigError,
    IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DegeneratePair: return "DegeneratePair";
    case ErrorKind::DomainViolation: return "DomainViolation";
    case ErrorKind::StabilityViolation: return "StabilityViolation";
    case ErrorKind::NonFiniteState: return "NonFiniteState";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::NoDescentDirection: return "NoDescentDirection";
    case ErrorKind::EmptyChain: return "EmptyChain";
    case ErrorKind::ZeroSignal: return "ZeroSignal";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

} // namespace isofit
