#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fracinv {

/// Failure categories surfaced by the library. The CLI maps these onto exit
/// codes (validation = 2, numerical = 3, compatibility = 4).
enum class ErrorKind {
    InvalidParameters,
    InvalidSpec,
    InvalidOrder,
    GridTooCoarse,
    NonConvergence,
    ContourFailure,
    QuadratureFailure,
    MissingCoefficient,
    InsufficientData,
    MeanTooSmall,
    CompatibilityViolation,
    SingularSystem,
    StepRejected,
    ConfigError,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept
{
    switch (kind) {
    case ErrorKind::InvalidParameters: return "InvalidParameters";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::InvalidOrder: return "InvalidOrder";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::ContourFailure: return "ContourFailure";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::MissingCoefficient: return "MissingCoefficient";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::MeanTooSmall: return "MeanTooSmall";
    case ErrorKind::CompatibilityViolation: return "CompatibilityViolation";
    case ErrorKind::SingularSystem: return "SingularSystem";
    case ErrorKind::StepRejected: return "StepRejected";
    case ErrorKind::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

    /// Validation-type errors are caller mistakes rather than numerical trouble.
    [[nodiscard]] bool is_validation() const noexcept
    {
        switch (kind_) {
        case ErrorKind::InvalidParameters:
        case ErrorKind::InvalidSpec:
        case ErrorKind::InvalidOrder:
        case ErrorKind::GridTooCoarse:
        case ErrorKind::ConfigError:
            return true;
        default:
            return false;
        }
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what)
{
    throw Error(kind, what);
}

} // namespace fracinv
