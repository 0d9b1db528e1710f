#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace expressive {

enum class ErrorKind {
    ParseError,
    MissingColumn,
    MissingParticipant,
    NonFiniteValue,
    InvalidArgument,
    TooShort,
    ZeroVariance,
    DegenerateRatings,
    DegenerateInput,
    DegenerateConfiguration,
    SingularCovariance,
    OutOfRange,
    EmptyInput,
    EmptyTokenList,
    EmptyTranscript,
    InvalidPattern,
    DimensionMismatch,
    LengthMismatch,
    Diverged,
    TooFewGroups,
    UnpairedRecords,
    MixedFeatureSets,
    ConfigError,
    IoError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every recoverable failure in the library is reported as an Error carrying
/// its kind, so callers (and the CLI) can branch on the category.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

}  // namespace expressive
