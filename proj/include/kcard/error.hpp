#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kcard {

enum class ErrorCode {
    InvalidArgument,
    ParseError,
    MissingCell,
    NonPositivePrice,
    NonMonotoneDates,
    DegenerateSpec,
    KTooLarge,
    ZeroVariance,
    SamplingExhausted,
    EmptyInput,
    SingularDesign,
    MismatchedFits,
    TooShort,
    MissingColumn,
    Io,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::MissingCell: return "MissingCell";
    case ErrorCode::NonPositivePrice: return "NonPositivePrice";
    case ErrorCode::NonMonotoneDates: return "NonMonotoneDates";
    case ErrorCode::DegenerateSpec: return "DegenerateSpec";
    case ErrorCode::KTooLarge: return "KTooLarge";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::SamplingExhausted: return "SamplingExhausted";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::MismatchedFits: return "MismatchedFits";
    case ErrorCode::TooShort: return "TooShort";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a machine-checkable code.
/// what() is "<Code>: <detail>".
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace kcard
