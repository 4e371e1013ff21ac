#pragma once

#include <stdexcept>
#include <string>

namespace qdecomp {

/// Failure categories raised by the library. Every exception thrown by qdecomp
/// derives from `Error` and carries one of these codes.
enum class ErrorCode {
    kDimensionMismatch,
    kNonFiniteEntry,
    kTooManyBinaries,
    kNumericalBreakdown,
    kInfeasible,
    kLengthMismatch,
    kTooLarge,
    kNoPointCuts,
    kSubInfeasible,
    kMasterInfeasible,
    kPricingInfeasible,
    kPricingUnbounded,
    kTooManyUnstable,
    kInvalidArgument,
    kParseError,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
        case ErrorCode::kNonFiniteEntry: return "NonFiniteEntry";
        case ErrorCode::kTooManyBinaries: return "TooManyBinaries";
        case ErrorCode::kNumericalBreakdown: return "NumericalBreakdown";
        case ErrorCode::kInfeasible: return "Infeasible";
        case ErrorCode::kLengthMismatch: return "LengthMismatch";
        case ErrorCode::kTooLarge: return "TooLarge";
        case ErrorCode::kNoPointCuts: return "NoPointCuts";
        case ErrorCode::kSubInfeasible: return "SubInfeasible";
        case ErrorCode::kMasterInfeasible: return "MasterInfeasible";
        case ErrorCode::kPricingInfeasible: return "PricingInfeasible";
        case ErrorCode::kPricingUnbounded: return "PricingUnbounded";
        case ErrorCode::kTooManyUnstable: return "TooManyUnstable";
        case ErrorCode::kInvalidArgument: return "InvalidArgument";
        case ErrorCode::kParseError: return "ParseError";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
 public:
    Error(ErrorCode code, const std::string& message)
            : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

 private:
    ErrorCode code_;
};

}  // namespace qdecomp
