#include "riskflow/error.hpp"

namespace riskflow {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::NonFiniteFeature: return "NonFiniteFeature";
        case ErrorCode::OutOfOrderEvent: return "OutOfOrderEvent";
        case ErrorCode::ConfigError: return "ConfigError";
        case ErrorCode::InvalidLoss: return "InvalidLoss";
        case ErrorCode::EmptyWindow: return "EmptyWindow";
        case ErrorCode::NoSamples: return "NoSamples";
        case ErrorCode::JoinError: return "JoinError";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, std::string message, std::string detail,
             std::optional<std::size_t> index)
    : std::runtime_error(std::string(to_string(code)) + ": " + message),
      code_(code),
      detail_(std::move(detail)),
      index_(index) {}

void throw_dimension_mismatch(std::size_t expected, std::size_t actual, std::string_view what) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + " has length " + std::to_string(actual) + ", expected " +
                    std::to_string(expected),
                std::string(what));
}

}  // namespace riskflow
