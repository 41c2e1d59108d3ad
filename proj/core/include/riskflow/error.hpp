#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace riskflow {

enum class ErrorCode {
    DimensionMismatch,
    NonFiniteFeature,
    OutOfOrderEvent,
    ConfigError,
    InvalidLoss,
    EmptyWindow,
    NoSamples,
    JoinError,
    ParseError,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure in the engine surfaces as exactly one of these. `detail` names
// the offending key (config) or is empty; `index` is set for per-feature and
// per-line errors.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message, std::string detail = {},
          std::optional<std::size_t> index = std::nullopt);

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }
    std::optional<std::size_t> index() const noexcept { return index_; }

private:
    ErrorCode code_;
    std::string detail_;
    std::optional<std::size_t> index_;
};

[[noreturn]] void throw_dimension_mismatch(std::size_t expected, std::size_t actual,
                                           std::string_view what);

}  // namespace riskflow
