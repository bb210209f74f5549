#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace spamlab {

/// Machine-readable failure categories shared by every module. Each value
/// maps to exactly one stable string code and one HTTP status.
enum class ErrorCode {
    MissingColumn,
    BadLabel,
    EmptyCorpus,
    MalformedCsv,
    InvalidFraction,
    BadFeatureDef,
    BadRegex,
    DuplicateFeatureName,
    SyntaxError,
    UnknownFeature,
    MalformedRuleSet,
    SingleClassCorpus,
    ZeroFeatures,
    DimensionMismatch,
    MalformedTree,
    BadHyperparameter,
    BadModelFile,
    UnsupportedFormatVersion,
    LengthMismatch,
    EmptyInput,
    NotFound,
    UnknownCorpus,
    UnknownFeatureSet,
    UnknownModel,
    UnknownReference,
    InUse,
    BadRequest,
    Internal,
};

std::string_view code_string(ErrorCode code) noexcept;
int http_status(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::optional<long long> position = std::nullopt)
        : std::runtime_error(message), code_(code), position_(position) {}

    ErrorCode code() const noexcept { return code_; }

    /// Row number (CSV), character offset (rule syntax) or line number
    /// (ruleset files) where the failure was detected, when meaningful.
    std::optional<long long> position() const noexcept { return position_; }

private:
    ErrorCode code_;
    std::optional<long long> position_;
};

}  // namespace spamlab
