#include "spamlab/error.hpp"

namespace spamlab {

std::string_view code_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::MissingColumn: return "missing_column";
        case ErrorCode::BadLabel: return "bad_label";
        case ErrorCode::EmptyCorpus: return "empty_corpus";
        case ErrorCode::MalformedCsv: return "malformed_csv";
        case ErrorCode::InvalidFraction: return "invalid_fraction";
        case ErrorCode::BadFeatureDef: return "bad_feature_def";
        case ErrorCode::BadRegex: return "bad_regex";
        case ErrorCode::DuplicateFeatureName: return "duplicate_feature_name";
        case ErrorCode::SyntaxError: return "syntax_error";
        case ErrorCode::UnknownFeature: return "unknown_feature";
        case ErrorCode::MalformedRuleSet: return "malformed_ruleset";
        case ErrorCode::SingleClassCorpus: return "single_class_corpus";
        case ErrorCode::ZeroFeatures: return "zero_features";
        case ErrorCode::DimensionMismatch: return "dimension_mismatch";
        case ErrorCode::MalformedTree: return "malformed_tree";
        case ErrorCode::BadHyperparameter: return "bad_hyperparameter";
        case ErrorCode::BadModelFile: return "bad_model_file";
        case ErrorCode::UnsupportedFormatVersion: return "unsupported_format_version";
        case ErrorCode::LengthMismatch: return "length_mismatch";
        case ErrorCode::EmptyInput: return "empty_input";
        case ErrorCode::NotFound: return "not_found";
        case ErrorCode::UnknownCorpus: return "unknown_corpus";
        case ErrorCode::UnknownFeatureSet: return "unknown_feature_set";
        case ErrorCode::UnknownModel: return "unknown_model";
        case ErrorCode::UnknownReference: return "unknown_reference";
        case ErrorCode::InUse: return "in_use";
        case ErrorCode::BadRequest: return "bad_request";
        case ErrorCode::Internal: return "internal_error";
    }
    return "internal_error";
}

int http_status(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::NotFound:
        case ErrorCode::UnknownCorpus:
        case ErrorCode::UnknownFeatureSet:
        case ErrorCode::UnknownModel: return 404;
        case ErrorCode::InUse: return 409;
        case ErrorCode::Internal: return 500;
        default: return 400;
    }
}

}  // namespace spamlab
