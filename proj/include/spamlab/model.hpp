#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

#include "spamlab/classifiers.hpp"
#include "spamlab/corpus.hpp"
#include "spamlab/ruledsl.hpp"
#include "spamlab/textfeat.hpp"

namespace spamlab {

enum class ModelKind { NaiveBayes, Logistic, Tree, ManualTree, Forest, RuleSet };

/// "nb", "logreg", "tree", "manual_tree", "forest", "ruleset"
std::string_view model_kind_name(ModelKind kind) noexcept;
/// Throws BadHyperparameter for unknown names.
ModelKind parse_model_kind(std::string_view name);

constexpr int kModelFormatVersion = 1;

struct TrainConfig {
    ModelKind kind = ModelKind::Logistic;
    double threshold = kDefaultThreshold;
    double alpha = 1.0;
    LogisticConfig logistic;
    TreeConfig tree;
    ForestConfig forest;
    /// manual_tree only: nested {"leaf"} / {"split", "if_false", "if_true"} description.
    nlohmann::json manual_tree;
    /// ruleset only.
    RuleSet rules;
};

/// Hyperparameters from a JSON object (the service's POST /models body and
/// the CLI's flag map share these names): threshold, alpha, lambda, max_iter,
/// tol, max_depth, min_leaf, impurity, n_trees, mtry, bootstrap, seed, tree,
/// rules.
TrainConfig train_config_from_json(ModelKind kind, const nlohmann::json& params);

/// A trained classifier bundled with the feature definitions it was fit on,
/// so it can score raw subject lines.
class TrainedModel {
public:
    using Payload = std::variant<NaiveBayesModel, LogisticModel, DecisionTree, ForestModel, RuleSet>;

    TrainedModel(ModelKind kind, FeatureSet features, Payload payload);

    ModelKind kind() const noexcept { return kind_; }
    const FeatureSet& features() const noexcept { return features_; }
    std::vector<std::string> feature_names() const;
    const Payload& payload() const noexcept { return payload_; }

    /// Not available for rulesets, whose count comparisons need the raw text.
    Prediction predict(FeatureView x) const;
    Prediction predict_subject(std::string_view subject) const;
    std::vector<Label> predict_labels(const Corpus& corpus) const;

    /// Kind-specific body: coefficients, tree structure, conditional
    /// log-probabilities or clause list.
    nlohmann::json payload_json() const;
    /// Versioned document: {"format_version", "kind", "feature_names", "features", "payload"}.
    nlohmann::json to_json() const;
    static TrainedModel from_json(const nlohmann::json& j);

private:
    ModelKind kind_;
    FeatureSet features_;
    Payload payload_;
};

/// Looks up each name in `available` first, then in the built-in presets.
FeatureSet resolve_features(const std::vector<std::string>& names, const FeatureSet& available);

/// Trains a model of config.kind on `train`. Statistical kinds use every
/// definition in `features`; manual trees and rulesets keep only the
/// features they reference, resolved against `features` and the presets.
TrainedModel train_model(const Corpus& train, const FeatureSet& features, const TrainConfig& config);

TrainedModel load_model_file(const std::string& path);
void save_model_file(const TrainedModel& model, const std::string& path);

}  // namespace spamlab
