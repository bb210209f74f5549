#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "spamlab/corpus.hpp"
#include "spamlab/model.hpp"
#include "spamlab/rational.hpp"
#include "spamlab/textfeat.hpp"

namespace spamlab {

/// 2x2 counts with Spam as the positive class.
struct ConfusionMatrix {
    std::int64_t tp = 0;
    std::int64_t fn = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;

    std::int64_t total() const noexcept { return tp + fn + fp + tn; }
    /// The same counts read with NonSpam as the positive class.
    ConfusionMatrix swapped() const noexcept { return {tn, fp, fn, tp}; }

    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

/// Exact metrics. sensitivity / specificity are empty when their
/// denominator is zero.
struct MetricsReport {
    Rational accuracy;
    Rational mcr;
    std::optional<Rational> sensitivity;
    std::optional<Rational> specificity;
};

ConfusionMatrix confusion(const std::vector<Label>& predicted, const std::vector<Label>& truth);
MetricsReport metrics(const ConfusionMatrix& cm);

/// Feature value x label counts.
struct CrossTable {
    std::int64_t true_spam = 0;
    std::int64_t true_non_spam = 0;
    std::int64_t false_spam = 0;
    std::int64_t false_non_spam = 0;

    friend bool operator==(const CrossTable&, const CrossTable&) = default;
};

CrossTable cross_classify(const FeatureDef& feature, const Corpus& corpus);

struct ScoredSplit {
    ConfusionMatrix confusion;
    MetricsReport metrics;
};

struct ComparisonRow {
    std::string model_name;
    ScoredSplit train;
    std::optional<ScoredSplit> test;  // empty when the test corpus is empty
};

struct ComparisonTable {
    std::vector<ComparisonRow> rows;
};

struct NamedModel {
    std::string name;
    const TrainedModel* model = nullptr;
};

ScoredSplit score(const TrainedModel& model, const Corpus& corpus);

/// Scores each model on both corpora, keeping input order. Model names must
/// be unique; the training corpus must be non-empty.
ComparisonTable compare(const std::vector<NamedModel>& models, const Corpus& train, const Corpus& test);

// Rendering. Decimals use three places; undefined metrics print "n/a" in
// text and null in JSON.
std::string format_metric(const std::optional<Rational>& value);
nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const MetricsReport& report);
nlohmann::json to_json(const ScoredSplit& split);
nlohmann::json to_json(const ComparisonTable& table);
nlohmann::json to_json(const CrossTable& table);

/// Aligned columns: model, split, accuracy, MCR, sensitivity, specificity, TP, FN, FP, TN.
std::string to_text(const ComparisonTable& table);
std::string to_text(const std::string& model_name, const std::string& split_name, const ScoredSplit& split);

}  // namespace spamlab
