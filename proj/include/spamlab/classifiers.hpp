#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "spamlab/corpus.hpp"
#include "spamlab/textfeat.hpp"

namespace spamlab {

using FeatureView = std::span<const std::uint8_t>;

/// Shared predict contract: every model maps a feature vector to a label and
/// a spam score in [0, 1].
struct Prediction {
    Label label = Label::NonSpam;
    double score = 0.5;
};

/// Spam iff score is strictly greater than the threshold.
inline Label label_for(double score, double threshold) noexcept {
    return score > threshold ? Label::Spam : Label::NonSpam;
}

constexpr double kDefaultThreshold = 0.5;

/// Throws BadHyperparameter unless threshold lies in (0, 1).
void check_threshold(double threshold);

/// Throws SingleClassCorpus / EmptyInput as appropriate.
void require_both_classes(const FeatureMatrix& matrix);

// ---------------------------------------------------------------------------
// Bernoulli naive Bayes
// ---------------------------------------------------------------------------

struct NaiveBayesModel {
    // Indexed by static_cast<int>(Label): [0] = NonSpam, [1] = Spam.
    std::array<double, 2> log_prior{};
    std::array<std::vector<double>, 2> log_present;  // log P(f = 1 | c)
    std::array<std::vector<double>, 2> log_absent;   // log P(f = 0 | c)
    double alpha = 1.0;
    double threshold = kDefaultThreshold;

    std::size_t num_features() const noexcept { return log_present[0].size(); }
};

/// Laplace-smoothed counts; every quantity kept in log space.
NaiveBayesModel fit_naive_bayes(const FeatureMatrix& matrix, double alpha = 1.0);
Prediction predict(const NaiveBayesModel& model, FeatureView x);
/// Posterior P(Spam | x) by log-sum-exp over the two joint scores.
double posterior_spam(const NaiveBayesModel& model, FeatureView x);

// ---------------------------------------------------------------------------
// Penalized logistic regression
// ---------------------------------------------------------------------------

struct LogisticConfig {
    double lambda = 1e-4;
    int max_iter = 200;
    double tol = 1e-8;
};

struct LogisticModel {
    std::vector<double> weights;
    double intercept = 0.0;
    double lambda = 1e-4;
    bool converged = false;
    int iterations = 0;
    double threshold = kDefaultThreshold;
    /// Objective value before the first step and after every iteration.
    std::vector<double> objective_trace;
};

struct LogisticObjective {
    double value = 0.0;              // NLL + (lambda / 2) * |w|^2
    std::vector<double> grad_weights;
    double grad_intercept = 0.0;
};

/// Penalized negative log-likelihood and its analytic gradient; the
/// intercept is not penalized.
LogisticObjective logistic_objective(const FeatureMatrix& matrix, std::span<const double> weights, double intercept,
                                     double lambda);

/// Damped Newton from zero with backtracking; falls back to a steepest-descent
/// step when the Newton direction fails to decrease the objective.
LogisticModel fit_logistic(const FeatureMatrix& matrix, const LogisticConfig& config = {});
Prediction predict(const LogisticModel& model, FeatureView x);
double sigmoid(double z) noexcept;

// ---------------------------------------------------------------------------
// Decision trees
// ---------------------------------------------------------------------------

enum class Impurity { Gini, Entropy };

struct TreeConfig {
    int max_depth = 5;
    std::size_t min_leaf = 2;
    Impurity impurity = Impurity::Gini;
};

/// Flat node storage; nodes[0] is the root. A node with feature < 0 is a leaf.
struct TreeNode {
    int feature = -1;
    std::size_t if_false = 0;
    std::size_t if_true = 0;
    Label verdict = Label::NonSpam;
    std::size_t spam_count = 0;
    std::size_t non_spam_count = 0;

    bool is_leaf() const noexcept { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct DecisionTree {
    std::vector<TreeNode> nodes;
    std::size_t num_features = 0;

    const TreeNode& root() const { return nodes.front(); }
    std::size_t depth() const;
    std::size_t leaf_count() const;
    /// Index of the leaf that x reaches.
    std::size_t route(FeatureView x) const;

    friend bool operator==(const DecisionTree&, const DecisionTree&) = default;
};

/// Picks the features a node may split on; receives the full feature count.
using FeatureSampler = std::function<std::vector<std::size_t>(std::size_t num_features)>;

/// Greedy binary partitioning. Splits maximize the impurity decrease with
/// ties going to the lowest feature index; a split must leave at least
/// min_leaf rows on both sides.
DecisionTree induce_tree(const FeatureMatrix& matrix, const TreeConfig& config = {});
DecisionTree induce_tree(const FeatureMatrix& matrix, std::span<const std::size_t> rows, const TreeConfig& config,
                         const FeatureSampler& sampler);

/// Builds a tree exactly as described:
///   {"leaf": "spam"|"non-spam"}
///   {"split": "<feature name>", "if_false": <node>, "if_true": <node>}
/// Feature names index into `feature_names`. Counts start at zero.
DecisionTree manual_tree(const nlohmann::json& description, const std::vector<std::string>& feature_names);
/// Feature names a manual description mentions, first appearance first.
std::vector<std::string> manual_tree_features(const nlohmann::json& description);
/// Recomputes every node's class counts by routing the matrix rows.
void fill_counts(DecisionTree& tree, const FeatureMatrix& matrix);

/// Leaf verdict plus the leaf's training spam fraction (0.5 with no counts).
Prediction predict(const DecisionTree& tree, FeatureView x);

// ---------------------------------------------------------------------------
// Random forest
// ---------------------------------------------------------------------------

struct ForestConfig {
    std::size_t n_trees = 100;
    std::size_t mtry = 0;  // 0 selects ceil(sqrt(p))
    bool bootstrap = true;
    std::uint64_t seed = 0;
    TreeConfig tree;
};

struct ForestModel {
    std::vector<DecisionTree> trees;
    std::size_t mtry = 0;
    bool bootstrap = true;
    std::uint64_t seed = 0;

    friend bool operator==(const ForestModel&, const ForestModel&) = default;
};

std::size_t default_mtry(std::size_t num_features) noexcept;

/// Tree t draws from an independent stream seeded by derive_seed(seed, t), so
/// the result does not depend on how trees are scheduled across threads.
ForestModel fit_forest(const FeatureMatrix& matrix, const ForestConfig& config = {});
/// Majority vote; an exact tie goes to NonSpam. Score = spam vote fraction.
Prediction predict(const ForestModel& forest, FeatureView x);

// ---------------------------------------------------------------------------
// JSON payloads
// ---------------------------------------------------------------------------

nlohmann::json to_json(const NaiveBayesModel& model);
nlohmann::json to_json(const LogisticModel& model);
nlohmann::json to_json(const DecisionTree& tree, const std::vector<std::string>& feature_names);
nlohmann::json to_json(const ForestModel& forest, const std::vector<std::string>& feature_names);

NaiveBayesModel naive_bayes_from_json(const nlohmann::json& j, std::size_t num_features);
LogisticModel logistic_from_json(const nlohmann::json& j, std::size_t num_features);
DecisionTree tree_from_json(const nlohmann::json& j, const std::vector<std::string>& feature_names);
ForestModel forest_from_json(const nlohmann::json& j, const std::vector<std::string>& feature_names);

}  // namespace spamlab
