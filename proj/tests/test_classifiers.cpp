#include "doctest.h"

#include <cmath>

#include "oracles.hpp"
#include "test_util.hpp"
#include "spamlab/classifiers.hpp"

using namespace spamlab;

namespace {

FeatureMatrix matrix(std::vector<FeatureVector> rows, std::vector<Label> labels) {
    FeatureMatrix m;
    for (std::size_t j = 0; j < (rows.empty() ? 0 : rows[0].size()); ++j) m.feature_names.push_back("f" + std::to_string(j));
    m.rows = std::move(rows);
    m.labels = std::move(labels);
    return m;
}

constexpr Label S = Label::Spam;
constexpr Label N = Label::NonSpam;

// Two spam and two non-spam rows; the single feature is on exactly for spam.
FeatureMatrix separating() { return matrix({{1}, {1}, {0}, {0}}, {S, S, N, N}); }

}  // namespace

TEST_SUITE("classifiers") {

TEST_CASE("threshold rule is strict") {
    CHECK(label_for(0.5, 0.5) == N);
    CHECK(label_for(0.5000001, 0.5) == S);
    CHECK(code_of([] { check_threshold(0.0); }) == ErrorCode::BadHyperparameter);
    CHECK(code_of([] { check_threshold(1.0); }) == ErrorCode::BadHyperparameter);
}

TEST_CASE("naive Bayes hand-computed example") {
    const NaiveBayesModel nb = fit_naive_bayes(separating(), 1.0);
    CHECK(std::exp(nb.log_present[1][0]) == doctest::Approx(0.75));
    CHECK(std::exp(nb.log_present[0][0]) == doctest::Approx(0.25));
    CHECK(nb.log_prior[0] == doctest::Approx(std::log(0.5)));
    CHECK(nb.log_prior[1] == doctest::Approx(std::log(0.5)));
    const FeatureVector on{1}, off{0};
    CHECK(posterior_spam(nb, on) == doctest::Approx(0.75));
    CHECK(predict(nb, on).label == S);
    CHECK(posterior_spam(nb, off) == doctest::Approx(0.25));
    CHECK(predict(nb, off).label == N);
}

TEST_CASE("naive Bayes limits and errors") {
    const NaiveBayesModel big = fit_naive_bayes(separating(), 1e9);
    CHECK(std::exp(big.log_present[1][0]) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(code_of([] { fit_naive_bayes(matrix({{}, {}}, {S, N})); }) == ErrorCode::ZeroFeatures);
    const NaiveBayesModel useless = fit_naive_bayes(matrix({{1}, {1}}, {S, N}), 1.0);
    CHECK(posterior_spam(useless, FeatureVector{1}) == doctest::Approx(0.5));
    CHECK(predict(useless, FeatureVector{1}).label == N);
    CHECK(code_of([] { fit_naive_bayes(matrix({{1}, {0}}, {S, S})); }) == ErrorCode::SingleClassCorpus);
    CHECK(code_of([] { fit_naive_bayes(separating(), 0.0); }) == ErrorCode::BadHyperparameter);
}

TEST_CASE("naive Bayes equals brute-force enumeration") {
    SplitMix64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t p = oracle::uniform(rng, 1, 4);
        const FeatureMatrix m = oracle::random_matrix(rng, oracle::uniform(rng, 2, 25), p);
        const double alpha = oracle::uniform_real(rng, 0.1, 3.0);
        const NaiveBayesModel nb = fit_naive_bayes(m, alpha);
        for (const auto& x : oracle::all_inputs(p)) {
            CHECK(std::abs(posterior_spam(nb, x) - oracle::naive_bayes_enumeration(m, alpha, x)) < 1e-12);
        }
    }
}

TEST_CASE("logistic gradient matches central differences") {
    SplitMix64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const FeatureMatrix m =
            oracle::random_matrix(rng, oracle::uniform(rng, 2, 20), oracle::uniform(rng, 1, 5));
        CHECK(oracle::gradient_relative_error(m, rng, oracle::uniform_real(rng, 1e-4, 1.0)) < 1e-6);
    }
}

TEST_CASE("logistic fit converges with a non-increasing objective") {
    SplitMix64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const FeatureMatrix m =
            oracle::random_matrix(rng, oracle::uniform(rng, 2, 40), oracle::uniform(rng, 1, 6));
        const LogisticModel fit = fit_logistic(m);
        CHECK(fit.converged);
        CHECK(fit.iterations <= 200);
        for (std::size_t k = 1; k < fit.objective_trace.size(); ++k) {
            CHECK(fit.objective_trace[k] <= fit.objective_trace[k - 1] + 1e-12);
        }
    }
}

TEST_CASE("logistic examples") {
    const LogisticModel sep = fit_logistic(separating());
    CHECK(sep.converged);
    CHECK(std::isfinite(sep.weights[0]));
    CHECK(predict(sep, FeatureVector{1}).score > 0.5);
    CHECK(predict(sep, FeatureVector{0}).score < 0.5);

    const LogisticModel zero_col = fit_logistic(matrix({{0, 1}, {0, 1}, {0, 0}, {0, 0}}, {S, N, S, N}));
    CHECK(zero_col.weights[0] == doctest::Approx(0.0).epsilon(1e-9));

    LogisticModel m;
    m.weights = {2.0};
    m.intercept = -1.0;
    CHECK(predict(m, FeatureVector{1}).score == doctest::Approx(0.7310585786));
    CHECK(predict(m, FeatureVector{1}).label == S);
    m.weights = {0.0};
    m.intercept = 0.0;
    CHECK(predict(m, FeatureVector{1}).label == N);
    m.weights = {};
    m.intercept = 10.0;
    CHECK(predict(m, FeatureVector{}).score > 0.9999);
}

TEST_CASE("logistic shrinks toward zero as lambda grows on uninformative data") {
    const FeatureMatrix m = matrix({{1}, {1}, {0}, {0}}, {S, N, S, N});
    const LogisticModel fit = fit_logistic(m, {10.0, 200, 1e-10});
    CHECK(std::abs(fit.intercept) < 1e-6);
    CHECK(std::abs(fit.weights[0]) < 1e-6);
}

TEST_CASE("logistic score is monotone in a positively weighted feature") {
    SplitMix64 rng(4);
    for (int trial = 0; trial < 30; ++trial) {
        const FeatureMatrix m = oracle::random_matrix(rng, 20, 3);
        const LogisticModel fit = fit_logistic(m);
        for (std::size_t j = 0; j < 3; ++j) {
            FeatureVector off{0, 0, 0}, on{0, 0, 0};
            on[j] = 1;
            const double delta = predict(fit, on).score - predict(fit, off).score;
            CHECK(delta * fit.weights[j] >= 0);
        }
    }
}

TEST_CASE("tree examples") {
    const DecisionTree t = induce_tree(matrix({{1, 0}, {1, 1}, {0, 0}, {0, 1}}, {S, S, N, N}), {5, 1});
    REQUIRE(t.nodes.size() == 3);
    CHECK(t.root().feature == 0);
    CHECK(t.leaf_count() == 2);

    const DecisionTree constant = induce_tree(matrix({{1}, {0}}, {S, S}), {5, 1});
    CHECK(constant.nodes.size() == 1);
    CHECK(constant.root().verdict == S);
}

TEST_CASE("constructed fixture: larger Gini decrease wins") {
    // f0 separates 4 of 5 rows per side, f1 only 3 of 5.
    std::vector<FeatureVector> rows;
    std::vector<Label> labels;
    const int f0[10] = {1, 1, 1, 1, 0, 0, 0, 0, 0, 1};
    const int f1[10] = {1, 1, 1, 0, 0, 0, 0, 1, 1, 0};
    for (int i = 0; i < 10; ++i) {
        rows.push_back({static_cast<std::uint8_t>(f0[i]), static_cast<std::uint8_t>(f1[i])});
        labels.push_back(i < 5 ? S : N);
    }
    const FeatureMatrix m = matrix(rows, labels);
    CHECK(oracle::best_root_split(m, 1) == std::optional<std::size_t>(0));
    CHECK(induce_tree(m, {1, 1}).root().feature == 0);
}

TEST_CASE("root split equals exhaustive Gini search") {
    SplitMix64 rng(6);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t min_leaf = oracle::uniform(rng, 1, 3);
        const FeatureMatrix m =
            oracle::random_matrix(rng, oracle::uniform(rng, 2, 30), oracle::uniform(rng, 1, 6), 0.4);
        const DecisionTree t = induce_tree(m, {3, min_leaf});
        const auto expected = oracle::best_root_split(m, min_leaf);
        if (expected) {
            CHECK(t.root().feature == static_cast<int>(*expected));
        } else {
            CHECK(t.root().is_leaf());
        }
    }
}

TEST_CASE("tree invariants on random data") {
    SplitMix64 rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        const TreeConfig cfg{static_cast<int>(oracle::uniform(rng, 0, 4)), oracle::uniform(rng, 1, 3)};
        const FeatureMatrix m = oracle::random_matrix(rng, oracle::uniform(rng, 2, 40), oracle::uniform(rng, 1, 5));
        const DecisionTree t = induce_tree(m, cfg);
        CHECK(t.depth() <= static_cast<std::size_t>(cfg.max_depth));
        for (const auto& node : t.nodes) {
            if (!node.is_leaf()) continue;
            if (&node != &t.nodes.front()) CHECK(node.spam_count + node.non_spam_count >= cfg.min_leaf);
            const Label majority = node.spam_count > node.non_spam_count ? S : N;
            CHECK(node.verdict == majority);
        }
        const DecisionTree again = induce_tree(m, cfg);
        CHECK(again == t);
    }
}

TEST_CASE("manual trees obey their structure") {
    const std::vector<std::string> names = {"dear_or_bless", "contains_re"};
    const DecisionTree null = manual_tree({{"leaf", "non-spam"}}, names);
    CHECK(predict(null, FeatureVector{1, 1}).label == N);
    CHECK(predict(null, FeatureVector{0, 0}).label == N);

    const nlohmann::json two_split = {{"split", "dear_or_bless"},
                                 {"if_true", {{"leaf", "spam"}}},
                                 {"if_false",
                                  {{"split", "contains_re"},
                                   {"if_false", {{"leaf", "spam"}}},
                                   {"if_true", {{"leaf", "non-spam"}}}}}};
    const DecisionTree t = manual_tree(two_split, names);
    CHECK(predict(t, FeatureVector{1, 0}).label == S);
    CHECK(predict(t, FeatureVector{0, 1}).label == N);
    CHECK(predict(t, FeatureVector{0, 0}).label == S);
    CHECK(manual_tree_features(two_split) == names);

    // Swapped verdicts are kept even though they fit worse.
    const DecisionTree swapped =
        manual_tree({{"split", "dear_or_bless"}, {"if_true", {{"leaf", "non-spam"}}}, {"if_false", {{"leaf", "spam"}}}},
                    names);
    CHECK(predict(swapped, FeatureVector{1, 0}).label == N);

    CHECK(code_of([&] { manual_tree({{"split", "nope"}, {"if_true", {{"leaf", "spam"}}}, {"if_false", {{"leaf", "spam"}}}}, names); }) ==
          ErrorCode::UnknownFeature);
    CHECK(code_of([&] { manual_tree({{"split", "contains_re"}}, names); }) == ErrorCode::MalformedTree);
    CHECK(code_of([&] { manual_tree({{"leaf", "maybe"}}, names); }) == ErrorCode::MalformedTree);
}

TEST_CASE("degenerate forest equals the single induced tree") {
    SplitMix64 rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t p = oracle::uniform(rng, 1, 6);
        const FeatureMatrix m = oracle::random_matrix(rng, oracle::uniform(rng, 2, 30), p);
        const TreeConfig cfg{static_cast<int>(oracle::uniform(rng, 1, 4)), oracle::uniform(rng, 1, 2)};
        const ForestModel f = fit_forest(m, {1, p, false, rng.next(), cfg});
        const DecisionTree t = induce_tree(m, cfg);
        REQUIRE(f.trees.size() == 1);
        CHECK(f.trees[0] == t);
        for (const auto& x : oracle::all_inputs(p)) CHECK(predict(f, x).label == predict(t, x).label);
    }
}

TEST_CASE("forest is reproducible for a fixed seed") {
    SplitMix64 rng(10);
    const FeatureMatrix m = oracle::random_matrix(rng, 30, 6);
    const ForestConfig cfg{25, 0, true, 1234, {}};
    const ForestModel a = fit_forest(m, cfg);
    const ForestModel b = fit_forest(m, cfg);
    CHECK(a == b);
    CHECK(to_json(a, m.feature_names).dump() == to_json(b, m.feature_names).dump());
    const ForestModel c = fit_forest(m, {25, 0, true, 1235, {}});
    CHECK_FALSE(c == a);
    CHECK(default_mtry(6) == 3);
    CHECK(default_mtry(1) == 1);
}

TEST_CASE("forest votes") {
    const std::vector<std::string> names = {"f0"};
    auto stump = [&](const char* when_true) {
        return manual_tree({{"split", "f0"}, {"if_true", {{"leaf", when_true}}}, {"if_false", {{"leaf", "non-spam"}}}},
                           names);
    };
    ForestModel f;
    f.trees = {stump("spam"), stump("spam"), stump("non-spam")};
    CHECK(predict(f, FeatureVector{1}).label == S);
    CHECK(predict(f, FeatureVector{1}).score == doctest::Approx(2.0 / 3));
    f.trees = {stump("spam"), stump("non-spam")};
    CHECK(predict(f, FeatureVector{1}).label == N);

    const ForestModel sep = fit_forest(matrix({{1}, {1}, {1}, {0}, {0}, {0}}, {S, S, S, N, N, N}), {100, 1, true, 0, {5, 1}});
    CHECK(predict(sep, FeatureVector{1}).score > 0.5);

    f.trees.assign(100, stump("spam"));
    CHECK(predict(f, FeatureVector{1}).score == 1.0);
    CHECK(predict(f, FeatureVector{0}).score == 0.0);
}

TEST_CASE("model payload JSON round trips") {
    SplitMix64 rng(12);
    const FeatureMatrix m = oracle::random_matrix(rng, 25, 4);
    const NaiveBayesModel nb = fit_naive_bayes(m);
    CHECK(to_json(naive_bayes_from_json(to_json(nb), 4)) == to_json(nb));
    const LogisticModel lr = fit_logistic(m);
    CHECK(to_json(logistic_from_json(to_json(lr), 4)) == to_json(lr));
    const DecisionTree t = induce_tree(m);
    CHECK(tree_from_json(to_json(t, m.feature_names), m.feature_names) == t);
    const ForestModel f = fit_forest(m, {10, 0, true, 5, {}});
    CHECK(forest_from_json(to_json(f, m.feature_names), m.feature_names) == f);
    CHECK(code_of([&] { logistic_from_json(to_json(lr), 3); }) == ErrorCode::BadModelFile);
}

TEST_CASE("dimension and input errors") {
    CHECK(code_of([] { fit_logistic(matrix({{1}, {0}}, {S, S})); }) == ErrorCode::SingleClassCorpus);
    CHECK(code_of([] { fit_naive_bayes(matrix({}, {})); }) == ErrorCode::EmptyInput);
    const NaiveBayesModel nb = fit_naive_bayes(separating());
    CHECK(code_of([&] { predict(nb, FeatureVector{1, 0}); }) == ErrorCode::DimensionMismatch);
}

}  // TEST_SUITE
