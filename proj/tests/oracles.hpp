#pragma once

// Generators and brute-force reference computations shared by the unit and
// acceptance suites.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "spamlab/classifiers.hpp"
#include "spamlab/evalkit.hpp"
#include "spamlab/rational.hpp"
#include "spamlab/rng.hpp"
#include "spamlab/ruledsl.hpp"

namespace oracle {

using namespace spamlab;

inline std::string data_path(const std::string& name) { return std::string(SPAMLAB_DATA_DIR) + "/" + name; }
inline std::string test_data_path(const std::string& name) {
    return std::string(SPAMLAB_TEST_DATA_DIR) + "/" + name;
}

inline std::size_t uniform(SplitMix64& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

inline bool coin(SplitMix64& rng, double p = 0.5) {
    return static_cast<double>(rng.next() >> 11) * 0x1.0p-53 < p;
}

inline double uniform_real(SplitMix64& rng, double lo, double hi) {
    return lo + (hi - lo) * static_cast<double>(rng.next() >> 11) * 0x1.0p-53;
}

/// Random binary matrix with n rows, p features and both classes present.
inline FeatureMatrix random_matrix(SplitMix64& rng, std::size_t n, std::size_t p, double density = 0.5) {
    FeatureMatrix m;
    for (std::size_t j = 0; j < p; ++j) m.feature_names.push_back("f" + std::to_string(j));
    for (std::size_t i = 0; i < n; ++i) {
        FeatureVector row(p);
        for (auto& v : row) v = coin(rng, density) ? 1 : 0;
        m.rows.push_back(std::move(row));
        m.labels.push_back(coin(rng) ? Label::Spam : Label::NonSpam);
    }
    m.labels[0] = Label::Spam;
    m.labels[1] = Label::NonSpam;
    return m;
}

inline ConfusionMatrix random_confusion(SplitMix64& rng, std::int64_t max_cell = 60) {
    ConfusionMatrix cm;
    do {
        cm.tp = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(max_cell) + 1));
        cm.fn = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(max_cell) + 1));
        cm.fp = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(max_cell) + 1));
        cm.tn = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(max_cell) + 1));
        if (coin(rng, 0.1)) cm.tp = cm.fn = 0;
        if (coin(rng, 0.1)) cm.fp = cm.tn = 0;
    } while (cm.total() == 0);
    return cm;
}

// --- metrics ----------------------------------------------------------------

/// Metric identities for one confusion matrix; returns a failure note or nothing.
inline std::optional<std::string> check_metric_identities(const ConfusionMatrix& cm) {
    const MetricsReport r = metrics(cm);
    const MetricsReport s = metrics(cm.swapped());
    if (!(r.mcr == Rational(1) - r.accuracy)) return "mcr != 1 - accuracy";
    if (!(r.accuracy == Rational(cm.tp + cm.tn, cm.total()))) return "accuracy";
    if ((cm.tp + cm.fn > 0) != r.sensitivity.has_value()) return "sensitivity definedness";
    if (r.sensitivity && !(*r.sensitivity == Rational(cm.tp, cm.tp + cm.fn))) return "sensitivity value";
    if ((cm.tn + cm.fp > 0) != r.specificity.has_value()) return "specificity definedness";
    if (r.specificity && !(*r.specificity == Rational(cm.tn, cm.tn + cm.fp))) return "specificity value";
    if (!(s.accuracy == r.accuracy) || !(s.mcr == r.mcr)) return "swap changes accuracy";
    if (s.sensitivity != r.specificity || s.specificity != r.sensitivity) return "swap does not exchange sens/spec";
    if (!(cm.swapped().swapped() == cm)) return "swap is not an involution";
    return std::nullopt;
}

// --- logistic regression ------------------------------------------------------

/// Largest relative error between the analytic gradient and central
/// differences at a random point.
inline double gradient_relative_error(const FeatureMatrix& m, SplitMix64& rng, double lambda, double h = 1e-5) {
    const std::size_t p = m.num_features();
    std::vector<double> w(p);
    for (auto& v : w) v = uniform_real(rng, -2.0, 2.0);
    const double b = uniform_real(rng, -1.0, 1.0);
    const LogisticObjective obj = logistic_objective(m, w, b, lambda);

    std::vector<double> analytic = obj.grad_weights;
    analytic.push_back(obj.grad_intercept);
    std::vector<double> numeric;
    for (std::size_t j = 0; j <= p; ++j) {
        auto eval = [&](double delta) {
            std::vector<double> ww = w;
            double bb = b;
            if (j < p) ww[j] += delta;
            else bb += delta;
            return logistic_objective(m, ww, bb, lambda).value;
        };
        numeric.push_back((eval(h) - eval(-h)) / (2 * h));
    }
    double diff = 0, na = 0, nn = 0;
    for (std::size_t j = 0; j <= p; ++j) {
        diff += (analytic[j] - numeric[j]) * (analytic[j] - numeric[j]);
        na += analytic[j] * analytic[j];
        nn += numeric[j] * numeric[j];
    }
    return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
}

// --- naive Bayes ----------------------------------------------------------------

/// P(Spam | x) from raw counts: smoothed class-conditional Bernoulli
/// probabilities multiplied out over every feature, then normalized.
inline double naive_bayes_enumeration(const FeatureMatrix& m, double alpha, const FeatureVector& x) {
    double joint[2] = {0, 0};
    for (int c = 0; c < 2; ++c) {
        const Label label = c == 1 ? Label::Spam : Label::NonSpam;
        double n_c = 0;
        std::vector<double> ones(m.num_features(), 0.0);
        for (std::size_t i = 0; i < m.num_rows(); ++i) {
            if (m.labels[i] != label) continue;
            n_c += 1;
            for (std::size_t j = 0; j < m.num_features(); ++j) ones[j] += m.rows[i][j];
        }
        double prob = n_c / static_cast<double>(m.num_rows());
        for (std::size_t j = 0; j < m.num_features(); ++j) {
            const double present = (ones[j] + alpha) / (n_c + 2 * alpha);
            prob *= x[j] ? present : 1 - present;
        }
        joint[c] = prob;
    }
    return joint[1] / (joint[0] + joint[1]);
}

inline std::vector<FeatureVector> all_inputs(std::size_t p) {
    std::vector<FeatureVector> out;
    for (std::size_t mask = 0; mask < (std::size_t{1} << p); ++mask) {
        FeatureVector x(p);
        for (std::size_t j = 0; j < p; ++j) x[j] = (mask >> j) & 1;
        out.push_back(std::move(x));
    }
    return out;
}

// --- trees ----------------------------------------------------------------------

inline Rational gini(std::int64_t spam, std::int64_t non_spam) {
    const std::int64_t n = spam + non_spam;
    if (n == 0) return Rational(0);
    return Rational(1) - Rational(spam * spam + non_spam * non_spam, n * n);
}

/// Exhaustive root split: the feature with the largest exact Gini decrease,
/// lowest index on ties, subject to min_leaf on both sides. Nothing when no
/// split decreases impurity.
inline std::optional<std::size_t> best_root_split(const FeatureMatrix& m, std::size_t min_leaf) {
    std::int64_t spam = 0, non_spam = 0;
    for (auto l : m.labels) (l == Label::Spam ? spam : non_spam) += 1;
    const std::int64_t n = spam + non_spam;
    const Rational parent = gini(spam, non_spam);
    std::optional<std::size_t> best;
    Rational best_decrease(0);
    for (std::size_t j = 0; j < m.num_features(); ++j) {
        std::int64_t c[2][2] = {{0, 0}, {0, 0}};  // [value][is_spam]
        for (std::size_t i = 0; i < m.num_rows(); ++i) c[m.rows[i][j]][m.labels[i] == Label::Spam] += 1;
        const std::int64_t n0 = c[0][0] + c[0][1], n1 = c[1][0] + c[1][1];
        if (n0 < static_cast<std::int64_t>(min_leaf) || n1 < static_cast<std::int64_t>(min_leaf)) continue;
        const Rational decrease =
            parent - Rational(n0, n) * gini(c[0][1], c[0][0]) - Rational(n1, n) * gini(c[1][1], c[1][0]);
        if (best_decrease < decrease) {
            best_decrease = decrease;
            best = j;
        }
    }
    return best;
}

// --- rule ASTs ------------------------------------------------------------------

inline RuleExprPtr random_rule(SplitMix64& rng, int depth) {
    static const char* names[] = {"a", "b", "dear_or_bless", "contains_re", "x1", "all_caps"};
    if (depth <= 1 || coin(rng, 0.25)) {
        if (coin(rng, 0.3)) {
            const auto counter = static_cast<Counter>(rng.below(3));
            const auto op = static_cast<Comparison>(rng.below(5));
            return make_count(counter, op, rng.below(50));
        }
        return make_pred(names[rng.below(6)]);
    }
    switch (rng.below(3)) {
        case 0: return make_not(random_rule(rng, depth - 1));
        case 1: return make_and(random_rule(rng, depth - 1), random_rule(rng, depth - 1));
        default: return make_or(random_rule(rng, depth - 1), random_rule(rng, depth - 1));
    }
}

inline int rule_depth(const RuleExpr& e) {
    return std::visit(
        [](const auto& n) -> int {
            using T = std::decay_t<decltype(n)>;
            if constexpr (std::is_same_v<T, rule::Not>) return 1 + rule_depth(*n.child);
            else if constexpr (std::is_same_v<T, rule::And> || std::is_same_v<T, rule::Or>)
                return 1 + std::max(rule_depth(*n.left), rule_depth(*n.right));
            else return 1;
        },
        e.node());
}

struct SyntaxCase {
    std::string source;
    long long offset = 0;
};

/// Golden file lines: `<offset><TAB><rule source>`; `#` lines are comments.
inline std::vector<SyntaxCase> load_syntax_cases(const std::string& path) {
    std::vector<SyntaxCase> out;
    std::ifstream in(path);
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#') continue;
        const auto tab = line.find('\t');
        out.push_back({line.substr(tab + 1), std::stoll(line.substr(0, tab))});
    }
    return out;
}

}  // namespace oracle
