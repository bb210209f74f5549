#include "spamlab/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>

#include <Eigen/Dense>

#include "spamlab/error.hpp"
#include "spamlab/rng.hpp"

namespace spamlab {

namespace {

constexpr int kSpam = static_cast<int>(Label::Spam);
constexpr int kNonSpam = static_cast<int>(Label::NonSpam);

void check_dimension(std::size_t expected, std::size_t got) {
    if (expected != got) {
        throw Error(ErrorCode::DimensionMismatch, "feature vector has " + std::to_string(got) +
                                                      " entries, model expects " + std::to_string(expected));
    }
}

double log_add_exp(double a, double b) {
    const double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// log(1 + e^z) without overflow.
double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

}  // namespace

void check_threshold(double threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
        throw Error(ErrorCode::BadHyperparameter, "threshold must lie strictly between 0 and 1");
    }
}

void require_both_classes(const FeatureMatrix& matrix) {
    if (matrix.num_rows() == 0) throw Error(ErrorCode::EmptyInput, "training matrix has no rows");
    const auto spam = std::count(matrix.labels.begin(), matrix.labels.end(), Label::Spam);
    if (spam == 0 || static_cast<std::size_t>(spam) == matrix.labels.size()) {
        throw Error(ErrorCode::SingleClassCorpus, "training data contains only one class");
    }
}

// ---------------------------------------------------------------------------
// Naive Bayes
// ---------------------------------------------------------------------------

NaiveBayesModel fit_naive_bayes(const FeatureMatrix& matrix, double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) throw Error(ErrorCode::BadHyperparameter, "alpha must be positive");
    require_both_classes(matrix);
    const std::size_t p = matrix.num_features();
    if (p == 0) throw Error(ErrorCode::ZeroFeatures, "naive Bayes needs at least one feature");

    std::array<double, 2> class_n{};
    std::array<std::vector<double>, 2> present{std::vector<double>(p, 0.0), std::vector<double>(p, 0.0)};
    for (std::size_t i = 0; i < matrix.num_rows(); ++i) {
        const int c = static_cast<int>(matrix.labels[i]);
        class_n[c] += 1.0;
        for (std::size_t j = 0; j < p; ++j) present[c][j] += matrix.rows[i][j];
    }

    NaiveBayesModel model;
    model.alpha = alpha;
    const double n = static_cast<double>(matrix.num_rows());
    for (int c : {kNonSpam, kSpam}) {
        model.log_prior[c] = std::log(class_n[c] / n);
        const double log_denom = std::log(class_n[c] + 2.0 * alpha);
        model.log_present[c].resize(p);
        model.log_absent[c].resize(p);
        for (std::size_t j = 0; j < p; ++j) {
            model.log_present[c][j] = std::log(present[c][j] + alpha) - log_denom;
            model.log_absent[c][j] = std::log(class_n[c] - present[c][j] + alpha) - log_denom;
        }
    }
    return model;
}

double posterior_spam(const NaiveBayesModel& model, FeatureView x) {
    check_dimension(model.num_features(), x.size());
    std::array<double, 2> joint = model.log_prior;
    for (int c : {kNonSpam, kSpam}) {
        for (std::size_t j = 0; j < x.size(); ++j) {
            joint[c] += x[j] ? model.log_present[c][j] : model.log_absent[c][j];
        }
    }
    return std::exp(joint[kSpam] - log_add_exp(joint[kSpam], joint[kNonSpam]));
}

Prediction predict(const NaiveBayesModel& model, FeatureView x) {
    const double score = posterior_spam(model, x);
    return {label_for(score, model.threshold), score};
}

// ---------------------------------------------------------------------------
// Logistic regression
// ---------------------------------------------------------------------------

double sigmoid(double z) noexcept {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

LogisticObjective logistic_objective(const FeatureMatrix& matrix, std::span<const double> weights, double intercept,
                                     double lambda) {
    const std::size_t p = matrix.num_features();
    check_dimension(p, weights.size());
    LogisticObjective out;
    out.grad_weights.assign(p, 0.0);
    for (std::size_t i = 0; i < matrix.num_rows(); ++i) {
        const auto& row = matrix.rows[i];
        double z = intercept;
        for (std::size_t j = 0; j < p; ++j) {
            if (row[j]) z += weights[j];
        }
        const double y = matrix.labels[i] == Label::Spam ? 1.0 : 0.0;
        out.value += softplus(z) - y * z;
        const double residual = sigmoid(z) - y;
        out.grad_intercept += residual;
        for (std::size_t j = 0; j < p; ++j) {
            if (row[j]) out.grad_weights[j] += residual;
        }
    }
    for (std::size_t j = 0; j < p; ++j) {
        out.value += 0.5 * lambda * weights[j] * weights[j];
        out.grad_weights[j] += lambda * weights[j];
    }
    return out;
}

namespace {

class LogisticProblem {
public:
    LogisticProblem(const FeatureMatrix& matrix, double lambda)
        : n_(static_cast<Eigen::Index>(matrix.num_rows())),
          p_(static_cast<Eigen::Index>(matrix.num_features())),
          lambda_(lambda),
          design_(n_, p_ + 1),
          target_(n_) {
        for (Eigen::Index i = 0; i < n_; ++i) {
            const auto& row = matrix.rows[static_cast<std::size_t>(i)];
            for (Eigen::Index j = 0; j < p_; ++j) design_(i, j) = row[static_cast<std::size_t>(j)];
            design_(i, p_) = 1.0;
            target_(i) = matrix.labels[static_cast<std::size_t>(i)] == Label::Spam ? 1.0 : 0.0;
        }
    }

    Eigen::Index dim() const { return p_ + 1; }

    // Line-search objective, accumulated in long double.
    long double value(const Eigen::VectorXd& theta) const {
        long double v = 0.0L;
        for (Eigen::Index i = 0; i < n_; ++i) {
            long double z = theta(p_);
            for (Eigen::Index j = 0; j < p_; ++j) {
                if (design_(i, j) != 0.0) z += theta(j);
            }
            const long double sp = std::max(z, 0.0L) + std::log1p(std::exp(-std::abs(z)));
            v += sp - target_(i) * z;
        }
        long double penalty = 0.0L;
        for (Eigen::Index j = 0; j < p_; ++j) penalty += static_cast<long double>(theta(j)) * theta(j);
        return v + 0.5L * lambda_ * penalty;
    }

    void derivatives(const Eigen::VectorXd& theta, Eigen::VectorXd& grad, Eigen::MatrixXd& hess) const {
        const Eigen::VectorXd z = design_ * theta;
        Eigen::VectorXd resid(n_);
        Eigen::VectorXd curv(n_);
        for (Eigen::Index i = 0; i < n_; ++i) {
            const double prob = sigmoid(z(i));
            resid(i) = prob - target_(i);
            curv(i) = prob * (1.0 - prob);
        }
        grad = design_.transpose() * resid;
        grad.head(p_) += lambda_ * theta.head(p_);
        hess = design_.transpose() * curv.asDiagonal() * design_;
        hess.diagonal().head(p_).array() += lambda_;
    }

private:
    Eigen::Index n_;
    Eigen::Index p_;
    double lambda_;
    Eigen::MatrixXd design_;
    Eigen::VectorXd target_;
};

// Armijo backtracking along `dir`; returns the accepted step or 0.
double backtrack(const LogisticProblem& problem, const Eigen::VectorXd& theta, const Eigen::VectorXd& dir,
                 double slope, long double current, long double& accepted_value) {
    double step = 1.0;
    for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
        const long double candidate = problem.value(theta + step * dir);
        if (std::isfinite(candidate) && candidate <= current + 1e-4 * step * slope) {
            accepted_value = candidate;
            return step;
        }
    }
    return 0.0;
}

}  // namespace

LogisticModel fit_logistic(const FeatureMatrix& matrix, const LogisticConfig& config) {
    if (!(config.lambda >= 0.0) || !std::isfinite(config.lambda)) {
        throw Error(ErrorCode::BadHyperparameter, "lambda must be a non-negative number");
    }
    if (config.max_iter < 1) throw Error(ErrorCode::BadHyperparameter, "max_iter must be positive");
    if (!(config.tol > 0.0)) throw Error(ErrorCode::BadHyperparameter, "tol must be positive");
    require_both_classes(matrix);
    if (matrix.num_features() == 0) throw Error(ErrorCode::ZeroFeatures, "logistic regression needs at least one feature");

    const LogisticProblem problem(matrix, config.lambda);
    const auto p = static_cast<Eigen::Index>(matrix.num_features());
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(problem.dim());
    Eigen::VectorXd grad;
    Eigen::MatrixXd hess;

    LogisticModel model;
    model.lambda = config.lambda;
    long double current = problem.value(theta);
    model.objective_trace.push_back(static_cast<double>(current));

    for (int iter = 0; iter < config.max_iter; ++iter) {
        problem.derivatives(theta, grad, hess);
        if (grad.lpNorm<Eigen::Infinity>() < config.tol) {
            model.converged = true;
            break;
        }
        model.iterations = iter + 1;

        Eigen::VectorXd dir = hess.ldlt().solve(-grad);
        double slope = grad.dot(dir);
        if (!dir.allFinite() || !(slope < 0.0)) {
            dir = -grad;
            slope = -grad.squaredNorm();
        }
        long double next = current;
        double step = backtrack(problem, theta, dir, slope, current, next);
        if (step == 0.0 && slope != -grad.squaredNorm()) {
            dir = -grad;
            step = backtrack(problem, theta, dir, -grad.squaredNorm(), current, next);
        }
        if (step == 0.0) {
            // No representable decrease left; the gradient test decides.
            model.objective_trace.push_back(static_cast<double>(current));
            model.converged = grad.lpNorm<Eigen::Infinity>() < config.tol;
            break;
        }
        theta += step * dir;
        current = next;
        model.objective_trace.push_back(static_cast<double>(current));
    }
    if (!model.converged) {
        problem.derivatives(theta, grad, hess);
        model.converged = grad.lpNorm<Eigen::Infinity>() < config.tol;
    }
    if (!theta.allFinite()) throw Error(ErrorCode::Internal, "logistic fit produced non-finite coefficients");

    model.weights.assign(theta.data(), theta.data() + p);
    model.intercept = theta(p);
    return model;
}

Prediction predict(const LogisticModel& model, FeatureView x) {
    check_dimension(model.weights.size(), x.size());
    double z = model.intercept;
    for (std::size_t j = 0; j < x.size(); ++j) {
        if (x[j]) z += model.weights[j];
    }
    const double score = sigmoid(z);
    return {label_for(score, model.threshold), score};
}

// ---------------------------------------------------------------------------
// Decision trees
// ---------------------------------------------------------------------------

std::size_t DecisionTree::depth() const {
    std::function<std::size_t(std::size_t)> walk = [&](std::size_t i) -> std::size_t {
        const auto& n = nodes[i];
        return n.is_leaf() ? 0 : 1 + std::max(walk(n.if_false), walk(n.if_true));
    };
    return nodes.empty() ? 0 : walk(0);
}

std::size_t DecisionTree::leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

std::size_t DecisionTree::route(FeatureView x) const {
    check_dimension(num_features, x.size());
    std::size_t i = 0;
    while (!nodes[i].is_leaf()) {
        i = x[static_cast<std::size_t>(nodes[i].feature)] ? nodes[i].if_true : nodes[i].if_false;
    }
    return i;
}

namespace {

Label majority(std::size_t spam, std::size_t non_spam) { return spam > non_spam ? Label::Spam : Label::NonSpam; }

double entropy_term(double count, double total) { return count > 0 ? -count * std::log2(count / total) : 0.0; }

// Weighted child impurity, scaled by node size, for entropy.
double weighted_entropy(double s_t, double n_t, double s_f, double n_f) {
    return entropy_term(s_t, n_t) + entropy_term(n_t - s_t, n_t) + entropy_term(s_f, n_f) + entropy_term(n_f - s_f, n_f);
}

// Gini purity score sum_child sum_class n_ck^2 / n_c, as an exact fraction.
// Maximizing it maximizes the Gini decrease.
struct Purity {
    __int128 num;
    __int128 den;
};

Purity gini_purity(std::int64_t s_t, std::int64_t n_t, std::int64_t s_f, std::int64_t n_f) {
    const __int128 a = static_cast<__int128>(s_t) * s_t + static_cast<__int128>(n_t - s_t) * (n_t - s_t);
    const __int128 b = static_cast<__int128>(s_f) * s_f + static_cast<__int128>(n_f - s_f) * (n_f - s_f);
    return {a * n_f + b * n_t, static_cast<__int128>(n_t) * n_f};
}

bool greater(const Purity& x, const Purity& y) { return x.num * y.den > y.num * x.den; }

class TreeBuilder {
public:
    TreeBuilder(const FeatureMatrix& matrix, const TreeConfig& config, const FeatureSampler& sampler)
        : matrix_(matrix), config_(config), sampler_(sampler) {}

    DecisionTree build(std::span<const std::size_t> rows) {
        tree_.num_features = matrix_.num_features();
        std::vector<std::size_t> r(rows.begin(), rows.end());
        grow(r, 0);
        return std::move(tree_);
    }

private:
    std::size_t grow(const std::vector<std::size_t>& rows, int depth) {
        std::size_t spam = 0;
        for (std::size_t r : rows) spam += matrix_.labels[r] == Label::Spam;
        const std::size_t n = rows.size();
        const std::size_t index = tree_.nodes.size();
        tree_.nodes.push_back(TreeNode{-1, 0, 0, majority(spam, n - spam), spam, n - spam});

        if (depth >= config_.max_depth || spam == 0 || spam == n || n < 2 * config_.min_leaf) return index;
        const int feature = best_split(rows, spam);
        if (feature < 0) return index;

        std::vector<std::size_t> false_rows;
        std::vector<std::size_t> true_rows;
        for (std::size_t r : rows) {
            (matrix_.rows[r][static_cast<std::size_t>(feature)] ? true_rows : false_rows).push_back(r);
        }
        const std::size_t f = grow(false_rows, depth + 1);
        const std::size_t t = grow(true_rows, depth + 1);
        tree_.nodes[index].feature = feature;
        tree_.nodes[index].if_false = f;
        tree_.nodes[index].if_true = t;
        return index;
    }

    std::vector<std::size_t> candidates() const {
        const std::size_t p = matrix_.num_features();
        if (!sampler_) {
            std::vector<std::size_t> all(p);
            std::iota(all.begin(), all.end(), 0);
            return all;
        }
        auto chosen = sampler_(p);
        std::sort(chosen.begin(), chosen.end());
        return chosen;
    }

    int best_split(const std::vector<std::size_t>& rows, std::size_t spam) const {
        const auto n = static_cast<std::int64_t>(rows.size());
        const auto s = static_cast<std::int64_t>(spam);
        int best = -1;
        // Unsplit node purity: the bar a split must strictly beat.
        Purity best_gini{static_cast<__int128>(s) * s + static_cast<__int128>(n - s) * (n - s), n};
        double best_entropy = entropy_term(static_cast<double>(s), static_cast<double>(n)) +
                              entropy_term(static_cast<double>(n - s), static_cast<double>(n));
        const double entropy_eps = 1e-9 * static_cast<double>(n);

        for (std::size_t j : candidates()) {
            std::int64_t n_t = 0;
            std::int64_t s_t = 0;
            for (std::size_t r : rows) {
                if (matrix_.rows[r][j]) {
                    ++n_t;
                    s_t += matrix_.labels[r] == Label::Spam;
                }
            }
            const std::int64_t n_f = n - n_t;
            const auto min_leaf = static_cast<std::int64_t>(config_.min_leaf);
            if (n_t < min_leaf || n_f < min_leaf || n_t == 0 || n_f == 0) continue;
            if (config_.impurity == Impurity::Gini) {
                const Purity candidate = gini_purity(s_t, n_t, s - s_t, n_f);
                if (greater(candidate, best_gini)) {
                    best_gini = candidate;
                    best = static_cast<int>(j);
                }
            } else {
                const double candidate = weighted_entropy(static_cast<double>(s_t), static_cast<double>(n_t),
                                                          static_cast<double>(s - s_t), static_cast<double>(n_f));
                if (candidate < best_entropy - entropy_eps) {
                    best_entropy = candidate;
                    best = static_cast<int>(j);
                }
            }
        }
        return best;
    }

    const FeatureMatrix& matrix_;
    const TreeConfig& config_;
    const FeatureSampler& sampler_;
    DecisionTree tree_;
};

void check_tree_config(const TreeConfig& config) {
    if (config.max_depth < 0) throw Error(ErrorCode::BadHyperparameter, "max_depth must be non-negative");
    if (config.min_leaf < 1) throw Error(ErrorCode::BadHyperparameter, "min_leaf must be at least 1");
}

}  // namespace

DecisionTree induce_tree(const FeatureMatrix& matrix, const TreeConfig& config) {
    std::vector<std::size_t> rows(matrix.num_rows());
    std::iota(rows.begin(), rows.end(), 0);
    return induce_tree(matrix, rows, config, {});
}

DecisionTree induce_tree(const FeatureMatrix& matrix, std::span<const std::size_t> rows, const TreeConfig& config,
                         const FeatureSampler& sampler) {
    check_tree_config(config);
    if (rows.empty()) throw Error(ErrorCode::EmptyInput, "cannot induce a tree from zero rows");
    return TreeBuilder(matrix, config, sampler).build(rows);
}

namespace {

std::size_t build_manual(const nlohmann::json& node, const std::vector<std::string>& names, DecisionTree& tree,
                         int depth) {
    if (depth > 64) throw Error(ErrorCode::MalformedTree, "manual tree is nested too deeply");
    if (!node.is_object()) throw Error(ErrorCode::MalformedTree, "tree node must be a JSON object");
    const bool is_leaf = node.contains("leaf");
    const bool is_split = node.contains("split");
    if (is_leaf == is_split) throw Error(ErrorCode::MalformedTree, "tree node needs exactly one of \"leaf\" or \"split\"");

    const std::size_t index = tree.nodes.size();
    tree.nodes.emplace_back();
    if (auto counts = node.find("counts"); counts != node.end()) {
        if (!counts->is_array() || counts->size() != 2 || !(*counts)[0].is_number_unsigned() ||
            !(*counts)[1].is_number_unsigned()) {
            throw Error(ErrorCode::MalformedTree, "node counts must be [spam, non_spam]");
        }
        tree.nodes[index].spam_count = (*counts)[0].get<std::size_t>();
        tree.nodes[index].non_spam_count = (*counts)[1].get<std::size_t>();
    }
    if (is_leaf) {
        if (!node["leaf"].is_string()) throw Error(ErrorCode::MalformedTree, "leaf verdict must be a string");
        try {
            tree.nodes[index].verdict = parse_label(node["leaf"].get<std::string>());
        } catch (const Error& e) {
            throw Error(ErrorCode::MalformedTree, std::string("leaf verdict: ") + e.what());
        }
        return index;
    }
    if (!node["split"].is_string()) throw Error(ErrorCode::MalformedTree, "split must name a feature");
    const std::string name = node["split"].get<std::string>();
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end()) throw Error(ErrorCode::UnknownFeature, "unknown feature \"" + name + "\" in tree");
    if (!node.contains("if_false") || !node.contains("if_true")) {
        throw Error(ErrorCode::MalformedTree, "split on \"" + name + "\" needs both if_false and if_true");
    }
    const std::size_t f = build_manual(node["if_false"], names, tree, depth + 1);
    const std::size_t t = build_manual(node["if_true"], names, tree, depth + 1);
    auto& n = tree.nodes[index];
    n.feature = static_cast<int>(it - names.begin());
    n.if_false = f;
    n.if_true = t;
    n.verdict = majority(n.spam_count, n.non_spam_count);
    return index;
}

void collect_manual(const nlohmann::json& node, std::vector<std::string>& out) {
    if (!node.is_object()) return;
    if (auto s = node.find("split"); s != node.end() && s->is_string()) {
        const auto name = s->get<std::string>();
        if (std::find(out.begin(), out.end(), name) == out.end()) out.push_back(name);
    }
    for (const char* key : {"if_false", "if_true"}) {
        if (auto child = node.find(key); child != node.end()) collect_manual(*child, out);
    }
}

nlohmann::json tree_node_json(const DecisionTree& tree, std::size_t i, const std::vector<std::string>& names) {
    const auto& n = tree.nodes[i];
    nlohmann::json j;
    if (n.is_leaf()) {
        j["leaf"] = std::string(label_name(n.verdict));
    } else {
        j["split"] = names.at(static_cast<std::size_t>(n.feature));
    }
    j["counts"] = {n.spam_count, n.non_spam_count};
    if (!n.is_leaf()) {
        j["if_false"] = tree_node_json(tree, n.if_false, names);
        j["if_true"] = tree_node_json(tree, n.if_true, names);
    }
    return j;
}

}  // namespace

DecisionTree manual_tree(const nlohmann::json& description, const std::vector<std::string>& feature_names) {
    DecisionTree tree;
    tree.num_features = feature_names.size();
    build_manual(description, feature_names, tree, 0);
    return tree;
}

std::vector<std::string> manual_tree_features(const nlohmann::json& description) {
    std::vector<std::string> out;
    collect_manual(description, out);
    return out;
}

void fill_counts(DecisionTree& tree, const FeatureMatrix& matrix) {
    check_dimension(tree.num_features, matrix.num_features());
    for (auto& n : tree.nodes) n.spam_count = n.non_spam_count = 0;
    for (std::size_t r = 0; r < matrix.num_rows(); ++r) {
        std::size_t i = 0;
        while (true) {
            auto& n = tree.nodes[i];
            (matrix.labels[r] == Label::Spam ? n.spam_count : n.non_spam_count) += 1;
            if (n.is_leaf()) break;
            i = matrix.rows[r][static_cast<std::size_t>(n.feature)] ? n.if_true : n.if_false;
        }
    }
}

Prediction predict(const DecisionTree& tree, FeatureView x) {
    const auto& leaf = tree.nodes[tree.route(x)];
    const std::size_t total = leaf.spam_count + leaf.non_spam_count;
    const double score = total == 0 ? 0.5 : static_cast<double>(leaf.spam_count) / static_cast<double>(total);
    return {leaf.verdict, score};
}

// ---------------------------------------------------------------------------
// Forest
// ---------------------------------------------------------------------------

std::size_t default_mtry(std::size_t num_features) noexcept {
    if (num_features == 0) return 0;
    auto m = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(num_features))));
    while (m * m < num_features) ++m;
    while (m > 1 && (m - 1) * (m - 1) >= num_features) --m;
    return m;
}

namespace {

DecisionTree grow_forest_tree(const FeatureMatrix& matrix, const ForestConfig& config, std::size_t mtry,
                              std::size_t tree_index) {
    SplitMix64 rng(derive_seed(config.seed, tree_index + 1));
    const std::size_t n = matrix.num_rows();
    std::vector<std::size_t> rows(n);
    if (config.bootstrap) {
        for (auto& r : rows) r = static_cast<std::size_t>(rng.below(n));
        std::sort(rows.begin(), rows.end());
    } else {
        std::iota(rows.begin(), rows.end(), 0);
    }
    FeatureSampler sampler = [&rng, mtry](std::size_t p) {
        std::vector<std::size_t> pool(p);
        std::iota(pool.begin(), pool.end(), 0);
        const std::size_t take = std::min(mtry, p);
        for (std::size_t i = 0; i < take; ++i) {
            const auto j = i + static_cast<std::size_t>(rng.below(p - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(take);
        return pool;
    };
    return induce_tree(matrix, rows, config.tree, sampler);
}

}  // namespace

ForestModel fit_forest(const FeatureMatrix& matrix, const ForestConfig& config) {
    check_tree_config(config.tree);
    if (config.n_trees == 0) throw Error(ErrorCode::BadHyperparameter, "n_trees must be positive");
    if (matrix.num_rows() == 0) throw Error(ErrorCode::EmptyInput, "cannot fit a forest on zero rows");
    const std::size_t p = matrix.num_features();
    const std::size_t mtry = config.mtry == 0 ? default_mtry(p) : config.mtry;
    if (p > 0 && mtry > p) throw Error(ErrorCode::BadHyperparameter, "mtry exceeds the number of features");

    ForestModel forest;
    forest.mtry = mtry;
    forest.bootstrap = config.bootstrap;
    forest.seed = config.seed;
    forest.trees.resize(config.n_trees);

    const std::size_t workers =
        std::min<std::size_t>(config.n_trees, std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::exception_ptr> failures(workers);
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t t = w; t < config.n_trees; t += workers) {
                        forest.trees[t] = grow_forest_tree(matrix, config, mtry, t);
                    }
                } catch (...) {
                    failures[w] = std::current_exception();
                }
            });
        }
    }
    for (const auto& f : failures) {
        if (f) std::rethrow_exception(f);
    }
    return forest;
}

Prediction predict(const ForestModel& forest, FeatureView x) {
    std::size_t spam_votes = 0;
    for (const auto& tree : forest.trees) spam_votes += predict(tree, x).label == Label::Spam;
    const std::size_t total = forest.trees.size();
    const double fraction = total == 0 ? 0.0 : static_cast<double>(spam_votes) / static_cast<double>(total);
    return {2 * spam_votes > total ? Label::Spam : Label::NonSpam, fraction};
}

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

nlohmann::json to_json(const NaiveBayesModel& model) {
    return {
        {"alpha", model.alpha},
        {"threshold", model.threshold},
        {"log_prior", {{"spam", model.log_prior[kSpam]}, {"non_spam", model.log_prior[kNonSpam]}}},
        {"log_present", {{"spam", model.log_present[kSpam]}, {"non_spam", model.log_present[kNonSpam]}}},
        {"log_absent", {{"spam", model.log_absent[kSpam]}, {"non_spam", model.log_absent[kNonSpam]}}},
    };
}

nlohmann::json to_json(const LogisticModel& model) {
    return {
        {"weights", model.weights},   {"intercept", model.intercept},   {"lambda", model.lambda},
        {"converged", model.converged}, {"iterations", model.iterations}, {"threshold", model.threshold},
    };
}

nlohmann::json to_json(const DecisionTree& tree, const std::vector<std::string>& feature_names) {
    return tree_node_json(tree, 0, feature_names);
}

nlohmann::json to_json(const ForestModel& forest, const std::vector<std::string>& feature_names) {
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& t : forest.trees) trees.push_back(to_json(t, feature_names));
    return {{"n_trees", forest.trees.size()},
            {"mtry", forest.mtry},
            {"bootstrap", forest.bootstrap},
            {"seed", forest.seed},
            {"trees", std::move(trees)}};
}

namespace {

[[noreturn]] void bad_model(const std::string& what) { throw Error(ErrorCode::BadModelFile, "bad model payload: " + what); }

std::vector<double> sized(const nlohmann::json& j, std::size_t n, const char* what) {
    auto v = j.get<std::vector<double>>();
    if (v.size() != n) bad_model(std::string(what) + " has the wrong length");
    return v;
}

}  // namespace

NaiveBayesModel naive_bayes_from_json(const nlohmann::json& j, std::size_t num_features) {
    try {
        NaiveBayesModel m;
        m.alpha = j.at("alpha").get<double>();
        m.threshold = j.value("threshold", kDefaultThreshold);
        m.log_prior[kSpam] = j.at("log_prior").at("spam").get<double>();
        m.log_prior[kNonSpam] = j.at("log_prior").at("non_spam").get<double>();
        for (auto [c, key] : {std::pair{kSpam, "spam"}, std::pair{kNonSpam, "non_spam"}}) {
            m.log_present[c] = sized(j.at("log_present").at(key), num_features, "log_present");
            m.log_absent[c] = sized(j.at("log_absent").at(key), num_features, "log_absent");
        }
        return m;
    } catch (const nlohmann::json::exception& e) {
        bad_model(e.what());
    }
}

LogisticModel logistic_from_json(const nlohmann::json& j, std::size_t num_features) {
    try {
        LogisticModel m;
        m.weights = sized(j.at("weights"), num_features, "weights");
        m.intercept = j.at("intercept").get<double>();
        m.lambda = j.value("lambda", 1e-4);
        m.converged = j.value("converged", true);
        m.iterations = j.value("iterations", 0);
        m.threshold = j.value("threshold", kDefaultThreshold);
        return m;
    } catch (const nlohmann::json::exception& e) {
        bad_model(e.what());
    }
}

DecisionTree tree_from_json(const nlohmann::json& j, const std::vector<std::string>& feature_names) {
    return manual_tree(j, feature_names);
}

ForestModel forest_from_json(const nlohmann::json& j, const std::vector<std::string>& feature_names) {
    try {
        ForestModel f;
        f.mtry = j.at("mtry").get<std::size_t>();
        f.bootstrap = j.at("bootstrap").get<bool>();
        f.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& t : j.at("trees")) f.trees.push_back(tree_from_json(t, feature_names));
        if (f.trees.empty()) bad_model("forest has no trees");
        return f;
    } catch (const nlohmann::json::exception& e) {
        bad_model(e.what());
    }
}

}  // namespace spamlab
