#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "json.hpp"

#include "spamlab/corpus.hpp"
#include "spamlab/textfeat.hpp"

namespace spamlab {

enum class Counter { PunctCount, WordCount, CharLength };
enum class Comparison { LT, LE, GT, GE, EQ };

std::string_view counter_name(Counter c) noexcept;
std::string_view comparison_symbol(Comparison op) noexcept;

class RuleExpr;
using RuleExprPtr = std::shared_ptr<const RuleExpr>;

namespace rule {

struct Pred {
    std::string feature;
};
struct Not {
    RuleExprPtr child;
};
struct And {
    RuleExprPtr left, right;
};
struct Or {
    RuleExprPtr left, right;
};
struct CountCmp {
    Counter counter = Counter::PunctCount;
    Comparison op = Comparison::GT;
    std::uint64_t bound = 0;
};

}  // namespace rule

/// Immutable Boolean rule AST. Children are shared, so copies are cheap.
class RuleExpr {
public:
    using Node = std::variant<rule::Pred, rule::Not, rule::And, rule::Or, rule::CountCmp>;

    explicit RuleExpr(Node node) : node_(std::move(node)) {}
    const Node& node() const noexcept { return node_; }

    friend bool operator==(const RuleExpr& a, const RuleExpr& b);

private:
    Node node_;
};

RuleExprPtr make_pred(std::string feature);
RuleExprPtr make_not(RuleExprPtr child);
RuleExprPtr make_and(RuleExprPtr left, RuleExprPtr right);
RuleExprPtr make_or(RuleExprPtr left, RuleExprPtr right);
RuleExprPtr make_count(Counter counter, Comparison op, std::uint64_t bound);

/// Recursive descent over
///   or := and {OR and};  and := not {AND not};  not := NOT not | atom;
///   atom := "(" or ")" | COUNTER OPR INT | IDENT
/// Throws Error(SyntaxError) whose position is the 0-based offset of the
/// offending token (the input length when input ended early).
RuleExprPtr parse_rule(std::string_view source);

/// Canonical text with the minimum parentheses needed to re-parse to the same tree.
std::string pretty_print(const RuleExpr& expr);

/// Feature names referenced by Pred nodes, in first-appearance order.
std::vector<std::string> referenced_features(const RuleExpr& expr);

nlohmann::json rule_to_json(const RuleExpr& expr);
RuleExprPtr rule_from_json(const nlohmann::json& j);

/// Name-indexed view over a feature set for repeated rule evaluation.
class FeatureLookup {
public:
    explicit FeatureLookup(const FeatureSet& defs);
    /// Throws Error(UnknownFeature).
    const FeatureDef& at(const std::string& name) const;
    bool contains(const std::string& name) const noexcept { return index_.count(name) != 0; }

private:
    const FeatureSet* defs_;
    std::unordered_map<std::string, std::size_t> index_;
};

bool evaluate(const RuleExpr& expr, std::string_view subject, const FeatureLookup& features);
bool evaluate(const RuleExpr& expr, std::string_view subject, const FeatureSet& features);

struct RuleClause {
    RuleExprPtr condition;
    Label verdict = Label::Spam;
};

struct RuleSet {
    std::vector<RuleClause> clauses;
    Label fallback = Label::NonSpam;
};

bool operator==(const RuleSet& a, const RuleSet& b);

/// First clause whose condition holds decides; otherwise the default.
Label classify(const RuleSet& rules, std::string_view subject, const FeatureLookup& features);
std::vector<Label> apply_ruleset(const RuleSet& rules, const Corpus& corpus, const FeatureSet& features);

/// Line format: `condition => spam|non-spam`, closed by `default => label`.
/// `#` starts a comment. Errors report the 1-based line number.
RuleSet parse_ruleset(std::string_view text);
RuleSet load_ruleset_file(const std::string& path);
std::string format_ruleset(const RuleSet& rules);

/// Every feature name any clause refers to.
std::vector<std::string> referenced_features(const RuleSet& rules);

}  // namespace spamlab
