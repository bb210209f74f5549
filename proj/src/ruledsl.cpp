#include "spamlab/ruledsl.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <optional>

#include "spamlab/error.hpp"

namespace spamlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

// ---------------------------------------------------------------------------
// Lexer
// ---------------------------------------------------------------------------

enum class Tok { Ident, Counter, Not, And, Or, LParen, RParen, Op, Int, End };

struct Token {
    Tok kind = Tok::End;
    std::size_t pos = 0;
    std::string text;
};

bool is_word_start(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; }
bool is_word_char(char c) { return is_word_start(c) || (c >= '0' && c <= '9'); }
bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::string upper(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
    }
    return out;
}

std::optional<Counter> counter_from(std::string_view name) {
    if (name == "punct_count") return Counter::PunctCount;
    if (name == "word_count") return Counter::WordCount;
    if (name == "char_length") return Counter::CharLength;
    return std::nullopt;
}

[[noreturn]] void syntax_error(std::size_t pos, const std::string& what) {
    throw Error(ErrorCode::SyntaxError, "syntax error at offset " + std::to_string(pos) + ": " + what,
                static_cast<long long>(pos));
}

std::vector<Token> lex(std::string_view src) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < src.size()) {
        const char c = src[i];
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (c == '(' || c == ')') {
            out.push_back({c == '(' ? Tok::LParen : Tok::RParen, start, std::string(1, c)});
            ++i;
        } else if (c == '<' || c == '>') {
            ++i;
            if (i < src.size() && src[i] == '=') ++i;
            out.push_back({Tok::Op, start, std::string(src.substr(start, i - start))});
        } else if (c == '=') {
            if (i + 1 < src.size() && src[i + 1] == '=') {
                i += 2;
                out.push_back({Tok::Op, start, "=="});
            } else {
                syntax_error(start, "expected '==' ");
            }
        } else if (is_digit(c)) {
            while (i < src.size() && is_digit(src[i])) ++i;
            if (i < src.size() && is_word_start(src[i])) syntax_error(i, "unexpected character after number");
            out.push_back({Tok::Int, start, std::string(src.substr(start, i - start))});
        } else if (is_word_start(c)) {
            while (i < src.size() && is_word_char(src[i])) ++i;
            std::string word(src.substr(start, i - start));
            const std::string kw = upper(word);
            if (kw == "NOT") {
                out.push_back({Tok::Not, start, word});
            } else if (kw == "AND") {
                out.push_back({Tok::And, start, word});
            } else if (kw == "OR") {
                out.push_back({Tok::Or, start, word});
            } else if (!is_valid_identifier(word)) {
                syntax_error(start, "feature names must match [a-z][a-z0-9_]*, got \"" + word + "\"");
            } else if (counter_from(word)) {
                out.push_back({Tok::Counter, start, word});
            } else {
                out.push_back({Tok::Ident, start, word});
            }
        } else {
            syntax_error(start, std::string("unexpected character '") + c + "'");
        }
    }
    out.push_back({Tok::End, src.size(), ""});
    return out;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

class Parser {
public:
    explicit Parser(std::vector<Token> tokens) : tokens_(std::move(tokens)) {}

    RuleExprPtr parse() {
        auto expr = parse_or();
        if (peek().kind != Tok::End) syntax_error(peek().pos, "expected OR, AND or end of input");
        return expr;
    }

private:
    const Token& peek() const { return tokens_[pos_]; }
    const Token& take() { return tokens_[pos_++]; }

    RuleExprPtr parse_or() {
        auto left = parse_and();
        while (peek().kind == Tok::Or) {
            take();
            left = make_or(left, parse_and());
        }
        return left;
    }

    RuleExprPtr parse_and() {
        auto left = parse_not();
        while (peek().kind == Tok::And) {
            take();
            left = make_and(left, parse_not());
        }
        return left;
    }

    RuleExprPtr parse_not() {
        if (peek().kind == Tok::Not) {
            take();
            return make_not(parse_not());
        }
        return parse_atom();
    }

    RuleExprPtr parse_atom() {
        const Token& t = take();
        switch (t.kind) {
            case Tok::LParen: {
                auto inner = parse_or();
                if (peek().kind != Tok::RParen) syntax_error(peek().pos, "expected ')'");
                take();
                return inner;
            }
            case Tok::Ident:
                return make_pred(t.text);
            case Tok::Counter: {
                const Counter counter = *counter_from(t.text);
                const Token& op = take();
                if (op.kind != Tok::Op) syntax_error(op.pos, "expected comparison operator after " + t.text);
                const Token& bound = take();
                if (bound.kind != Tok::Int) syntax_error(bound.pos, "expected non-negative integer");
                std::uint64_t value = 0;
                try {
                    value = std::stoull(bound.text);
                } catch (const std::out_of_range&) {
                    syntax_error(bound.pos, "integer out of range");
                }
                Comparison cmp = Comparison::EQ;
                if (op.text == "<") cmp = Comparison::LT;
                else if (op.text == "<=") cmp = Comparison::LE;
                else if (op.text == ">") cmp = Comparison::GT;
                else if (op.text == ">=") cmp = Comparison::GE;
                return make_count(counter, cmp, value);
            }
            default:
                syntax_error(t.pos, "expected feature name, counter comparison, NOT or '('");
        }
    }

    std::vector<Token> tokens_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Printing
// ---------------------------------------------------------------------------

int precedence(const RuleExpr& e) {
    return std::visit(overloaded{
                          [](const rule::Or&) { return 1; },
                          [](const rule::And&) { return 2; },
                          [](const rule::Not&) { return 3; },
                          [](const auto&) { return 4; },
                      },
                      e.node());
}

void print(const RuleExpr& e, std::string& out);

void print_operand(const RuleExpr& e, bool parens, std::string& out) {
    if (parens) out += '(';
    print(e, out);
    if (parens) out += ')';
}

void print(const RuleExpr& e, std::string& out) {
    std::visit(overloaded{
                   [&](const rule::Pred& n) { out += n.feature; },
                   [&](const rule::CountCmp& n) {
                       out += counter_name(n.counter);
                       out += ' ';
                       out += comparison_symbol(n.op);
                       out += ' ';
                       out += std::to_string(n.bound);
                   },
                   [&](const rule::Not& n) {
                       out += "NOT ";
                       print_operand(*n.child, precedence(*n.child) < 3, out);
                   },
                   [&](const rule::And& n) {
                       print_operand(*n.left, precedence(*n.left) < 2, out);
                       out += " AND ";
                       print_operand(*n.right, precedence(*n.right) <= 2, out);
                   },
                   [&](const rule::Or& n) {
                       print_operand(*n.left, precedence(*n.left) < 1, out);
                       out += " OR ";
                       print_operand(*n.right, precedence(*n.right) <= 1, out);
                   },
               },
               e.node());
}

void collect(const RuleExpr& e, std::vector<std::string>& out) {
    std::visit(overloaded{
                   [&](const rule::Pred& n) {
                       if (std::find(out.begin(), out.end(), n.feature) == out.end()) out.push_back(n.feature);
                   },
                   [&](const rule::Not& n) { collect(*n.child, out); },
                   [&](const rule::And& n) {
                       collect(*n.left, out);
                       collect(*n.right, out);
                   },
                   [&](const rule::Or& n) {
                       collect(*n.left, out);
                       collect(*n.right, out);
                   },
                   [](const rule::CountCmp&) {},
               },
               e.node());
}

bool compare(std::size_t value, Comparison op, std::uint64_t bound) {
    switch (op) {
        case Comparison::LT: return value < bound;
        case Comparison::LE: return value <= bound;
        case Comparison::GT: return value > bound;
        case Comparison::GE: return value >= bound;
        case Comparison::EQ: return value == bound;
    }
    return false;
}

std::string_view strip(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

}  // namespace

std::string_view counter_name(Counter c) noexcept {
    switch (c) {
        case Counter::PunctCount: return "punct_count";
        case Counter::WordCount: return "word_count";
        case Counter::CharLength: return "char_length";
    }
    return "";
}

std::string_view comparison_symbol(Comparison op) noexcept {
    switch (op) {
        case Comparison::LT: return "<";
        case Comparison::LE: return "<=";
        case Comparison::GT: return ">";
        case Comparison::GE: return ">=";
        case Comparison::EQ: return "==";
    }
    return "";
}

bool operator==(const RuleExpr& a, const RuleExpr& b) {
    if (a.node_.index() != b.node_.index()) return false;
    return std::visit(overloaded{
                          [&](const rule::Pred& x) { return x.feature == std::get<rule::Pred>(b.node_).feature; },
                          [&](const rule::Not& x) { return *x.child == *std::get<rule::Not>(b.node_).child; },
                          [&](const rule::And& x) {
                              const auto& y = std::get<rule::And>(b.node_);
                              return *x.left == *y.left && *x.right == *y.right;
                          },
                          [&](const rule::Or& x) {
                              const auto& y = std::get<rule::Or>(b.node_);
                              return *x.left == *y.left && *x.right == *y.right;
                          },
                          [&](const rule::CountCmp& x) {
                              const auto& y = std::get<rule::CountCmp>(b.node_);
                              return x.counter == y.counter && x.op == y.op && x.bound == y.bound;
                          },
                      },
                      a.node_);
}

RuleExprPtr make_pred(std::string feature) {
    return std::make_shared<const RuleExpr>(rule::Pred{std::move(feature)});
}
RuleExprPtr make_not(RuleExprPtr child) { return std::make_shared<const RuleExpr>(rule::Not{std::move(child)}); }
RuleExprPtr make_and(RuleExprPtr left, RuleExprPtr right) {
    return std::make_shared<const RuleExpr>(rule::And{std::move(left), std::move(right)});
}
RuleExprPtr make_or(RuleExprPtr left, RuleExprPtr right) {
    return std::make_shared<const RuleExpr>(rule::Or{std::move(left), std::move(right)});
}
RuleExprPtr make_count(Counter counter, Comparison op, std::uint64_t bound) {
    return std::make_shared<const RuleExpr>(rule::CountCmp{counter, op, bound});
}

RuleExprPtr parse_rule(std::string_view source) { return Parser(lex(source)).parse(); }

std::string pretty_print(const RuleExpr& expr) {
    std::string out;
    print(expr, out);
    return out;
}

std::vector<std::string> referenced_features(const RuleExpr& expr) {
    std::vector<std::string> out;
    collect(expr, out);
    return out;
}

nlohmann::json rule_to_json(const RuleExpr& expr) {
    using nlohmann::json;
    return std::visit(overloaded{
                          [](const rule::Pred& n) { return json{{"op", "pred"}, {"feature", n.feature}}; },
                          [](const rule::Not& n) { return json{{"op", "not"}, {"child", rule_to_json(*n.child)}}; },
                          [](const rule::And& n) {
                              return json{{"op", "and"}, {"left", rule_to_json(*n.left)}, {"right", rule_to_json(*n.right)}};
                          },
                          [](const rule::Or& n) {
                              return json{{"op", "or"}, {"left", rule_to_json(*n.left)}, {"right", rule_to_json(*n.right)}};
                          },
                          [](const rule::CountCmp& n) {
                              return json{{"op", "count"},
                                          {"counter", std::string(counter_name(n.counter))},
                                          {"cmp", std::string(comparison_symbol(n.op))},
                                          {"bound", n.bound}};
                          },
                      },
                      expr.node());
}

RuleExprPtr rule_from_json(const nlohmann::json& j) {
    try {
        const std::string op = j.at("op").get<std::string>();
        if (op == "pred") {
            std::string name = j.at("feature").get<std::string>();
            if (!is_valid_identifier(name)) throw Error(ErrorCode::BadRequest, "bad feature name in rule: " + name);
            return make_pred(std::move(name));
        }
        if (op == "not") return make_not(rule_from_json(j.at("child")));
        if (op == "and") return make_and(rule_from_json(j.at("left")), rule_from_json(j.at("right")));
        if (op == "or") return make_or(rule_from_json(j.at("left")), rule_from_json(j.at("right")));
        if (op == "count") {
            auto counter = counter_from(j.at("counter").get<std::string>());
            if (!counter) throw Error(ErrorCode::BadRequest, "unknown counter in rule JSON");
            const std::string cmp = j.at("cmp").get<std::string>();
            for (Comparison c : {Comparison::LT, Comparison::LE, Comparison::GT, Comparison::GE, Comparison::EQ}) {
                if (comparison_symbol(c) == cmp) return make_count(*counter, c, j.at("bound").get<std::uint64_t>());
            }
            throw Error(ErrorCode::BadRequest, "unknown comparison in rule JSON: " + cmp);
        }
        throw Error(ErrorCode::BadRequest, "unknown rule node: " + op);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::BadRequest, std::string("malformed rule JSON: ") + e.what());
    }
}

FeatureLookup::FeatureLookup(const FeatureSet& defs) : defs_(&defs) {
    for (std::size_t i = 0; i < defs.size(); ++i) index_.emplace(defs[i].name(), i);
}

const FeatureDef& FeatureLookup::at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error(ErrorCode::UnknownFeature, "unknown feature \"" + name + "\"");
    return (*defs_)[it->second];
}

bool evaluate(const RuleExpr& expr, std::string_view subject, const FeatureLookup& features) {
    return std::visit(overloaded{
                          [&](const rule::Pred& n) { return eval_feature(features.at(n.feature), subject); },
                          [&](const rule::Not& n) { return !evaluate(*n.child, subject, features); },
                          [&](const rule::And& n) {
                              return evaluate(*n.left, subject, features) && evaluate(*n.right, subject, features);
                          },
                          [&](const rule::Or& n) {
                              return evaluate(*n.left, subject, features) || evaluate(*n.right, subject, features);
                          },
                          [&](const rule::CountCmp& n) {
                              std::size_t value = 0;
                              switch (n.counter) {
                                  case Counter::PunctCount: value = punctuation_count(subject); break;
                                  case Counter::WordCount: value = tokenize(subject).size(); break;
                                  case Counter::CharLength: value = char_length(subject); break;
                              }
                              return compare(value, n.op, n.bound);
                          },
                      },
                      expr.node());
}

bool evaluate(const RuleExpr& expr, std::string_view subject, const FeatureSet& features) {
    return evaluate(expr, subject, FeatureLookup(features));
}

bool operator==(const RuleSet& a, const RuleSet& b) {
    if (a.fallback != b.fallback || a.clauses.size() != b.clauses.size()) return false;
    for (std::size_t i = 0; i < a.clauses.size(); ++i) {
        if (a.clauses[i].verdict != b.clauses[i].verdict || !(*a.clauses[i].condition == *b.clauses[i].condition)) {
            return false;
        }
    }
    return true;
}

Label classify(const RuleSet& rules, std::string_view subject, const FeatureLookup& features) {
    for (const auto& clause : rules.clauses) {
        if (evaluate(*clause.condition, subject, features)) return clause.verdict;
    }
    return rules.fallback;
}

std::vector<Label> apply_ruleset(const RuleSet& rules, const Corpus& corpus, const FeatureSet& features) {
    const FeatureLookup lookup(features);
    // Resolve names before touching data so unknown features fail even on
    // corpora where an earlier clause short-circuits.
    for (const auto& name : referenced_features(rules)) lookup.at(name);
    std::vector<Label> out;
    out.reserve(corpus.size());
    for (const auto& item : corpus.items) out.push_back(classify(rules, item.text, lookup));
    return out;
}

RuleSet parse_ruleset(std::string_view text) {
    RuleSet rules;
    bool have_default = false;
    long long line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = strip(line);
        if (line.empty()) {
            if (end == text.size()) break;
            continue;
        }
        if (have_default) {
            throw Error(ErrorCode::MalformedRuleSet,
                        "line " + std::to_string(line_no) + ": clause after the default line", line_no);
        }
        const std::size_t arrow = line.rfind("=>");
        if (arrow == std::string_view::npos) {
            throw Error(ErrorCode::MalformedRuleSet,
                        "line " + std::to_string(line_no) + ": expected `condition => spam|non-spam`", line_no);
        }
        const std::string_view lhs = strip(line.substr(0, arrow));
        const std::string_view rhs = strip(line.substr(arrow + 2));
        Label verdict;
        try {
            verdict = parse_label(rhs, line_no);
        } catch (const Error&) {
            throw Error(ErrorCode::MalformedRuleSet,
                        "line " + std::to_string(line_no) + ": verdict must be spam or non-spam, got \"" +
                            std::string(rhs) + "\"",
                        line_no);
        }
        if (upper(lhs) == "DEFAULT") {
            rules.fallback = verdict;
            have_default = true;
            continue;
        }
        try {
            rules.clauses.push_back({parse_rule(lhs), verdict});
        } catch (const Error& e) {
            throw Error(ErrorCode::SyntaxError, "line " + std::to_string(line_no) + ": " + e.what(), e.position());
        }
        if (end == text.size()) break;
    }
    if (!have_default) throw Error(ErrorCode::MalformedRuleSet, "ruleset lacks a final `default => ...` line");
    return rules;
}

RuleSet load_ruleset_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open rules file: " + path);
    std::string text{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return parse_ruleset(text);
}

std::string format_ruleset(const RuleSet& rules) {
    std::string out;
    for (const auto& clause : rules.clauses) {
        out += pretty_print(*clause.condition);
        out += " => ";
        out += label_name(clause.verdict);
        out += '\n';
    }
    out += "default => ";
    out += label_name(rules.fallback);
    out += '\n';
    return out;
}

std::vector<std::string> referenced_features(const RuleSet& rules) {
    std::vector<std::string> out;
    for (const auto& clause : rules.clauses) collect(*clause.condition, out);
    return out;
}

}  // namespace spamlab
