#include "spamlab/model.hpp"

#include <algorithm>
#include <fstream>

#include "spamlab/error.hpp"

namespace spamlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

[[noreturn]] void bad_param(const std::string& what) { throw Error(ErrorCode::BadHyperparameter, what); }

template <class T>
T param(const nlohmann::json& params, const char* key, T fallback) {
    auto it = params.find(key);
    if (it == params.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        bad_param(std::string("hyperparameter \"") + key + "\" has the wrong type");
    }
}

std::size_t count_param(const nlohmann::json& params, const char* key, std::size_t fallback) {
    auto it = params.find(key);
    if (it == params.end() || it->is_null()) return fallback;
    if (!it->is_number_integer() || it->get<long long>() < 0) {
        bad_param(std::string("hyperparameter \"") + key + "\" must be a non-negative integer");
    }
    return it->get<std::size_t>();
}

nlohmann::json ruleset_json(const RuleSet& rules) {
    nlohmann::json clauses = nlohmann::json::array();
    for (const auto& c : rules.clauses) {
        clauses.push_back({{"condition", pretty_print(*c.condition)},
                           {"ast", rule_to_json(*c.condition)},
                           {"verdict", std::string(label_name(c.verdict))}});
    }
    return {{"source", format_ruleset(rules)},
            {"clauses", std::move(clauses)},
            {"default", std::string(label_name(rules.fallback))}};
}

}  // namespace

std::string_view model_kind_name(ModelKind kind) noexcept {
    switch (kind) {
        case ModelKind::NaiveBayes: return "nb";
        case ModelKind::Logistic: return "logreg";
        case ModelKind::Tree: return "tree";
        case ModelKind::ManualTree: return "manual_tree";
        case ModelKind::Forest: return "forest";
        case ModelKind::RuleSet: return "ruleset";
    }
    return "";
}

ModelKind parse_model_kind(std::string_view name) {
    for (ModelKind k : {ModelKind::NaiveBayes, ModelKind::Logistic, ModelKind::Tree, ModelKind::ManualTree,
                        ModelKind::Forest, ModelKind::RuleSet}) {
        if (model_kind_name(k) == name) return k;
    }
    bad_param("unknown model kind \"" + std::string(name) + "\"");
}

TrainConfig train_config_from_json(ModelKind kind, const nlohmann::json& params) {
    if (!params.is_object()) bad_param("hyperparameters must be a JSON object");
    TrainConfig c;
    c.kind = kind;
    c.threshold = param(params, "threshold", c.threshold);
    check_threshold(c.threshold);
    c.alpha = param(params, "alpha", c.alpha);
    c.logistic.lambda = param(params, "lambda", c.logistic.lambda);
    c.logistic.max_iter = param(params, "max_iter", c.logistic.max_iter);
    c.logistic.tol = param(params, "tol", c.logistic.tol);
    c.tree.max_depth = param(params, "max_depth", c.tree.max_depth);
    c.tree.min_leaf = count_param(params, "min_leaf", c.tree.min_leaf);
    const std::string impurity = param<std::string>(params, "impurity", "gini");
    if (impurity == "gini") {
        c.tree.impurity = Impurity::Gini;
    } else if (impurity == "entropy") {
        c.tree.impurity = Impurity::Entropy;
    } else {
        bad_param("impurity must be \"gini\" or \"entropy\"");
    }
    c.forest.n_trees = count_param(params, "n_trees", c.forest.n_trees);
    c.forest.mtry = count_param(params, "mtry", c.forest.mtry);
    c.forest.bootstrap = param(params, "bootstrap", c.forest.bootstrap);
    c.forest.seed = param<std::uint64_t>(params, "seed", 0);
    c.forest.tree = c.tree;
    if (kind == ModelKind::ManualTree) {
        auto it = params.find("tree");
        if (it == params.end()) bad_param("manual_tree needs a \"tree\" description");
        c.manual_tree = *it;
    }
    if (kind == ModelKind::RuleSet) {
        auto it = params.find("rules");
        if (it == params.end() || !it->is_string()) bad_param("ruleset needs a \"rules\" source string");
        c.rules = parse_ruleset(it->get<std::string>());
    }
    return c;
}

TrainedModel::TrainedModel(ModelKind kind, FeatureSet features, Payload payload)
    : kind_(kind), features_(std::move(features)), payload_(std::move(payload)) {
    check_unique_names(features_);
}

std::vector<std::string> TrainedModel::feature_names() const {
    std::vector<std::string> names;
    names.reserve(features_.size());
    for (const auto& f : features_) names.push_back(f.name());
    return names;
}

Prediction TrainedModel::predict(FeatureView x) const {
    return std::visit(overloaded{
                          [&](const RuleSet&) -> Prediction {
                              throw Error(ErrorCode::BadRequest, "rulesets score raw subject text, not feature vectors");
                          },
                          [&](const auto& m) { return spamlab::predict(m, x); },
                      },
                      payload_);
}

Prediction TrainedModel::predict_subject(std::string_view subject) const {
    if (const auto* rules = std::get_if<RuleSet>(&payload_)) {
        const Label label = classify(*rules, subject, FeatureLookup(features_));
        return {label, label == Label::Spam ? 1.0 : 0.0};
    }
    const FeatureVector x = featurize_text(features_, subject);
    return predict(x);
}

std::vector<Label> TrainedModel::predict_labels(const Corpus& corpus) const {
    std::vector<Label> out;
    out.reserve(corpus.size());
    if (const auto* rules = std::get_if<RuleSet>(&payload_)) return apply_ruleset(*rules, corpus, features_);
    for (const auto& item : corpus.items) out.push_back(predict_subject(item.text).label);
    return out;
}

nlohmann::json TrainedModel::payload_json() const {
    const auto names = feature_names();
    return std::visit(overloaded{
                          [&](const NaiveBayesModel& m) { return spamlab::to_json(m); },
                          [&](const LogisticModel& m) {
                              auto j = spamlab::to_json(m);
                              nlohmann::json coefficients = nlohmann::json::array();
                              for (std::size_t i = 0; i < names.size(); ++i) {
                                  coefficients.push_back({{"feature", names[i]}, {"weight", m.weights[i]}});
                              }
                              j["coefficients"] = std::move(coefficients);
                              return j;
                          },
                          [&](const DecisionTree& t) { return nlohmann::json{{"tree", spamlab::to_json(t, names)}}; },
                          [&](const ForestModel& f) { return spamlab::to_json(f, names); },
                          [&](const RuleSet& r) { return ruleset_json(r); },
                      },
                      payload_);
}

nlohmann::json TrainedModel::to_json() const {
    return {{"format_version", kModelFormatVersion},
            {"kind", std::string(model_kind_name(kind_))},
            {"feature_names", feature_names()},
            {"features", feature_set_to_json(features_)},
            {"payload", payload_json()}};
}

TrainedModel TrainedModel::from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw Error(ErrorCode::BadModelFile, "model document must be a JSON object");
    auto version = j.find("format_version");
    if (version == j.end() || !version->is_number_integer()) {
        throw Error(ErrorCode::BadModelFile, "model document lacks an integer format_version");
    }
    if (version->get<long long>() != kModelFormatVersion) {
        throw Error(ErrorCode::UnsupportedFormatVersion,
                    "unsupported model format_version " + version->dump() + " (expected " +
                        std::to_string(kModelFormatVersion) + ")");
    }
    try {
        const ModelKind kind = parse_model_kind(j.at("kind").get<std::string>());
        FeatureSet features = feature_set_from_json(j.at("features"));
        std::vector<std::string> names;
        for (const auto& f : features) names.push_back(f.name());
        if (j.contains("feature_names") && j["feature_names"].get<std::vector<std::string>>() != names) {
            throw Error(ErrorCode::BadModelFile, "feature_names disagree with features");
        }
        const auto& payload = j.at("payload");
        switch (kind) {
            case ModelKind::NaiveBayes:
                return {kind, features, naive_bayes_from_json(payload, names.size())};
            case ModelKind::Logistic:
                return {kind, features, logistic_from_json(payload, names.size())};
            case ModelKind::Tree:
            case ModelKind::ManualTree:
                return {kind, features, tree_from_json(payload.at("tree"), names)};
            case ModelKind::Forest:
                return {kind, features, forest_from_json(payload, names)};
            case ModelKind::RuleSet: {
                RuleSet rules = parse_ruleset(payload.at("source").get<std::string>());
                return {kind, features, std::move(rules)};
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::BadModelFile, std::string("malformed model document: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::BadHyperparameter) throw Error(ErrorCode::BadModelFile, e.what());
        throw;
    }
    throw Error(ErrorCode::BadModelFile, "unreachable model kind");
}

FeatureSet resolve_features(const std::vector<std::string>& names, const FeatureSet& available) {
    FeatureSet out;
    const auto& presets = preset_features();
    for (const auto& name : names) {
        auto it = std::find_if(available.begin(), available.end(), [&](const FeatureDef& f) { return f.name() == name; });
        if (it != available.end()) {
            out.push_back(*it);
        } else if (auto p = presets.find(name); p != presets.end()) {
            out.push_back(p->second);
        } else {
            throw Error(ErrorCode::UnknownFeature, "unknown feature \"" + name + "\"");
        }
    }
    return out;
}

TrainedModel train_model(const Corpus& train, const FeatureSet& features, const TrainConfig& config) {
    check_threshold(config.threshold);
    check_unique_names(features);
    if (train.empty()) throw Error(ErrorCode::EmptyCorpus, "training corpus is empty");

    switch (config.kind) {
        case ModelKind::RuleSet: {
            FeatureSet used = resolve_features(referenced_features(config.rules), features);
            return {config.kind, std::move(used), config.rules};
        }
        case ModelKind::ManualTree: {
            FeatureSet used = resolve_features(manual_tree_features(config.manual_tree), features);
            std::vector<std::string> names;
            for (const auto& f : used) names.push_back(f.name());
            DecisionTree tree = manual_tree(config.manual_tree, names);
            fill_counts(tree, featurize(train, used));
            return {config.kind, std::move(used), std::move(tree)};
        }
        default:
            break;
    }

    if (features.empty()) throw Error(ErrorCode::ZeroFeatures, "model needs at least one feature");
    const FeatureMatrix matrix = featurize(train, features);
    switch (config.kind) {
        case ModelKind::NaiveBayes: {
            NaiveBayesModel m = fit_naive_bayes(matrix, config.alpha);
            m.threshold = config.threshold;
            return {config.kind, features, std::move(m)};
        }
        case ModelKind::Logistic: {
            LogisticModel m = fit_logistic(matrix, config.logistic);
            m.threshold = config.threshold;
            return {config.kind, features, std::move(m)};
        }
        case ModelKind::Tree:
            return {config.kind, features, induce_tree(matrix, config.tree)};
        case ModelKind::Forest: {
            ForestConfig fc = config.forest;
            fc.tree = config.tree;
            return {config.kind, features, fit_forest(matrix, fc)};
        }
        default:
            break;
    }
    throw Error(ErrorCode::Internal, "unhandled model kind");
}

TrainedModel load_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open model file: " + path);
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::BadModelFile, "model file is not valid JSON: " + path);
    return TrainedModel::from_json(j);
}

void save_model_file(const TrainedModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::BadRequest, "cannot write model file: " + path);
    out << model.to_json().dump(2) << '\n';
}

}  // namespace spamlab
