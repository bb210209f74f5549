#include "spamlab/service.hpp"

#include <atomic>
#include <fstream>
#include <sstream>

#include "httplib.h"

#include "spamlab/error.hpp"
#include "spamlab/ruledsl.hpp"

namespace spamlab {

using nlohmann::json;

namespace {

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::string current;
    for (char c : path) {
        if (c == '/') {
            if (!current.empty()) parts.push_back(std::move(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) parts.push_back(std::move(current));
    return parts;
}

std::optional<std::uint64_t> parse_id(const std::string& text) {
    if (text.empty() || text.size() > 19) return std::nullopt;
    std::uint64_t v = 0;
    for (char c : text) {
        if (c < '0' || c > '9') return std::nullopt;
        v = v * 10 + static_cast<std::uint64_t>(c - '0');
    }
    return v;
}

HttpResponse json_response(int status, const json& body) { return {status, body.dump(), "application/json"}; }

HttpResponse error_response(const Error& e) {
    json body = {{"code", std::string(code_string(e.code()))}};
    body["message"] = e.code() == ErrorCode::Internal ? "internal error" : e.what();
    if (e.position()) body["position"] = *e.position();
    return json_response(http_status(e.code()), body);
}

json parse_body(const HttpRequest& request) {
    json body = json::parse(request.body, nullptr, false);
    if (body.is_discarded()) throw Error(ErrorCode::BadRequest, "request body is not valid JSON");
    return body;
}

std::uint64_t reference_id(const json& body, const char* key) {
    auto it = body.find(key);
    if (it == body.end() || !it->is_number_unsigned()) {
        throw Error(ErrorCode::BadRequest, std::string("\"") + key + "\" must be a resource id");
    }
    return it->get<std::uint64_t>();
}

std::optional<std::uint64_t> optional_reference(const json& body, const char* key) {
    auto it = body.find(key);
    if (it == body.end() || it->is_null()) return std::nullopt;
    return reference_id(body, key);
}

json corpus_summary(std::uint64_t id, const Corpus& corpus) {
    return {{"id", id},
            {"name", corpus.name},
            {"size", corpus.size()},
            {"class_balance", class_balance(corpus).to_double()}};
}

json feature_set_summary(std::uint64_t id, const FeatureSet& features) {
    json names = json::array();
    for (const auto& f : features) names.push_back(f.name());
    return {{"id", id}, {"feature_names", std::move(names)}, {"features", feature_set_to_json(features)}};
}

json model_summary(const StoredModel& m) {
    json j = {{"id", m.id},
              {"kind", std::string(model_kind_name(m.model->kind()))},
              {"feature_names", m.model->feature_names()},
              {"train_corpus", m.train_corpus},
              {"train_metrics", to_json(m.train)},
              {"test_metrics", m.test ? to_json(*m.test) : json(nullptr)}};
    j["feature_set"] = m.feature_set ? json(*m.feature_set) : json(nullptr);
    j["test_corpus"] = m.test_corpus ? json(*m.test_corpus) : json(nullptr);
    return j;
}

json vocabulary_json(const Vocabulary& vocab) {
    json out = json::array();
    for (const auto& e : vocab.entries) out.push_back({{"word", e.word}, {"count", e.count}});
    return out;
}

CountMode parse_count_mode(const std::string& mode) {
    if (mode == "document") return CountMode::DocumentFrequency;
    if (mode == "total") return CountMode::TotalOccurrences;
    throw Error(ErrorCode::BadHyperparameter, "count mode must be \"document\" or \"total\"");
}

std::size_t parse_min_freq(const std::string& text) {
    auto v = parse_id(text);
    if (!v || *v == 0) throw Error(ErrorCode::BadHyperparameter, "min_freq must be a positive integer");
    return static_cast<std::size_t>(*v);
}

}  // namespace

// ---------------------------------------------------------------------------
// SessionStore
// ---------------------------------------------------------------------------

std::uint64_t SessionStore::add_corpus(Corpus corpus) {
    if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "corpus has no data rows");
    std::unique_lock lock(mutex_);
    const auto id = next_corpus_++;
    corpora_.emplace(id, std::make_shared<const Corpus>(std::move(corpus)));
    return id;
}

std::uint64_t SessionStore::add_feature_set(FeatureSet features) {
    check_unique_names(features);
    std::unique_lock lock(mutex_);
    const auto id = next_feature_set_++;
    feature_sets_.emplace(id, std::make_shared<const FeatureSet>(std::move(features)));
    return id;
}

std::uint64_t SessionStore::add_model(StoredModel model) {
    std::unique_lock lock(mutex_);
    // References are re-checked under the write lock: a delete may have
    // landed while the model was training.
    if (!corpora_.count(model.train_corpus) || (model.test_corpus && !corpora_.count(*model.test_corpus)) ||
        (model.feature_set && !feature_sets_.count(*model.feature_set))) {
        throw Error(ErrorCode::UnknownReference, "a resource referenced by the model no longer exists");
    }
    model.id = next_model_++;
    const auto id = model.id;
    models_.emplace(id, std::make_shared<const StoredModel>(std::move(model)));
    return id;
}

std::shared_ptr<const Corpus> SessionStore::corpus(std::uint64_t id) const {
    std::shared_lock lock(mutex_);
    auto it = corpora_.find(id);
    if (it == corpora_.end()) throw Error(ErrorCode::UnknownCorpus, "unknown corpus " + std::to_string(id));
    return it->second;
}

std::shared_ptr<const FeatureSet> SessionStore::feature_set(std::uint64_t id) const {
    std::shared_lock lock(mutex_);
    auto it = feature_sets_.find(id);
    if (it == feature_sets_.end()) throw Error(ErrorCode::UnknownFeatureSet, "unknown feature set " + std::to_string(id));
    return it->second;
}

std::shared_ptr<const StoredModel> SessionStore::model(std::uint64_t id) const {
    std::shared_lock lock(mutex_);
    auto it = models_.find(id);
    if (it == models_.end()) throw Error(ErrorCode::UnknownModel, "unknown model " + std::to_string(id));
    return it->second;
}

void SessionStore::remove_corpus(std::uint64_t id) {
    std::unique_lock lock(mutex_);
    if (!corpora_.count(id)) throw Error(ErrorCode::UnknownCorpus, "unknown corpus " + std::to_string(id));
    for (const auto& [mid, m] : models_) {
        if (m->train_corpus == id || m->test_corpus == id) {
            throw Error(ErrorCode::InUse, "corpus " + std::to_string(id) + " is used by model " + std::to_string(mid));
        }
    }
    corpora_.erase(id);
}

void SessionStore::remove_feature_set(std::uint64_t id) {
    std::unique_lock lock(mutex_);
    if (!feature_sets_.count(id)) throw Error(ErrorCode::UnknownFeatureSet, "unknown feature set " + std::to_string(id));
    for (const auto& [mid, m] : models_) {
        if (m->feature_set == id) {
            throw Error(ErrorCode::InUse,
                        "feature set " + std::to_string(id) + " is used by model " + std::to_string(mid));
        }
    }
    feature_sets_.erase(id);
}

void SessionStore::remove_model(std::uint64_t id) {
    std::unique_lock lock(mutex_);
    if (!models_.erase(id)) throw Error(ErrorCode::UnknownModel, "unknown model " + std::to_string(id));
}

std::map<std::uint64_t, std::shared_ptr<const Corpus>> SessionStore::corpora() const {
    std::shared_lock lock(mutex_);
    return corpora_;
}

std::map<std::uint64_t, std::shared_ptr<const FeatureSet>> SessionStore::feature_sets() const {
    std::shared_lock lock(mutex_);
    return feature_sets_;
}

std::map<std::uint64_t, std::shared_ptr<const StoredModel>> SessionStore::models() const {
    std::shared_lock lock(mutex_);
    return models_;
}

bool SessionStore::consistent() const {
    std::shared_lock lock(mutex_);
    for (const auto& [id, c] : corpora_) {
        if (id == 0 || id >= next_corpus_ || !c || c->empty()) return false;
    }
    for (const auto& [id, f] : feature_sets_) {
        if (id == 0 || id >= next_feature_set_ || !f) return false;
    }
    for (const auto& [id, m] : models_) {
        if (id == 0 || id >= next_model_ || !m || m->id != id || !m->model) return false;
        if (!corpora_.count(m->train_corpus)) return false;
        if (m->test_corpus && !corpora_.count(*m->test_corpus)) return false;
        if (m->feature_set && !feature_sets_.count(*m->feature_set)) return false;
    }
    return true;
}

json SessionStore::snapshot() const {
    std::shared_lock lock(mutex_);
    json corpora = json::array();
    for (const auto& [id, c] : corpora_) corpora.push_back({{"id", id}, {"name", c->name}, {"csv", to_csv(*c)}});
    json sets = json::array();
    for (const auto& [id, f] : feature_sets_) sets.push_back({{"id", id}, {"features", feature_set_to_json(*f)}});
    json models = json::array();
    for (const auto& [id, m] : models_) {
        models.push_back({{"id", id},
                          {"model", m->model->to_json()},
                          {"request", m->request},
                          {"feature_set", m->feature_set ? json(*m->feature_set) : json(nullptr)},
                          {"train_corpus", m->train_corpus},
                          {"test_corpus", m->test_corpus ? json(*m->test_corpus) : json(nullptr)}});
    }
    return {{"version", 1},
            {"next_ids", {{"corpus", next_corpus_}, {"feature_set", next_feature_set_}, {"model", next_model_}}},
            {"corpora", std::move(corpora)},
            {"feature_sets", std::move(sets)},
            {"models", std::move(models)}};
}

void SessionStore::restore(const json& snap) {
    decltype(corpora_) corpora;
    decltype(feature_sets_) sets;
    decltype(models_) models;
    try {
        for (const auto& c : snap.at("corpora")) {
            corpora.emplace(c.at("id").get<std::uint64_t>(),
                            std::make_shared<const Corpus>(
                                load_csv_text(c.at("csv").get<std::string>(), c.at("name").get<std::string>())));
        }
        for (const auto& f : snap.at("feature_sets")) {
            sets.emplace(f.at("id").get<std::uint64_t>(),
                         std::make_shared<const FeatureSet>(feature_set_from_json(f.at("features"))));
        }
        for (const auto& m : snap.at("models")) {
            StoredModel stored;
            stored.id = m.at("id").get<std::uint64_t>();
            stored.model = std::make_shared<const TrainedModel>(TrainedModel::from_json(m.at("model")));
            stored.request = m.value("request", json::object());
            if (!m.at("feature_set").is_null()) stored.feature_set = m.at("feature_set").get<std::uint64_t>();
            stored.train_corpus = m.at("train_corpus").get<std::uint64_t>();
            if (!m.at("test_corpus").is_null()) stored.test_corpus = m.at("test_corpus").get<std::uint64_t>();
            stored.train = score(*stored.model, *corpora.at(stored.train_corpus));
            if (stored.test_corpus) {
                const auto& test = *corpora.at(*stored.test_corpus);
                if (!test.empty()) stored.test = score(*stored.model, test);
            }
            models.emplace(stored.id, std::make_shared<const StoredModel>(std::move(stored)));
        }
        std::unique_lock lock(mutex_);
        const auto& next = snap.at("next_ids");
        next_corpus_ = next.at("corpus").get<std::uint64_t>();
        next_feature_set_ = next.at("feature_set").get<std::uint64_t>();
        next_model_ = next.at("model").get<std::uint64_t>();
        corpora_ = std::move(corpora);
        feature_sets_ = std::move(sets);
        models_ = std::move(models);
    } catch (const json::exception& e) {
        throw Error(ErrorCode::BadRequest, std::string("malformed session snapshot: ") + e.what());
    } catch (const std::out_of_range&) {
        throw Error(ErrorCode::BadRequest, "session snapshot references a missing corpus");
    }
}

// ---------------------------------------------------------------------------
// Model building
// ---------------------------------------------------------------------------

StoredModel build_model(const SessionStore& store, const json& request) {
    if (!request.is_object()) throw Error(ErrorCode::BadRequest, "request body must be a JSON object");
    auto kind_it = request.find("kind");
    if (kind_it == request.end() || !kind_it->is_string()) throw Error(ErrorCode::BadRequest, "\"kind\" is required");
    const ModelKind kind = parse_model_kind(kind_it->get<std::string>());

    // Unknown ids inside a body are client mistakes about the request, not
    // missing URL resources.
    auto lookup = [](auto&& fetch) {
        try {
            return fetch();
        } catch (const Error& e) {
            if (http_status(e.code()) == 404) throw Error(ErrorCode::UnknownReference, e.what());
            throw;
        }
    };

    StoredModel stored;
    stored.request = request;
    stored.feature_set = optional_reference(request, "feature_set");
    stored.train_corpus = reference_id(request, "train_corpus");
    stored.test_corpus = optional_reference(request, "test_corpus");

    auto train = lookup([&] { return store.corpus(stored.train_corpus); });
    std::shared_ptr<const Corpus> test;
    if (stored.test_corpus) test = lookup([&] { return store.corpus(*stored.test_corpus); });
    FeatureSet available;
    if (stored.feature_set) available = *lookup([&] { return store.feature_set(*stored.feature_set); });

    FeatureSet features = available;
    if (auto sel = request.find("features"); sel != request.end() && !sel->is_null()) {
        if (!sel->is_array()) throw Error(ErrorCode::BadRequest, "\"features\" must be a list of feature names");
        std::vector<std::string> names;
        for (const auto& n : *sel) {
            if (!n.is_string()) throw Error(ErrorCode::BadRequest, "\"features\" must be a list of feature names");
            names.push_back(n.get<std::string>());
        }
        features = resolve_features(names, available);
    }

    const TrainConfig config = train_config_from_json(kind, request);
    stored.model = std::make_shared<const TrainedModel>(train_model(*train, features, config));
    stored.train = score(*stored.model, *train);
    if (test && !test->empty()) stored.test = score(*stored.model, *test);
    return stored;
}

// ---------------------------------------------------------------------------
// ApiService
// ---------------------------------------------------------------------------

ApiService::ApiService(std::filesystem::path data_dir) : data_dir_(std::move(data_dir)) {
    std::filesystem::create_directories(*data_dir_);
    const auto file = *data_dir_ / "session.json";
    if (std::filesystem::exists(file)) {
        std::ifstream in(file);
        json snap = json::parse(in, nullptr, false);
        if (snap.is_discarded()) throw Error(ErrorCode::BadRequest, "session snapshot is not valid JSON");
        store_.restore(snap);
    }
}

void ApiService::save_snapshot() const {
    if (!data_dir_) return;
    const auto file = *data_dir_ / "session.json";
    const auto tmp = *data_dir_ / "session.json.tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        out << store_.snapshot().dump(2) << '\n';
    }
    std::filesystem::rename(tmp, file);
}

HttpResponse ApiService::handle(const HttpRequest& request) {
    try {
        return route(request);
    } catch (const Error& e) {
        return error_response(e);
    } catch (const json::exception& e) {
        return error_response(Error(ErrorCode::BadRequest, std::string("malformed request: ") + e.what()));
    } catch (const std::exception&) {
        return error_response(Error(ErrorCode::Internal, "internal error"));
    }
}

HttpResponse ApiService::route(const HttpRequest& request) {
    const auto parts = split_path(request.path);
    const std::string& method = request.method;
    auto id_at = [&](std::size_t i, ErrorCode missing) {
        auto id = parse_id(parts.at(i));
        if (!id) throw Error(missing, "bad resource id \"" + parts.at(i) + "\"");
        return *id;
    };
    auto not_found = [&]() -> HttpResponse {
        throw Error(ErrorCode::NotFound, "no route for " + method + " " + request.path);
    };

    if (parts.empty()) return not_found();
    const std::string& root = parts[0];

    if (root == "healthz" && parts.size() == 1 && method == "GET") return {200, "ok", "text/plain"};
    if (root == "api-spec" && parts.size() == 1 && method == "GET") return json_response(200, openapi_document());

    if (root == "corpora") {
        if (parts.size() == 1 && method == "POST") return post_corpus(request);
        if (parts.size() == 1 && method == "GET") {
            json list = json::array();
            for (const auto& [id, c] : store_.corpora()) list.push_back(corpus_summary(id, *c));
            return json_response(200, list);
        }
        if (parts.size() >= 2) {
            const auto id = id_at(1, ErrorCode::UnknownCorpus);
            if (parts.size() == 2 && method == "GET") return json_response(200, corpus_summary(id, *store_.corpus(id)));
            if (parts.size() == 2 && method == "DELETE") {
                store_.remove_corpus(id);
                return {204, "", "application/json"};
            }
            if (parts.size() == 3 && parts[2] == "vocabulary" && method == "GET") return get_vocabulary(id, request);
        }
    }

    if (root == "feature-sets") {
        if (parts.size() == 1 && method == "POST") return post_feature_set(request);
        if (parts.size() == 1 && method == "GET") {
            json list = json::array();
            for (const auto& [id, f] : store_.feature_sets()) list.push_back(feature_set_summary(id, *f));
            return json_response(200, list);
        }
        if (parts.size() == 2) {
            const auto id = id_at(1, ErrorCode::UnknownFeatureSet);
            if (method == "GET") return json_response(200, feature_set_summary(id, *store_.feature_set(id)));
            if (method == "DELETE") {
                store_.remove_feature_set(id);
                return {204, "", "application/json"};
            }
        }
    }

    if (root == "presets" && parts.size() == 1 && method == "GET") {
        json list = json::array();
        for (const auto& [name, def] : preset_features()) list.push_back(feature_to_json(def));
        return json_response(200, list);
    }

    if (root == "rules" && parts.size() == 2 && parts[1] == "parse" && method == "POST") {
        return post_rules_parse(request);
    }

    if (root == "models") {
        if (parts.size() == 1 && method == "POST") return post_model(request);
        if (parts.size() == 1 && method == "GET") {
            json list = json::array();
            for (const auto& [id, m] : store_.models()) list.push_back(model_summary(*m));
            return json_response(200, list);
        }
        if (parts.size() >= 2) {
            const auto id = id_at(1, ErrorCode::UnknownModel);
            if (parts.size() == 2 && method == "GET") {
                const auto m = store_.model(id);
                json body = model_summary(*m);
                body["model"] = m->model->to_json();
                return json_response(200, body);
            }
            if (parts.size() == 2 && method == "DELETE") {
                store_.remove_model(id);
                return {204, "", "application/json"};
            }
            if (parts.size() == 3 && parts[2] == "predict" && method == "POST") return post_predict(id, request);
            if (parts.size() == 3 && parts[2] == "metrics" && method == "GET") return get_metrics(id);
        }
    }
    return not_found();
}

HttpResponse ApiService::post_corpus(const HttpRequest& request) {
    std::string csv;
    std::string name = "corpus";
    if (request.content_type.find("application/json") != std::string::npos) {
        const json body = parse_body(request);
        if (!body.is_object() || !body.contains("csv") || !body["csv"].is_string()) {
            throw Error(ErrorCode::BadRequest, "JSON body must carry the CSV text under \"csv\"");
        }
        csv = body["csv"].get<std::string>();
        name = body.value("name", name);
    } else {
        csv = request.body;
        if (auto it = request.query.find("name"); it != request.query.end()) name = it->second;
    }
    Corpus corpus = load_csv_text(csv, name);
    const Rational balance = class_balance(corpus);
    const std::size_t size = corpus.size();
    const auto id = store_.add_corpus(std::move(corpus));
    return json_response(201, {{"id", id}, {"size", size}, {"class_balance", balance.to_double()}});
}

HttpResponse ApiService::get_vocabulary(std::uint64_t id, const HttpRequest& request) {
    const auto corpus = store_.corpus(id);
    std::size_t min_freq = 4;
    if (auto it = request.query.find("min_freq"); it != request.query.end()) min_freq = parse_min_freq(it->second);
    CountMode mode = CountMode::DocumentFrequency;
    if (auto it = request.query.find("mode"); it != request.query.end()) mode = parse_count_mode(it->second);
    return json_response(200, vocabulary_json(build_vocabulary(*corpus, min_freq, mode)));
}

HttpResponse ApiService::post_feature_set(const HttpRequest& request) {
    const json body = parse_body(request);
    FeatureSet features;
    if (body.is_array()) {
        features = feature_set_from_json(body);
    } else if (body.is_object()) {
        if (auto it = body.find("features"); it != body.end()) features = feature_set_from_json(*it);
        if (auto it = body.find("presets"); it != body.end()) {
            const auto names = it->get<std::vector<std::string>>();
            for (auto& def : resolve_features(names, {})) features.push_back(std::move(def));
        }
        if (auto it = body.find("expand_bag_of_words"); it != body.end() && !it->is_null()) {
            if (!it->is_number_unsigned()) throw Error(ErrorCode::BadRequest, "expand_bag_of_words must be a corpus id");
            std::shared_ptr<const Corpus> corpus;
            try {
                corpus = store_.corpus(it->get<std::uint64_t>());
            } catch (const Error& e) {
                throw Error(ErrorCode::UnknownReference, e.what());
            }
            std::size_t min_freq = 4;
            if (auto mf = body.find("min_freq"); mf != body.end()) {
                if (!mf->is_number_unsigned() || mf->get<std::uint64_t>() == 0) {
                    throw Error(ErrorCode::BadHyperparameter, "min_freq must be a positive integer");
                }
                min_freq = mf->get<std::size_t>();
            }
            const CountMode mode = parse_count_mode(body.value("count_mode", std::string("document")));
            for (auto& def : bag_of_words_features(build_vocabulary(*corpus, min_freq, mode))) {
                features.push_back(std::move(def));
            }
        }
    } else {
        throw Error(ErrorCode::BadRequest, "feature set body must be a list of definitions or an object");
    }
    check_unique_names(features);
    json names = json::array();
    for (const auto& f : features) names.push_back(f.name());
    const auto id = store_.add_feature_set(std::move(features));
    return json_response(201, {{"id", id}, {"feature_names", std::move(names)}});
}

HttpResponse ApiService::post_rules_parse(const HttpRequest& request) {
    const json body = parse_body(request);
    if (!body.is_object()) throw Error(ErrorCode::BadRequest, "body must be a JSON object");
    if (auto it = body.find("ruleset"); it != body.end()) {
        if (!it->is_string()) throw Error(ErrorCode::BadRequest, "\"ruleset\" must be a string");
        const RuleSet rules = parse_ruleset(it->get<std::string>());
        json clauses = json::array();
        for (const auto& c : rules.clauses) {
            clauses.push_back({{"ast", rule_to_json(*c.condition)},
                               {"canonical", pretty_print(*c.condition)},
                               {"verdict", std::string(label_name(c.verdict))}});
        }
        return json_response(200, {{"clauses", std::move(clauses)},
                                   {"default", std::string(label_name(rules.fallback))},
                                   {"canonical", format_ruleset(rules)}});
    }
    auto it = body.find("source");
    if (it == body.end() || !it->is_string()) throw Error(ErrorCode::BadRequest, "\"source\" must be a string");
    const auto expr = parse_rule(it->get<std::string>());
    return json_response(200, {{"ast", rule_to_json(*expr)},
                               {"canonical", pretty_print(*expr)},
                               {"features", referenced_features(*expr)}});
}

HttpResponse ApiService::post_model(const HttpRequest& request) {
    StoredModel stored = build_model(store_, parse_body(request));
    json body = {{"kind", std::string(model_kind_name(stored.model->kind()))},
                 {"feature_names", stored.model->feature_names()},
                 {"train_metrics", to_json(stored.train)},
                 {"test_metrics", stored.test ? to_json(*stored.test) : json(nullptr)},
                 {"payload", stored.model->payload_json()}};
    const auto id = store_.add_model(std::move(stored));
    body["id"] = id;
    return json_response(201, body);
}

HttpResponse ApiService::post_predict(std::uint64_t id, const HttpRequest& request) {
    const auto stored = store_.model(id);
    const json body = parse_body(request);
    if (!body.is_object() || !body.contains("subject") || !body["subject"].is_string()) {
        throw Error(ErrorCode::BadRequest, "\"subject\" must be a string");
    }
    const std::string subject = body["subject"].get<std::string>();
    if (subject.empty()) throw Error(ErrorCode::EmptyInput, "subject is empty");
    const auto& model = *stored->model;
    const Prediction p = model.predict_subject(subject);
    const FeatureVector x = featurize_text(model.features(), subject);
    return json_response(200, {{"label", std::string(label_name(p.label))},
                               {"score", p.score},
                               {"feature_names", model.feature_names()},
                               {"feature_vector", x}});
}

HttpResponse ApiService::get_metrics(std::uint64_t id) {
    const auto m = store_.model(id);
    return json_response(200, {{"id", m->id},
                               {"kind", std::string(model_kind_name(m->model->kind()))},
                               {"train", to_json(m->train)},
                               {"test", m->test ? to_json(*m->test) : json(nullptr)}});
}

// ---------------------------------------------------------------------------
// OpenAPI
// ---------------------------------------------------------------------------

json openapi_document() {
    auto op = [](const char* summary) {
        return json{{"summary", summary},
                    {"responses", {{"200", {{"description", "OK"}}}, {"4XX", {{"description", "ApiError"}}}}}};
    };
    json id_param = json::array({{{"name", "id"}, {"in", "path"}, {"required", true}, {"schema", {{"type", "integer"}}}}});
    json paths;
    paths["/healthz"]["get"] = op("Liveness probe; returns the text ok");
    paths["/api-spec"]["get"] = op("This document");
    paths["/corpora"]["post"] = op("Upload a subject,label CSV (raw text/csv, multipart file, or {\"csv\": ...})");
    paths["/corpora"]["get"] = op("List corpora");
    paths["/corpora/{id}"]["get"] = op("Corpus summary");
    paths["/corpora/{id}"]["delete"] = op("Delete a corpus not used by any model");
    paths["/corpora/{id}/vocabulary"]["get"] = op("Bag-of-words vocabulary; query min_freq (default 4), mode=document|total");
    paths["/feature-sets"]["post"] =
        op("Store a feature set: a definition list, or {features, presets, expand_bag_of_words, min_freq}");
    paths["/feature-sets"]["get"] = op("List feature sets");
    paths["/feature-sets/{id}"]["get"] = op("Feature set definitions");
    paths["/feature-sets/{id}"]["delete"] = op("Delete a feature set not used by any model");
    paths["/presets"]["get"] = op("Built-in named features");
    paths["/rules/parse"]["post"] = op("Parse {\"source\": rule} or {\"ruleset\": text}");
    paths["/models"]["post"] = op("Train nb|logreg|tree|forest|ruleset|manual_tree and score it");
    paths["/models"]["get"] = op("List models");
    paths["/models/{id}"]["get"] = op("Model summary and serialized model");
    paths["/models/{id}"]["delete"] = op("Delete a model");
    paths["/models/{id}/predict"]["post"] = op("Classify {\"subject\": text}");
    paths["/models/{id}/metrics"]["get"] = op("Stored train/test metrics and confusion matrices");
    for (auto& [path, item] : paths.items()) {
        if (path.find("{id}") != std::string::npos) {
            for (auto& [verb, operation] : item.items()) operation["parameters"] = id_param;
        }
    }
    json error_schema = {{"type", "object"},
                         {"required", {"code", "message"}},
                         {"properties",
                          {{"code", {{"type", "string"}}},
                           {"message", {{"type", "string"}}},
                           {"position", {{"type", "integer"}}}}}};
    return {{"openapi", "3.0.3"},
            {"info", {{"title", "spamlab API"}, {"version", "1.0.0"}}},
            {"paths", std::move(paths)},
            {"components", {{"schemas", {{"ApiError", std::move(error_schema)}}}}}};
}

// ---------------------------------------------------------------------------
// HTTP transport
// ---------------------------------------------------------------------------

namespace {
std::atomic<httplib::Server*> active_server{nullptr};
}

void stop_server() {
    if (auto* s = active_server.load()) s->stop();
}

void run_server(ApiService& service, const ServeOptions& options, const std::function<void(int)>& on_ready) {
    httplib::Server server;
    server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                                {"Access-Control-Allow-Methods", "GET, POST, DELETE, OPTIONS"},
                                {"Access-Control-Allow-Headers", "Content-Type"}});
    if (options.static_dir) {
        if (!server.set_mount_point("/", options.static_dir->string())) {
            throw Error(ErrorCode::NotFound, "static directory does not exist: " + options.static_dir->string());
        }
    }

    std::mutex save_mutex;
    auto dispatch = [&](const httplib::Request& req, httplib::Response& res) {
        HttpRequest request;
        request.method = req.method;
        request.path = req.path;
        for (const auto& [k, v] : req.params) request.query.emplace(k, v);
        request.content_type = req.get_header_value("Content-Type");
        request.body = req.body;
        if (req.is_multipart_form_data() && !req.files.empty()) {
            request.body = req.files.begin()->second.content;
            request.content_type = "text/csv";
        }
        const HttpResponse response = service.handle(request);
        res.status = response.status;
        if (response.status != 204) res.set_content(response.body, response.content_type);
        if (request.method != "GET" && response.status < 300) {
            std::lock_guard lock(save_mutex);
            service.save_snapshot();
        }
    };
    server.Get(R"(/.*)", dispatch);
    server.Post(R"(/.*)", dispatch);
    server.Delete(R"(/.*)", dispatch);
    server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

    int port = options.port;
    if (port == 0) {
        port = server.bind_to_any_port(options.host);
    } else if (!server.bind_to_port(options.host, port)) {
        port = -1;
    }
    if (port < 0) throw Error(ErrorCode::BadRequest, "cannot bind " + options.host + ":" + std::to_string(options.port));
    active_server.store(&server);
    if (on_ready) on_ready(port);
    server.listen_after_bind();
    active_server.store(nullptr);
    service.save_snapshot();
}

}  // namespace spamlab
