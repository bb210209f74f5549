#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "json.hpp"

#include "spamlab/corpus.hpp"
#include "spamlab/evalkit.hpp"
#include "spamlab/model.hpp"
#include "spamlab/textfeat.hpp"

namespace spamlab {

struct HttpRequest {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
    std::string content_type;
};

struct HttpResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

struct StoredModel {
    std::uint64_t id = 0;
    std::shared_ptr<const TrainedModel> model;
    std::optional<std::uint64_t> feature_set;
    std::uint64_t train_corpus = 0;
    std::optional<std::uint64_t> test_corpus;
    nlohmann::json request;  // hyperparameters as submitted, for snapshots
    ScoredSplit train;
    std::optional<ScoredSplit> test;
};

/// In-memory resources behind the API. Ids are per resource type, start at
/// 1 and are never reused. A resource referenced by a model cannot be
/// deleted. Single writer, many readers: stored values are immutable and
/// handed out as shared pointers.
class SessionStore {
public:
    std::uint64_t add_corpus(Corpus corpus);
    std::uint64_t add_feature_set(FeatureSet features);
    std::uint64_t add_model(StoredModel model);

    std::shared_ptr<const Corpus> corpus(std::uint64_t id) const;
    std::shared_ptr<const FeatureSet> feature_set(std::uint64_t id) const;
    std::shared_ptr<const StoredModel> model(std::uint64_t id) const;

    void remove_corpus(std::uint64_t id);
    void remove_feature_set(std::uint64_t id);
    void remove_model(std::uint64_t id);

    std::map<std::uint64_t, std::shared_ptr<const Corpus>> corpora() const;
    std::map<std::uint64_t, std::shared_ptr<const FeatureSet>> feature_sets() const;
    std::map<std::uint64_t, std::shared_ptr<const StoredModel>> models() const;

    /// True when every model's feature set and corpora exist and every id is
    /// below its type's next-id counter.
    bool consistent() const;

    nlohmann::json snapshot() const;
    void restore(const nlohmann::json& snapshot);

private:
    mutable std::shared_mutex mutex_;
    std::uint64_t next_corpus_ = 1;
    std::uint64_t next_feature_set_ = 1;
    std::uint64_t next_model_ = 1;
    std::map<std::uint64_t, std::shared_ptr<const Corpus>> corpora_;
    std::map<std::uint64_t, std::shared_ptr<const FeatureSet>> feature_sets_;
    std::map<std::uint64_t, std::shared_ptr<const StoredModel>> models_;
};

/// Transport-independent request handling for the JSON API. Every failure
/// becomes {"code", "message"[, "position"]} with the status from
/// http_status(); unexpected exceptions become a generic 500.
class ApiService {
public:
    ApiService() = default;
    explicit ApiService(std::filesystem::path data_dir);

    HttpResponse handle(const HttpRequest& request);

    SessionStore& store() noexcept { return store_; }
    const SessionStore& store() const noexcept { return store_; }

    /// Writes <data_dir>/session.json; no-op without a data directory.
    void save_snapshot() const;

private:
    HttpResponse route(const HttpRequest& request);

    HttpResponse post_corpus(const HttpRequest& request);
    HttpResponse get_vocabulary(std::uint64_t id, const HttpRequest& request);
    HttpResponse post_feature_set(const HttpRequest& request);
    HttpResponse post_rules_parse(const HttpRequest& request);
    HttpResponse post_model(const HttpRequest& request);
    HttpResponse post_predict(std::uint64_t id, const HttpRequest& request);
    HttpResponse get_metrics(std::uint64_t id);

    std::optional<std::filesystem::path> data_dir_;
    SessionStore store_;
};

/// OpenAPI 3 description served at GET /api-spec.
nlohmann::json openapi_document();

/// Trains and scores one POST /models request against the store's resources.
StoredModel build_model(const SessionStore& store, const nlohmann::json& request);

struct ServeOptions {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::optional<std::filesystem::path> static_dir;
};

/// Blocks serving HTTP until stop_server() is called from another thread.
/// `on_ready` receives the bound port (port 0 asks the OS for a free one).
void run_server(ApiService& service, const ServeOptions& options, const std::function<void(int)>& on_ready = {});
void stop_server();

}  // namespace spamlab
