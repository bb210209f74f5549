#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include "httplib.h"

#include "oracles.hpp"
#include "spamlab/service.hpp"

using namespace spamlab;
using nlohmann::json;

namespace {

std::string sample_csv() {
    std::ifstream in(oracle::data_path("sample10.csv"));
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Client {
    ApiService& api;

    HttpResponse call(const std::string& method, const std::string& path, const std::string& body = "",
                      const std::string& type = "application/json") {
        HttpRequest r;
        r.method = method;
        const auto q = path.find('?');
        r.path = path.substr(0, q);
        if (q != std::string::npos) {
            std::istringstream params(path.substr(q + 1));
            for (std::string kv; std::getline(params, kv, '&');) {
                const auto eq = kv.find('=');
                r.query[kv.substr(0, eq)] = kv.substr(eq + 1);
            }
        }
        r.body = body;
        r.content_type = type;
        return api.handle(r);
    }
    json post(const std::string& path, const json& body, int expect) {
        const HttpResponse r = call("POST", path, body.dump());
        CHECK_MESSAGE(r.status == expect, r.body);
        return json::parse(r.body);
    }
    json get(const std::string& path, int expect = 200) {
        const HttpResponse r = call("GET", path);
        CHECK_MESSAGE(r.status == expect, r.body);
        return json::parse(r.body);
    }
    std::uint64_t upload(const std::string& csv) {
        const HttpResponse r = call("POST", "/corpora", csv, "text/csv");
        REQUIRE_MESSAGE(r.status == 201, r.body);
        return json::parse(r.body)["id"].get<std::uint64_t>();
    }
};

const json kTwoSplitTree = {{"split", "dear_or_bless"},
                        {"if_true", {{"leaf", "spam"}}},
                        {"if_false",
                         {{"split", "contains_re"}, {"if_false", {{"leaf", "spam"}}}, {"if_true", {{"leaf", "non-spam"}}}}}};

}  // namespace

TEST_SUITE("service") {

TEST_CASE("corpus upload, listing and vocabulary") {
    ApiService api;
    Client c{api};
    const HttpResponse first = c.call("POST", "/corpora", sample_csv(), "text/csv");
    CHECK(first.status == 201);
    CHECK(json::parse(first.body) == json{{"id", 1}, {"size", 10}, {"class_balance", 0.5}});
    CHECK(c.post("/corpora", {{"csv", sample_csv()}, {"name", "again"}}, 201)["id"] == 2);

    const json empty = c.post("/corpora", {{"csv", "subject,label\n"}}, 400);
    CHECK(empty["code"] == "empty_corpus");
    const json bad = c.post("/corpora", {{"csv", "subject,label\nx,ham\n"}}, 400);
    CHECK(bad["code"] == "bad_label");
    CHECK(bad.contains("message"));

    CHECK(c.get("/corpora").size() == 2);
    CHECK(c.get("/corpora/2")["name"] == "again");
    CHECK(c.get("/corpora/99", 404)["code"] == "unknown_corpus");

    const std::uint64_t v = c.upload("subject,label\nurgent a,spam\nurgent b,spam\nurgent c,non-spam\nurgent d,spam\ngoods e,spam\n");
    CHECK(c.get("/corpora/" + std::to_string(v) + "/vocabulary") == json::array({{{"word", "urgent"}, {"count", 4}}}));
    CHECK(c.get("/corpora/" + std::to_string(v) + "/vocabulary?min_freq=1").size() == 7);
    CHECK(c.get("/corpora/" + std::to_string(v) + "/vocabulary?min_freq=0", 400)["code"] == "bad_hyperparameter");
    CHECK(c.get("/corpora/77/vocabulary", 404)["code"] == "unknown_corpus");
}

TEST_CASE("feature sets") {
    ApiService api;
    Client c{api};
    const json interactive = c.post("/feature-sets", {{"presets", {"all_caps", "dollar", "multi_punct", "dear_or_mister", "religious"}}}, 201);
    CHECK(interactive["feature_names"].size() == 5);
    const json empty = c.post("/feature-sets", json::array(), 201);
    CHECK(empty["feature_names"].empty());
    CHECK(c.post("/feature-sets", {{"features", {{{"name", "Bad"}, {"kind", "all_caps"}}}}}, 400)["code"] == "bad_feature_def");
    CHECK(c.post("/feature-sets", {{"presets", {"dollar", "dollar"}}}, 400)["code"] == "duplicate_feature_name");

    const std::uint64_t corpus = c.upload(sample_csv());
    const json bow = c.post("/feature-sets", {{"expand_bag_of_words", corpus}, {"min_freq", 2}}, 201);
    CHECK(bow["feature_names"] == json::array({"your", "re"}));
    CHECK(c.post("/feature-sets", {{"expand_bag_of_words", 42}}, 400)["code"] == "unknown_reference");
    CHECK(c.get("/feature-sets/1")["features"].size() == 5);
    CHECK(c.get("/feature-sets/9", 404)["code"] == "unknown_feature_set");
}

TEST_CASE("rule parsing endpoint") {
    ApiService api;
    Client c{api};
    const json ok = c.post("/rules/parse", {{"source", "a OR b"}}, 200);
    CHECK(ok["ast"]["op"] == "or");
    CHECK(ok["canonical"] == "a OR b");
    const json again = c.post("/rules/parse", {{"source", ok["canonical"]}}, 200);
    CHECK(again["ast"] == ok["ast"]);
    const json err = c.post("/rules/parse", {{"source", "a AND"}}, 400);
    CHECK(err["code"] == "syntax_error");
    CHECK(err["position"] == 5);
    const json rs = c.post("/rules/parse", {{"ruleset", "dear_or_bless => spam\ndefault => non-spam\n"}}, 200);
    CHECK(rs["clauses"].size() == 1);
    CHECK(rs["default"] == "non-spam");
}

TEST_CASE("model training, prediction and metrics") {
    ApiService api;
    Client c{api};
    const std::uint64_t train = c.upload(sample_csv());
    const std::uint64_t test = c.upload(sample_csv());

    const json null = c.post("/models", {{"kind", "manual_tree"}, {"train_corpus", train}, {"test_corpus", test},
                                         {"tree", {{"leaf", "non-spam"}}}}, 201);
    CHECK(null["test_metrics"]["accuracy"] == 0.5);
    CHECK(null["train_metrics"]["accuracy"] == 0.5);
    CHECK(c.post("/models/" + std::to_string(null["id"].get<int>()) + "/predict", {{"subject", "anything"}}, 200)["label"] ==
          "non-spam");

    const json two_split = c.post("/models", {{"kind", "manual_tree"}, {"train_corpus", train}, {"tree", kTwoSplitTree}}, 201);
    const std::string base = "/models/" + std::to_string(two_split["id"].get<int>());
    const json dear = c.post(base + "/predict", {{"subject", "Dear trusted one"}}, 200);
    CHECK(dear["label"] == "spam");
    CHECK(dear["score"] == 1.0);
    CHECK(dear["feature_names"] == json::array({"dear_or_bless", "contains_re"}));
    CHECK(dear["feature_vector"] == json::array({1, 0}));
    CHECK(c.post(base + "/predict", {{"subject", "Re: Classifier software design"}}, 200)["label"] == "non-spam");
    CHECK(c.post(base + "/predict", {{"subject", ""}}, 400)["code"] == "empty_input");

    const json metrics = c.get(base + "/metrics");
    CHECK(metrics["train"] == two_split["train_metrics"]);
    CHECK(metrics["test"].is_null());

    const json fs = c.post("/feature-sets", {{"presets", {"all_caps", "dollar"}}}, 201);
    const json req = {{"kind", "forest"}, {"feature_set", fs["id"]}, {"train_corpus", train}, {"seed", 7}, {"n_trees", 9}};
    const json f1 = c.post("/models", req, 201);
    const json f2 = c.post("/models", req, 201);
    CHECK(f1["payload"] == f2["payload"]);
    CHECK(f1["id"] != f2["id"]);

    const json subset = c.post("/models", {{"kind", "logreg"}, {"train_corpus", train}, {"features", {"all_caps", "dollar"}}}, 201);
    CHECK(subset["feature_names"] == json::array({"all_caps", "dollar"}));

    const json empty_fs = c.post("/feature-sets", json::array(), 201);
    CHECK(c.post("/models", {{"kind", "logreg"}, {"feature_set", empty_fs["id"]}, {"train_corpus", train}}, 400)["code"] ==
          "zero_features");
    CHECK(c.post("/models", {{"kind", "logreg"}, {"feature_set", 99}, {"train_corpus", train}}, 400)["code"] ==
          "unknown_reference");
    CHECK(c.post("/models", {{"kind", "svm"}, {"train_corpus", train}}, 400)["code"] == "bad_hyperparameter");
    CHECK(c.post("/models/999/predict", {{"subject", "x"}}, 404)["code"] == "unknown_model");
    CHECK(c.get("/models/999/metrics", 404)["code"] == "unknown_model");
    CHECK(c.get("/models").size() == 5);
}

TEST_CASE("referential integrity on delete") {
    ApiService api;
    Client c{api};
    const std::uint64_t train = c.upload(sample_csv());
    const json fs = c.post("/feature-sets", {{"presets", {"dollar"}}}, 201);
    const json m = c.post("/models", {{"kind", "nb"}, {"feature_set", fs["id"]}, {"train_corpus", train}}, 201);
    CHECK(c.call("DELETE", "/corpora/1").status == 409);
    CHECK(c.call("DELETE", "/feature-sets/1").status == 409);
    CHECK(api.store().consistent());
    CHECK(c.call("DELETE", "/models/" + std::to_string(m["id"].get<int>())).status == 204);
    CHECK(c.call("DELETE", "/corpora/1").status == 204);
    CHECK(c.call("DELETE", "/feature-sets/1").status == 204);
    CHECK(c.call("DELETE", "/corpora/1").status == 404);
    CHECK(api.store().consistent());
    CHECK(c.upload(sample_csv()) == 2);
}

TEST_CASE("misc routes") {
    ApiService api;
    Client c{api};
    const HttpResponse health = c.call("GET", "/healthz");
    CHECK(health.status == 200);
    CHECK(health.body == "ok");
    const json spec = c.get("/api-spec");
    CHECK(spec["openapi"] == "3.0.3");
    CHECK(spec["paths"].contains("/models/{id}/predict"));
    CHECK(c.get("/nowhere", 404)["code"] == "not_found");
    CHECK(c.call("POST", "/models", "{not json").status == 400);
    CHECK(c.get("/presets").size() == preset_features().size());
}

TEST_CASE("session snapshot restores resources and metrics") {
    const auto dir = std::filesystem::temp_directory_path() / "spamlab_service_snapshot";
    std::filesystem::remove_all(dir);
    json metrics;
    {
        ApiService api(dir);
        Client c{api};
        const std::uint64_t train = c.upload(sample_csv());
        c.post("/models", {{"kind", "manual_tree"}, {"train_corpus", train}, {"tree", kTwoSplitTree}}, 201);
        metrics = c.get("/models/1/metrics");
        api.save_snapshot();
    }
    ApiService restored(dir);
    Client c{restored};
    CHECK(c.get("/models/1/metrics") == metrics);
    CHECK(restored.store().consistent());
    CHECK(c.upload(sample_csv()) == 2);
    std::filesystem::remove_all(dir);
}

TEST_CASE("concurrent requests keep the store consistent") {
    ApiService api;
    Client seed{api};
    const std::uint64_t train = seed.upload(sample_csv());
    std::vector<std::jthread> workers;
    for (int t = 0; t < 4; ++t) {
        workers.emplace_back([&api, train, t] {
            Client c{api};
            for (int i = 0; i < 10; ++i) {
                c.call("POST", "/corpora", sample_csv(), "text/csv");
                c.call("POST", "/models",
                       json{{"kind", "nb"}, {"train_corpus", train}, {"features", {"dollar", "all_caps"}}}.dump());
                c.call("DELETE", "/corpora/" + std::to_string(2 + t * 10 + i));
                c.call("GET", "/models");
            }
        });
    }
    workers.clear();
    CHECK(api.store().consistent());
    CHECK(api.store().models().size() == 40);
}

TEST_CASE("real HTTP round trip") {
    ApiService api;
    ServeOptions options;
    options.port = 0;
    std::promise<int> ready;
    std::thread server([&] { run_server(api, options, [&](int port) { ready.set_value(port); }); });
    const int port = ready.get_future().get();
    REQUIRE(port > 0);

    httplib::Client client("127.0.0.1", port);
    auto health = client.Get("/healthz");
    REQUIRE(health);
    CHECK(health->status == 200);
    CHECK(health->body == "ok");
    CHECK(health->get_header_value("Access-Control-Allow-Origin") == "*");

    auto up = client.Post("/corpora", sample_csv(), "text/csv");
    REQUIRE(up);
    CHECK(up->status == 201);

    httplib::MultipartFormDataItems items = {{"file", sample_csv(), "sample10.csv", "text/csv"}};
    auto multi = client.Post("/corpora", items);
    REQUIRE(multi);
    CHECK(json::parse(multi->body)["id"] == 2);

    auto err = client.Post("/rules/parse", R"({"source":"a AND"})", "application/json");
    REQUIRE(err);
    CHECK(err->status == 400);
    CHECK(json::parse(err->body)["position"] == 5);

    auto opts = client.Options("/models");
    REQUIRE(opts);
    CHECK(opts->status == 204);

    stop_server();
    server.join();
}

}  // TEST_SUITE
