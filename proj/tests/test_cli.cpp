#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <sstream>

#include "cli.hpp"
#include "oracles.hpp"
#include "spamlab/evalkit.hpp"
#include "spamlab/model.hpp"

using namespace spamlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    int code = 0;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    args.insert(args.begin(), "spamlab");
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("spamlab_cli_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

std::vector<std::string> train_args(const std::string& kind, const std::string& in, const std::string& out) {
    std::vector<std::string> a = {"train", "--model", kind, "--in", in, "--out", out, "--seed", "0"};
    if (kind == "manual_tree") {
        a.insert(a.end(), {"--tree", oracle::data_path("two_split_tree_spec.json")});
    } else if (kind == "ruleset") {
        a.insert(a.end(), {"--rules", oracle::data_path("two_split.rules")});
    } else {
        a.insert(a.end(), {"--preset", "dear_or_bless,contains_re,all_caps,dollar,multi_punct"});
    }
    if (kind == "forest") a.insert(a.end(), {"--n-trees", "11"});
    return a;
}

const std::string kSample = oracle::data_path("sample10.csv");

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("ingest summary") {
    const Outcome r = run({"ingest", "--in", kSample});
    CHECK(r.code == cli::kOk);
    CHECK(r.out == "10 subjects, 5 spam (50.0%), 5 non-spam\n");

    TempDir tmp;
    CHECK(run({"ingest", "--in", kSample, "--dedup", "--out", tmp.file("c.csv")}).code == cli::kOk);
    CHECK(load_csv_file(tmp.file("c.csv")).size() == 10);
}

TEST_CASE("null ruleset scores one half") {
    const Outcome text = run({"rules", "--rules", oracle::data_path("null.rules"), "--in", kSample});
    CHECK(text.code == cli::kOk);
    CHECK(text.out.find("0.500") != std::string::npos);
    const Outcome j = run({"rules", "--rules", oracle::data_path("null.rules"), "--in", kSample, "--json"});
    REQUIRE(j.code == cli::kOk);
    CHECK(json::parse(j.out)["accuracy"] == 0.5);
}

TEST_CASE("predict with the bundled tree") {
    const std::string model = oracle::data_path("two_split_tree.json");
    const Outcome dear = run({"predict", "--model", model, "--subject", "Dear trusted one"});
    CHECK(dear.code == cli::kOk);
    CHECK(dear.out == "spam score=1.000\n");
    const Outcome re = run({"predict", "--model", model, "--subject", "Re: Classifier software design", "--json"});
    CHECK(json::parse(re.out)["label"] == "non-spam");
}

TEST_CASE("usage errors exit with 1") {
    const Outcome missing = run({"train", "--model", "logreg"});
    CHECK(missing.code == cli::kUserError);
    CHECK(missing.err.find("error:") == 0);
    CHECK(missing.err.find("--in") != std::string::npos);
    CHECK(run({"bogus"}).code == cli::kUserError);
    CHECK(run({"ingest", "--in", "/nonexistent/file.csv"}).code == cli::kUserError);
    CHECK(run({"train", "--model", "svm", "--in", kSample, "--out", "/tmp/x.json"}).code == cli::kUserError);

    TempDir tmp;
    const Outcome zero = run({"train", "--model", "logreg", "--in", kSample, "--out", tmp.file("m.json")});
    CHECK(zero.code == cli::kUserError);
    CHECK(zero.err.find("zero_features") != std::string::npos);
}

TEST_CASE("train and evaluate are byte-identical across runs") {
    TempDir tmp;
    for (const std::string kind : {"nb", "logreg", "tree", "forest", "manual_tree", "ruleset"}) {
        CAPTURE(kind);
        std::string outputs[2];
        for (int i = 0; i < 2; ++i) {
            const std::string model = tmp.file(kind + std::to_string(i) + ".json");
            auto args = train_args(kind, kSample, model);
            args.push_back("--json");
            const Outcome t = run(args);
            REQUIRE_MESSAGE(t.code == cli::kOk, t.err);
            const Outcome e = run({"evaluate", "--model", model, "--in", kSample, "--json"});
            REQUIRE_MESSAGE(e.code == cli::kOk, e.err);
            outputs[i] = t.out + e.out;
            CHECK(json::parse(e.out)["model"] == kind);
        }
        CHECK(outputs[0] == outputs[1]);
    }
}

TEST_CASE("evaluate agrees with the comparison table") {
    TempDir tmp;
    const std::string path = tmp.file("tree.json");
    REQUIRE(run(train_args("tree", kSample, path)).code == cli::kOk);
    const Outcome e = run({"evaluate", "--model", path, "--in", kSample, "--json"});
    const TrainedModel m = load_model_file(path);
    const Corpus c = load_csv_file(kSample);
    const ComparisonTable table = compare({{"tree", &m}}, c, c);
    json got = json::parse(e.out);
    got.erase("model");
    CHECK(got == to_json(table.rows[0].train));
}

TEST_CASE("report lists models by file stem") {
    const std::string a = oracle::data_path("two_split_tree.json");
    const Outcome r = run({"report", "--models", a, "--train", kSample, "--test", kSample});
    CHECK(r.code == cli::kOk);
    CHECK(r.out.find("two_split_tree") != std::string::npos);
    const Outcome j = run({"report", "--models", a, "--train", kSample, "--test", kSample, "--json"});
    CHECK(json::parse(j.out)["rows"][0]["train"]["accuracy"] == 0.6);
}

TEST_CASE("featurize prints one row per subject") {
    const Outcome r = run({"featurize", "--in", kSample, "--preset", "dear_or_bless,contains_re"});
    REQUIRE(r.code == cli::kOk);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 11);
}

}  // TEST_SUITE
