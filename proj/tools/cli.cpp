#include "cli.hpp"

#include <pthread.h>
#include <signal.h>

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"

#include "spamlab/corpus.hpp"
#include "spamlab/error.hpp"
#include "spamlab/evalkit.hpp"
#include "spamlab/model.hpp"
#include "spamlab/ruledsl.hpp"
#include "spamlab/service.hpp"
#include "spamlab/textfeat.hpp"

namespace spamlab::cli {

using nlohmann::json;

namespace {

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::NotFound, "cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

json read_json_file(const std::string& path) {
    json j = json::parse(read_text_file(path), nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::BadRequest, "not valid JSON: " + path);
    return j;
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::NotFound, "cannot write file: " + path);
    out << text;
}

std::string fixed3(double v) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(3) << v;
    return s.str();
}

// Feature flags shared by featurize and train.
struct FeatureFlags {
    std::string file;
    std::vector<std::string> presets;
    bool bag_of_words = false;
    std::size_t min_freq = 4;
    std::string count_mode = "document";

    void attach(CLI::App* cmd) {
        cmd->add_option("--features", file, "feature definitions JSON")->check(CLI::ExistingFile);
        cmd->add_option("--preset", presets, "built-in feature names")->delimiter(',');
        cmd->add_flag("--bag-of-words", bag_of_words, "add one feature per frequent word");
        cmd->add_option("--min-freq", min_freq, "vocabulary threshold")->check(CLI::PositiveNumber);
        cmd->add_option("--count-mode", count_mode, "vocabulary counting")
            ->check(CLI::IsMember({"document", "total"}));
    }

    bool any() const { return !file.empty() || !presets.empty() || bag_of_words; }

    FeatureSet build(const Corpus& vocabulary_source) const {
        FeatureSet defs;
        if (!file.empty()) defs = load_feature_set_file(file);
        for (auto& d : resolve_features(presets, {})) defs.push_back(std::move(d));
        if (bag_of_words) {
            for (auto& d : bag_of_words_features(build_vocabulary(vocabulary_source, min_freq, count_mode_value()))) {
                defs.push_back(std::move(d));
            }
        }
        check_unique_names(defs);
        return defs;
    }

    CountMode count_mode_value() const {
        return count_mode == "total" ? CountMode::TotalOccurrences : CountMode::DocumentFrequency;
    }
};

std::string model_label(const std::string& path) { return std::filesystem::path(path).stem().string(); }

int cmd_ingest(const std::string& in, bool dedup, const std::string& out_path, std::ostream& out) {
    Corpus corpus = load_csv_file(in);
    const std::size_t before = corpus.size();
    if (dedup) corpus = deduplicate(corpus);
    const long long spam = static_cast<long long>(corpus.count(Label::Spam));
    const long long total = static_cast<long long>(corpus.size());
    out << total << " subjects, " << spam << " spam (" << Rational(spam * 100, total).to_decimal(1) << "%), "
        << (total - spam) << " non-spam\n";
    if (dedup) out << (before - corpus.size()) << " duplicates removed\n";
    if (!out_path.empty()) write_text_file(out_path, to_csv(corpus));
    return kOk;
}

int cmd_featurize(const std::string& in, const FeatureFlags& flags, const std::string& out_path, std::ostream& out) {
    if (!flags.any()) throw Error(ErrorCode::ZeroFeatures, "give --features, --preset or --bag-of-words");
    const Corpus corpus = load_csv_file(in);
    const FeatureSet defs = flags.build(corpus);
    const std::string csv = feature_matrix_to_csv(corpus, featurize(corpus, defs));
    if (out_path.empty()) {
        out << csv;
    } else {
        write_text_file(out_path, csv);
    }
    return kOk;
}

int cmd_rules(const std::string& rules_path, const std::string& in, const std::string& features_path, bool as_json,
              std::ostream& out) {
    const Corpus corpus = load_csv_file(in);
    TrainConfig config;
    config.kind = ModelKind::RuleSet;
    config.rules = load_ruleset_file(rules_path);
    const FeatureSet available = features_path.empty() ? FeatureSet{} : load_feature_set_file(features_path);
    const TrainedModel model = train_model(corpus, available, config);
    const ScoredSplit s = score(model, corpus);
    if (as_json) {
        out << to_json(s).dump(2) << '\n';
    } else {
        out << to_text(model_label(rules_path), "eval", s);
    }
    return kOk;
}

struct TrainFlags {
    std::string kind;
    std::string in;
    std::string out;
    std::string tree;
    std::string rules;
    FeatureFlags features;
    json params = json::object();
    bool as_json = false;
};

int cmd_train(const TrainFlags& f, std::ostream& out) {
    const ModelKind kind = parse_model_kind(f.kind);
    const Corpus corpus = load_csv_file(f.in);
    json params = f.params;
    if (kind == ModelKind::ManualTree) {
        if (f.tree.empty()) throw Error(ErrorCode::BadHyperparameter, "manual_tree needs --tree FILE");
        params["tree"] = read_json_file(f.tree);
    }
    if (kind == ModelKind::RuleSet) {
        if (f.rules.empty()) throw Error(ErrorCode::BadHyperparameter, "ruleset needs --rules FILE");
        params["rules"] = read_text_file(f.rules);
    }
    const TrainConfig config = train_config_from_json(kind, params);
    const bool structural = kind == ModelKind::ManualTree || kind == ModelKind::RuleSet;
    if (!structural && !f.features.any()) {
        throw Error(ErrorCode::ZeroFeatures, "give --features, --preset or --bag-of-words");
    }
    const FeatureSet defs = f.features.build(corpus);
    const TrainedModel model = train_model(corpus, defs, config);
    save_model_file(model, f.out);
    const ScoredSplit s = score(model, corpus);
    if (f.as_json) {
        out << json{{"kind", std::string(model_kind_name(kind))},
                    {"feature_names", model.feature_names()},
                    {"train", to_json(s)}}
                   .dump(2)
            << '\n';
    } else {
        out << "trained " << model_kind_name(kind) << " on " << corpus.size() << " subjects with "
            << model.features().size() << " features\n"
            << to_text(std::string(model_kind_name(kind)), "train", s);
    }
    return kOk;
}

int cmd_evaluate(const std::string& model_path, const std::string& in, bool as_json, std::ostream& out) {
    const TrainedModel model = load_model_file(model_path);
    const Corpus corpus = load_csv_file(in);
    const ScoredSplit s = score(model, corpus);
    if (as_json) {
        json j = to_json(s);
        j["model"] = std::string(model_kind_name(model.kind()));
        out << j.dump(2) << '\n';
    } else {
        out << to_text(model_label(model_path), "eval", s);
    }
    return kOk;
}

int cmd_predict(const std::string& model_path, const std::string& subject, bool as_json, std::ostream& out) {
    if (subject.empty()) throw Error(ErrorCode::EmptyInput, "subject is empty");
    const TrainedModel model = load_model_file(model_path);
    const Prediction p = model.predict_subject(subject);
    if (as_json) {
        out << json{{"label", std::string(label_name(p.label))}, {"score", p.score}}.dump() << '\n';
    } else {
        out << label_name(p.label) << " score=" << fixed3(p.score) << '\n';
    }
    return kOk;
}

int cmd_report(const std::vector<std::string>& model_paths, const std::string& train_path,
               const std::string& test_path, bool as_json, std::ostream& out) {
    const Corpus train = load_csv_file(train_path);
    const Corpus test = load_csv_file(test_path);
    std::vector<TrainedModel> models;
    models.reserve(model_paths.size());
    for (const auto& p : model_paths) models.push_back(load_model_file(p));
    std::vector<NamedModel> named;
    for (std::size_t i = 0; i < models.size(); ++i) {
        std::string name = model_label(model_paths[i]);
        for (std::size_t j = 0; j < i; ++j) {
            if (model_label(model_paths[j]) == name) name = model_paths[i];
        }
        named.push_back({name, &models[i]});
    }
    const ComparisonTable table = compare(named, train, test);
    if (as_json) {
        out << to_json(table).dump(2) << '\n';
    } else {
        out << to_text(table);
    }
    return kOk;
}

int cmd_serve(const ServeOptions& options, const std::string& data_dir, std::ostream& out) {
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    auto service = data_dir.empty() ? std::make_unique<ApiService>() : std::make_unique<ApiService>(data_dir);
    std::atomic<bool> done{false};
    std::jthread watcher([&] {
        const timespec tick{0, 200'000'000};
        while (!done.load()) {
            if (sigtimedwait(&signals, nullptr, &tick) > 0) {
                stop_server();
                return;
            }
        }
    });
    run_server(*service, options, [&](int port) {
        out << "listening on http://" << options.host << ':' << port << std::endl;
    });
    done.store(true);
    return kOk;
}

void print_usage(const CLI::App& app, std::ostream& err) {
    for (const CLI::App* sub : app.get_subcommands()) {
        err << sub->help();
        return;
    }
    err << app.help();
}

}  // namespace

int run(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Spam subject-line classification workbench", "spamlab"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "show help for every subcommand");

    std::string in;
    std::string out_path;
    bool as_json = false;

    bool dedup = false;
    auto* ingest = app.add_subcommand("ingest", "validate and summarize a corpus CSV");
    ingest->add_option("--in", in, "corpus CSV (subject,label)")->required()->check(CLI::ExistingFile);
    ingest->add_flag("--dedup", dedup, "drop repeated subject lines");
    ingest->add_option("--out", out_path, "write the normalized corpus here");

    FeatureFlags featurize_flags;
    auto* featurize_cmd = app.add_subcommand("featurize", "print the binary feature matrix as CSV");
    featurize_cmd->add_option("--in", in, "corpus CSV")->required()->check(CLI::ExistingFile);
    featurize_cmd->add_option("--out", out_path, "write the matrix here instead of stdout");
    featurize_flags.attach(featurize_cmd);

    std::string rules_path;
    std::string rules_features;
    auto* rules = app.add_subcommand("rules", "apply a ruleset and print its metrics");
    rules->add_option("--rules", rules_path, "ruleset text file")->required()->check(CLI::ExistingFile);
    rules->add_option("--in", in, "corpus CSV")->required()->check(CLI::ExistingFile);
    rules->add_option("--features", rules_features, "feature definitions JSON")->check(CLI::ExistingFile);
    rules->add_flag("--json", as_json, "print JSON");

    TrainFlags tf;
    double threshold = 0, alpha = 0, lambda = 0, tol = 0;
    int max_iter = 0, max_depth = 0;
    std::size_t min_leaf = 0, n_trees = 0, mtry = 0;
    std::uint64_t seed = 0;
    std::string impurity;
    bool no_bootstrap = false;
    auto* train = app.add_subcommand("train", "fit a model and save it as JSON");
    train->add_option("--model", tf.kind, "nb|logreg|tree|forest|manual_tree|ruleset")
        ->required()
        ->check(CLI::IsMember({"nb", "logreg", "tree", "forest", "manual_tree", "ruleset"}));
    train->add_option("--in", tf.in, "training corpus CSV")->required()->check(CLI::ExistingFile);
    train->add_option("--out", tf.out, "model JSON to write")->required();
    tf.features.attach(train);
    train->add_option("--tree", tf.tree, "manual tree description JSON")->check(CLI::ExistingFile);
    train->add_option("--rules", tf.rules, "ruleset text file")->check(CLI::ExistingFile);
    auto* o_seed = train->add_option("--seed", seed, "forest seed (default 0)");
    auto* o_threshold = train->add_option("--threshold", threshold, "spam when score exceeds this");
    auto* o_alpha = train->add_option("--alpha", alpha, "naive Bayes smoothing");
    auto* o_lambda = train->add_option("--lambda", lambda, "logistic L2 penalty");
    auto* o_max_iter = train->add_option("--max-iter", max_iter, "logistic Newton iterations");
    auto* o_tol = train->add_option("--tol", tol, "logistic gradient tolerance");
    auto* o_max_depth = train->add_option("--max-depth", max_depth, "tree depth limit");
    auto* o_min_leaf = train->add_option("--min-leaf", min_leaf, "rows per leaf");
    auto* o_impurity =
        train->add_option("--impurity", impurity, "gini|entropy")->check(CLI::IsMember({"gini", "entropy"}));
    auto* o_n_trees = train->add_option("--n-trees", n_trees, "forest size");
    auto* o_mtry = train->add_option("--mtry", mtry, "features tried per split (0 = sqrt)");
    train->add_flag("--no-bootstrap", no_bootstrap, "grow every tree on all rows");
    train->add_flag("--json", tf.as_json, "print JSON");

    std::string model_path;
    auto* evaluate = app.add_subcommand("evaluate", "score a saved model on a corpus");
    evaluate->add_option("--model", model_path, "model JSON")->required()->check(CLI::ExistingFile);
    evaluate->add_option("--in", in, "corpus CSV")->required()->check(CLI::ExistingFile);
    evaluate->add_flag("--json", as_json, "print JSON");

    std::string subject;
    auto* predict = app.add_subcommand("predict", "classify one subject line");
    predict->add_option("--model", model_path, "model JSON")->required()->check(CLI::ExistingFile);
    predict->add_option("--subject", subject, "subject line")->required();
    predict->add_flag("--json", as_json, "print JSON");

    std::vector<std::string> model_paths;
    std::string train_path, test_path;
    auto* report = app.add_subcommand("report", "compare saved models on train and test corpora");
    report->add_option("--models", model_paths, "model JSON files")
        ->required()
        ->delimiter(',')
        ->check(CLI::ExistingFile);
    report->add_option("--train", train_path, "training corpus CSV")->required()->check(CLI::ExistingFile);
    report->add_option("--test", test_path, "test corpus CSV")->required()->check(CLI::ExistingFile);
    report->add_flag("--json", as_json, "print JSON");

    ServeOptions serve_options;
    std::string data_dir;
    std::string static_dir;
    auto* serve = app.add_subcommand("serve", "run the HTTP API");
    serve->add_option("--host", serve_options.host, "bind address");
    serve->add_option("--port", serve_options.port, "TCP port")->check(CLI::Range(0, 65535));
    serve->add_option("--data", data_dir, "session directory");
    serve->add_option("--static", static_dir, "static files mounted at /")->check(CLI::ExistingDirectory);

    std::vector<std::string> args(argv.size() > 1 ? argv.begin() + 1 : argv.end(), argv.end());
    std::reverse(args.begin(), args.end());
    try {
        app.parse(args);
    } catch (const CLI::CallForHelp&) {
        out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n";
        print_usage(app, err);
        return kUserError;
    }

    auto set_if = [&](CLI::Option* opt, const char* key, auto value) {
        if (opt->count() > 0) tf.params[key] = value;
    };
    set_if(o_seed, "seed", seed);
    set_if(o_threshold, "threshold", threshold);
    set_if(o_alpha, "alpha", alpha);
    set_if(o_lambda, "lambda", lambda);
    set_if(o_max_iter, "max_iter", max_iter);
    set_if(o_tol, "tol", tol);
    set_if(o_max_depth, "max_depth", max_depth);
    set_if(o_min_leaf, "min_leaf", min_leaf);
    set_if(o_impurity, "impurity", impurity);
    set_if(o_n_trees, "n_trees", n_trees);
    set_if(o_mtry, "mtry", mtry);
    if (no_bootstrap) tf.params["bootstrap"] = false;

    try {
        if (ingest->parsed()) return cmd_ingest(in, dedup, out_path, out);
        if (featurize_cmd->parsed()) return cmd_featurize(in, featurize_flags, out_path, out);
        if (rules->parsed()) return cmd_rules(rules_path, in, rules_features, as_json, out);
        if (train->parsed()) return cmd_train(tf, out);
        if (evaluate->parsed()) return cmd_evaluate(model_path, in, as_json, out);
        if (predict->parsed()) return cmd_predict(model_path, subject, as_json, out);
        if (report->parsed()) return cmd_report(model_paths, train_path, test_path, as_json, out);
        if (serve->parsed()) {
            if (!static_dir.empty()) serve_options.static_dir = static_dir;
            return cmd_serve(serve_options, data_dir, out);
        }
    } catch (const Error& e) {
        if (e.code() == ErrorCode::Internal) {
            err << "internal error: " << e.what() << '\n';
            return kInternalError;
        }
        err << "error: " << code_string(e.code()) << ": " << e.what() << '\n';
        return kUserError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternalError;
    }
    err << app.help();
    return kUserError;
}

}  // namespace spamlab::cli
