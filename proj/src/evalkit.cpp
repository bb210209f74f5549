#include "spamlab/evalkit.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>

#include "spamlab/error.hpp"

namespace spamlab {

ConfusionMatrix confusion(const std::vector<Label>& predicted, const std::vector<Label>& truth) {
    if (predicted.size() != truth.size()) {
        throw Error(ErrorCode::LengthMismatch, "predicted (" + std::to_string(predicted.size()) + ") and truth (" +
                                                   std::to_string(truth.size()) + ") lengths differ");
    }
    if (predicted.empty()) throw Error(ErrorCode::EmptyInput, "no predictions to score");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool actual = truth[i] == Label::Spam;
        const bool said = predicted[i] == Label::Spam;
        if (actual && said) ++cm.tp;
        else if (actual) ++cm.fn;
        else if (said) ++cm.fp;
        else ++cm.tn;
    }
    return cm;
}

MetricsReport metrics(const ConfusionMatrix& cm) {
    if (cm.tp < 0 || cm.fn < 0 || cm.fp < 0 || cm.tn < 0) {
        throw Error(ErrorCode::BadRequest, "confusion counts must be non-negative");
    }
    if (cm.total() == 0) throw Error(ErrorCode::EmptyInput, "confusion matrix is empty");
    MetricsReport r;
    r.accuracy = Rational(cm.tp + cm.tn, cm.total());
    r.mcr = Rational(1) - r.accuracy;
    if (cm.tp + cm.fn > 0) r.sensitivity = Rational(cm.tp, cm.tp + cm.fn);
    if (cm.tn + cm.fp > 0) r.specificity = Rational(cm.tn, cm.tn + cm.fp);
    return r;
}

CrossTable cross_classify(const FeatureDef& feature, const Corpus& corpus) {
    if (corpus.empty()) throw Error(ErrorCode::EmptyCorpus, "cannot cross-classify an empty corpus");
    CrossTable t;
    for (const auto& item : corpus.items) {
        const bool value = eval_feature(feature, item.text);
        const bool spam = item.label == Label::Spam;
        (value ? (spam ? t.true_spam : t.true_non_spam) : (spam ? t.false_spam : t.false_non_spam)) += 1;
    }
    return t;
}

ScoredSplit score(const TrainedModel& model, const Corpus& corpus) {
    ScoredSplit s;
    s.confusion = confusion(model.predict_labels(corpus), corpus.labels());
    s.metrics = metrics(s.confusion);
    return s;
}

ComparisonTable compare(const std::vector<NamedModel>& models, const Corpus& train, const Corpus& test) {
    if (models.empty()) throw Error(ErrorCode::EmptyInput, "no models to compare");
    std::set<std::string> names;
    for (const auto& m : models) {
        if (!names.insert(m.name).second) throw Error(ErrorCode::BadRequest, "duplicate model name \"" + m.name + "\"");
        if (m.model == nullptr) throw Error(ErrorCode::BadRequest, "model \"" + m.name + "\" is missing");
    }
    ComparisonTable table;
    for (const auto& m : models) {
        ComparisonRow row;
        row.model_name = m.name;
        row.train = score(*m.model, train);
        if (!test.empty()) row.test = score(*m.model, test);
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string format_metric(const std::optional<Rational>& value) { return value ? value->to_decimal(3) : "n/a"; }

namespace {

nlohmann::json metric_json(const std::optional<Rational>& value) {
    if (!value) return nullptr;
    return nlohmann::json::parse(value->to_decimal(3));
}

std::vector<std::string> row_cells(const std::string& model, const std::string& split, const ScoredSplit& s) {
    return {model,
            split,
            format_metric(s.metrics.accuracy),
            format_metric(s.metrics.mcr),
            format_metric(s.metrics.sensitivity),
            format_metric(s.metrics.specificity),
            std::to_string(s.confusion.tp),
            std::to_string(s.confusion.fn),
            std::to_string(s.confusion.fp),
            std::to_string(s.confusion.tn)};
}

std::string render(const std::vector<std::vector<std::string>>& rows) {
    static const std::vector<std::string> header = {"model", "split", "accuracy", "MCR", "sensitivity",
                                                    "specificity", "TP", "FN", "FP", "TN"};
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) width[c] = header[c].size();
    for (const auto& r : rows) {
        for (std::size_t c = 0; c < r.size(); ++c) width[c] = std::max(width[c], r[c].size());
    }
    std::ostringstream out;
    auto emit = [&](const std::vector<std::string>& r) {
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (c > 0) out << "  ";
            // Text columns left-aligned, numbers right-aligned.
            if (c < 2) {
                out << std::left << std::setw(static_cast<int>(width[c])) << r[c];
            } else {
                out << std::right << std::setw(static_cast<int>(width[c])) << r[c];
            }
        }
        out << '\n';
    };
    emit(header);
    for (const auto& r : rows) emit(r);
    std::string text = out.str();
    // Drop padding before line ends.
    std::string trimmed;
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);) {
        line.erase(line.find_last_not_of(' ') + 1);
        trimmed += line + '\n';
    }
    return trimmed;
}

}  // namespace

nlohmann::json to_json(const ConfusionMatrix& cm) {
    return {{"tp", cm.tp}, {"fn", cm.fn}, {"fp", cm.fp}, {"tn", cm.tn}};
}

nlohmann::json to_json(const MetricsReport& r) {
    return {{"accuracy", metric_json(r.accuracy)},
            {"mcr", metric_json(r.mcr)},
            {"sensitivity", metric_json(r.sensitivity)},
            {"specificity", metric_json(r.specificity)}};
}

nlohmann::json to_json(const ScoredSplit& s) {
    nlohmann::json j = to_json(s.metrics);
    j["confusion"] = to_json(s.confusion);
    return j;
}

nlohmann::json to_json(const ComparisonTable& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& r : table.rows) {
        rows.push_back({{"model", r.model_name},
                        {"train", to_json(r.train)},
                        {"test", r.test ? to_json(*r.test) : nlohmann::json(nullptr)}});
    }
    return {{"rows", std::move(rows)}};
}

nlohmann::json to_json(const CrossTable& t) {
    return {{"true_spam", t.true_spam},
            {"true_non_spam", t.true_non_spam},
            {"false_spam", t.false_spam},
            {"false_non_spam", t.false_non_spam}};
}

std::string to_text(const ComparisonTable& table) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& r : table.rows) {
        rows.push_back(row_cells(r.model_name, "train", r.train));
        if (r.test) rows.push_back(row_cells(r.model_name, "test", *r.test));
    }
    return render(rows);
}

std::string to_text(const std::string& model_name, const std::string& split_name, const ScoredSplit& split) {
    return render({row_cells(model_name, split_name, split)});
}

}  // namespace spamlab
